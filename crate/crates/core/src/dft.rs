//! Shared DFT conventions.
//!
//! The normalized DFT matrix has entry `(m, n) = exp(-j2π·m·n/N) / √N`
//! (0-based). All FFT helpers here are unnormalized: the forward transform
//! computes `Σ x_i exp(-j2π f i / N)` and the inverse uses `exp(+j2π ...)`
//! without the `1/N` factor.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// In-place unnormalized forward FFT.
pub fn fft(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), false).process(buf);
    }
}

/// In-place unnormalized inverse FFT.
pub fn ifft(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), true).process(buf);
    }
}

/// `exp(j·theta)`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Dense normalized DFT matrix `F_N`.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |r, c| {
        // reduce the exponent first so large N keeps full phase accuracy
        let e = (r * c) % n;
        cis(-2.0 * PI * e as f64 / n as f64) * scale
    })
}

/// First `n` entries of column `k` of the `l·n`-point DFT matrix, rescaled
/// to unit norm: `exp(-j2π·i·k/(l·n)) / √n` for `i = 0..n`.
///
/// This is the lag steering vector used by every closed-form ACF expression.
pub fn lag_steering(n: usize, l: usize, k: usize) -> Vec<Complex64> {
    let len = n * l;
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| cis(-2.0 * PI * ((i * k) % len) as f64 / len as f64) * scale)
        .collect()
}

/// Periodic cross-correlation `c_k = Σ_i conj(a_i) · b_{(i+k) mod K}` via FFT.
pub fn circular_xcorr(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.len(), b.len());
    let len = a.len();
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    fft(&mut fa);
    fft(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    ifft(&mut fa);
    let inv = 1.0 / len as f64;
    fa.iter_mut().for_each(|v| *v *= inv);
    fa
}
