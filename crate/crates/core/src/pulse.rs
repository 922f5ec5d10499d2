//! Nyquist pulses in the folded-spectrum domain.
//!
//! A pulse on an `L`-times oversampled grid of `K = L·N` samples is stored as
//! its in-band folded spectrum `g` of length `N`: a nondecreasing vector in
//! `[0, 1]` with a zero plateau, a roll-off segment of `N_α` entries, and a
//! one plateau. The full length-`K` squared spectrum is
//!
//! ```text
//! G[n]         = 1 − g[n]    n = 0..N   (positive frequencies)
//! G[K − N + n] = g[n]        n = 0..N   (negative frequencies)
//! ```
//!
//! and zero elsewhere, so every alias pair sums to one (zero ISI) and `ΣG = N`.
//! Entry `n` sits at the half-integer frequency `n + 1/2` bins.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::dft::{cis, ifft};
use crate::error::{param, Error, Result};

/// Tolerance on bound, monotonicity and energy checks of a custom spectrum.
pub const SPECTRUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Rrc,
    Custom,
}

impl fmt::Display for PulseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rrc => "rrc",
            Self::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone)]
pub struct NyquistPulse {
    kind: PulseKind,
    n: usize,
    l: usize,
    n_alpha: usize,
    g: Vec<f64>,
    p: Vec<Complex64>,
}

/// Roll-off length on the `N`-bin grid: the integer nearest to `αN` with the
/// same parity as `N`, ties going to the smaller value.
pub fn rolloff_count(n: usize, alpha: f64) -> usize {
    let target = alpha * n as f64;
    let mut best = n % 2;
    for c in (n % 2..=n).step_by(2) {
        if (c as f64 - target).abs() < (best as f64 - target).abs() {
            best = c;
        }
    }
    best
}

impl NyquistPulse {
    /// Root-raised-cosine pulse: `g` is the raised-cosine response sampled at
    /// the half-integer bin centres.
    pub fn rrc(n: usize, l: usize, alpha: f64) -> Result<Self> {
        check_grid(n, l)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(param("alpha", format!("roll-off must lie in [0, 1], got {alpha}")));
        }
        let n_alpha = rolloff_count(n, alpha);
        let lo = (n - n_alpha) as f64 / 2.0;
        let hi = (n + n_alpha) as f64 / 2.0;
        let g = (0..n)
            .map(|i| {
                let u = i as f64 + 0.5;
                if u <= lo {
                    0.0
                } else if u >= hi {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * (u - lo) / n_alpha as f64).cos())
                }
            })
            .collect();
        Ok(Self::assemble(PulseKind::Rrc, n, l, n_alpha, g))
    }

    /// Ideal brick-wall pulse (`α = 0`).
    pub fn sinc(n: usize, l: usize) -> Result<Self> {
        Self::rrc(n, l, 0.0)
    }

    /// Pulse with a caller-chosen roll-off segment of length `N_α`; the
    /// plateaus are filled in. The segment must lie in `[0, 1]`, be
    /// nondecreasing and sum to `N_α/2`.
    pub fn custom(n: usize, l: usize, rolloff: &[f64]) -> Result<Self> {
        check_grid(n, l)?;
        let n_alpha = rolloff.len();
        if n_alpha > n || (n - n_alpha) % 2 != 0 {
            return Err(param(
                "rolloff",
                format!("segment length {n_alpha} must not exceed N = {n} and share its parity"),
            ));
        }
        let start = (n - n_alpha) / 2;
        let mut g = vec![0.0; n];
        g[start..start + n_alpha].copy_from_slice(rolloff);
        g[start + n_alpha..].iter_mut().for_each(|v| *v = 1.0);
        validate_spectrum(&g)?;
        Ok(Self::assemble(PulseKind::Custom, n, l, n_alpha, g))
    }

    /// Parse a roll-off segment file: one real per line, `#` comments allowed.
    pub fn from_text(n: usize, l: usize, text: &str) -> Result<Self> {
        let mut seg = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            seg.push(line.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                reason: e.to_string(),
            })?);
        }
        Self::custom(n, l, &seg)
    }

    fn assemble(kind: PulseKind, n: usize, l: usize, n_alpha: usize, g: Vec<f64>) -> Self {
        let full = full_spectrum(&g, l);
        let p = spectrum_to_time(&full, n);
        Self {
            kind,
            n,
            l,
            n_alpha,
            g,
            p,
        }
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Oversampled length `K = L·N`.
    pub fn len(&self) -> usize {
        self.n * self.l
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    /// Roll-off actually realized on the grid, `N_α / N`.
    pub fn alpha_effective(&self) -> f64 {
        self.n_alpha as f64 / self.n as f64
    }

    /// Index range of the roll-off segment within `g`.
    pub fn rolloff_range(&self) -> std::ops::Range<usize> {
        let start = (self.n - self.n_alpha) / 2;
        start..start + self.n_alpha
    }

    /// In-band folded spectrum `g`.
    pub fn spectrum(&self) -> &[f64] {
        &self.g
    }

    /// Full length-`K` squared spectrum.
    pub fn full_spectrum(&self) -> Vec<f64> {
        full_spectrum(&self.g, self.l)
    }

    /// Unit-energy time samples `p`.
    pub fn time_samples(&self) -> &[Complex64] {
        &self.p
    }

    /// `Σ g(1 − g)`, the roll-off energy that drives the sea-level ripple.
    pub fn rolloff_energy(&self) -> f64 {
        self.g.iter().map(|g| g * (1.0 - g)).sum()
    }

    /// Folded response `g̃_k`: entry `n` is `(1 − g_n) + g_n·e^{−j2πk/L}`.
    pub fn folded_response(&self, k: usize) -> Vec<Complex64> {
        let z = cis(-2.0 * PI * (k % self.l) as f64 / self.l as f64);
        self.g
            .iter()
            .map(|&g| Complex64::new(1.0 - g, 0.0) + z * g)
            .collect()
    }

    /// Mean ACF `E R_k = √N·f̃ᴴ g̃_k`, evaluated directly in `O(N)`.
    pub fn mean_acf(&self, k: usize) -> Complex64 {
        let kk = self.len();
        let k = k % kk;
        let gt = self.folded_response(k);
        gt.iter()
            .enumerate()
            .map(|(i, v)| v * cis(2.0 * PI * ((i * k) % kk) as f64 / kk as f64))
            .sum()
    }

    /// Iceberg `N|f̃ᴴ g̃_k|²`, the squared pulse ACF scaled by `N²`.
    pub fn iceberg(&self, k: usize) -> Result<f64> {
        if k >= self.len() {
            return Err(param("k", format!("lag {k} outside [0, {})", self.len())));
        }
        Ok(self.mean_acf(k).norm_sqr())
    }

    /// Iceberg at every lag via one inverse FFT of the full spectrum.
    pub fn iceberg_profile(&self) -> Vec<f64> {
        self.mean_acf_profile().iter().map(|v| v.norm_sqr()).collect()
    }

    /// `E R_k` at every lag.
    pub fn mean_acf_profile(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self
            .full_spectrum()
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect();
        ifft(&mut buf);
        buf
    }
}

fn check_grid(n: usize, l: usize) -> Result<()> {
    if n < 2 {
        return Err(param("n", format!("symbol count must be >= 2, got {n}")));
    }
    if l < 1 {
        return Err(param("l", "oversampling ratio must be >= 1"));
    }
    Ok(())
}

/// Check that a length-`N` folded spectrum is bounded, nondecreasing and
/// carries half the energy, reporting the first offending index.
pub fn validate_spectrum(g: &[f64]) -> Result<()> {
    for (i, &v) in g.iter().enumerate() {
        if !v.is_finite() || !(-SPECTRUM_TOL..=1.0 + SPECTRUM_TOL).contains(&v) {
            return Err(Error::Spectrum {
                index: i,
                reason: format!("value {v} outside [0, 1]"),
            });
        }
        if i > 0 && v < g[i - 1] - SPECTRUM_TOL {
            return Err(Error::Spectrum {
                index: i,
                reason: format!("decreases from {} to {v}", g[i - 1]),
            });
        }
    }
    let sum: f64 = g.iter().sum();
    let half = g.len() as f64 / 2.0;
    if (sum - half).abs() > SPECTRUM_TOL * g.len() as f64 {
        return Err(Error::Spectrum {
            index: g.len(),
            reason: format!("sum is {sum}, expected {half}"),
        });
    }
    Ok(())
}

/// Canonical assembly of the full length-`L·N` squared spectrum from `g`.
pub fn full_spectrum(g: &[f64], l: usize) -> Vec<f64> {
    let n = g.len();
    let k = n * l;
    let mut full = vec![0.0; k];
    for (i, &v) in g.iter().enumerate() {
        full[i] += 1.0 - v;
        full[k - n + i] += v;
    }
    full
}

/// Zero-phase time samples from a full squared spectrum summing to `n`:
/// `p = IDFT(√(K·G/N)) / K`, which has unit energy.
pub fn spectrum_to_time(full: &[f64], n: usize) -> Vec<Complex64> {
    let k = full.len();
    let scale = k as f64 / n as f64;
    let mut buf: Vec<Complex64> = full
        .iter()
        .map(|&v| Complex64::new((v.max(0.0) * scale).sqrt(), 0.0))
        .collect();
    ifft(&mut buf);
    let inv = 1.0 / k as f64;
    buf.iter_mut().for_each(|v| *v *= inv);
    buf
}

/// dB relative to the mainlobe peak `N²`.
pub fn to_db(value: f64, n: usize) -> f64 {
    10.0 * (value / (n as f64 * n as f64)).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::circular_xcorr;

    fn energy(p: &[Complex64]) -> f64 {
        p.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Continuous-time RRC impulse response with unit symbol period.
    fn rrc_time(t: f64, beta: f64) -> f64 {
        if t.abs() < 1e-12 {
            return 1.0 - beta + 4.0 * beta / PI;
        }
        if beta > 0.0 && ((4.0 * beta * t).abs() - 1.0).abs() < 1e-12 {
            let a = PI / (4.0 * beta);
            return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
        }
        let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
        num / (PI * t * (1.0 - (4.0 * beta * t).powi(2)))
    }

    #[test]
    fn rolloff_rounding() {
        assert_eq!(rolloff_count(128, 0.35), 44);
        assert_eq!(rolloff_count(128, 0.0), 0);
        assert_eq!(rolloff_count(128, 1.0), 128);
        assert_eq!(rolloff_count(64, 0.35), 22);
        // 0.5 → 5 on a grid of even counts: 4 and 6 tie, smaller wins
        assert_eq!(rolloff_count(10, 0.5), 4);
        assert_eq!(rolloff_count(9, 0.0), 1);
        assert_eq!(rolloff_count(9, 1.0), 9);
    }

    #[test]
    fn sinc_is_a_half_step() {
        let p = NyquistPulse::sinc(128, 10).unwrap();
        let g = p.spectrum();
        assert!(g.iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(g.iter().filter(|&&v| v == 1.0).count(), 64);
        assert_eq!(p.rolloff_energy(), 0.0);
    }

    #[test]
    fn rrc_spectrum_shape() {
        let p = NyquistPulse::rrc(128, 10, 0.35).unwrap();
        let g = p.spectrum();
        assert!(g.windows(2).all(|w| w[1] >= w[0]));
        assert!((g.iter().sum::<f64>() - 64.0).abs() < 1e-12);
        assert_eq!(p.n_alpha(), 44);
        assert!((p.alpha_effective() - 0.34375).abs() < 1e-15);
        let full = p.full_spectrum();
        assert!((full.iter().sum::<f64>() - 128.0).abs() < 1e-12);
        assert!(full[128..1280 - 128].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_energy() {
        for alpha in [0.0, 0.1, 0.35, 1.0] {
            let p = NyquistPulse::rrc(64, 4, alpha).unwrap();
            assert!((energy(p.time_samples()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sinc_nyquist_zeros() {
        let p = NyquistPulse::sinc(32, 4).unwrap();
        let t = p.time_samples();
        let peak = t[0].norm();
        for m in 1..32 {
            assert!(t[m * 4].norm() < 1e-12 * peak, "m={m}");
        }
    }

    #[test]
    fn rrc_matches_closed_form_impulse_response() {
        let (n, l) = (32, 4);
        let k = n * l;
        let p = NyquistPulse::rrc(n, l, 0.35).unwrap();
        let beta = p.alpha_effective();
        // periodized RRC; half-bin grid offset gives the alternating sign and phase ramp
        let oracle: Vec<Complex64> = (0..k)
            .map(|i| {
                let s: f64 = (-4000i64..=4000)
                    .map(|m| {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        sign * rrc_time((i as f64 + (m * k as i64) as f64) / l as f64, beta)
                    })
                    .sum();
                cis(-PI * i as f64 / k as f64) * s
            })
            .collect();
        let scale: Complex64 = oracle.iter().zip(p.time_samples()).map(|(o, v)| o.conj() * v).sum::<Complex64>()
            / energy(&oracle);
        let err = oracle
            .iter()
            .zip(p.time_samples())
            .map(|(o, v)| (o * scale - v).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max deviation {err}");
    }

    #[test]
    fn iceberg_lag_zero_and_nyquist_zeros() {
        for alpha in [0.0, 0.35, 1.0] {
            let p = NyquistPulse::rrc(64, 4, alpha).unwrap();
            let nn = 64.0 * 64.0;
            assert!((p.iceberg(0).unwrap() - nn).abs() < 1e-9 * nn);
            for m in 1..64 {
                assert!(p.iceberg(m * 4).unwrap() <= 1e-9 * nn);
            }
        }
    }

    #[test]
    fn iceberg_matches_time_domain_correlation() {
        let p = NyquistPulse::rrc(32, 5, 0.5).unwrap();
        let r = circular_xcorr(p.time_samples(), p.time_samples());
        let prof = p.iceberg_profile();
        let nn = 32.0 * 32.0;
        for k in 0..p.len() {
            let td = nn * r[k].norm_sqr();
            let direct = p.iceberg(k).unwrap();
            assert!((td - direct).abs() <= 1e-8 * td.max(1e-6 * nn), "k={k}: {td} vs {direct}");
            assert!((prof[k] - direct).abs() <= 1e-8 * direct.max(1e-6 * nn));
        }
    }

    #[test]
    fn frozen_rrc_profile() {
        // reference values from an independent dense evaluation, N=128 L=10 alpha=0.35
        let p = NyquistPulse::rrc(128, 10, 0.35).unwrap();
        let expect = [0.0, -0.15, -0.62, -1.41, -2.57, -4.16, -6.29, -9.16, -13.24, -20.01];
        for (k, e) in expect.iter().enumerate() {
            let db = to_db(p.iceberg(k).unwrap(), 128);
            assert!((db - e).abs() < 0.006, "k={k}: {db}");
        }
        assert!(p.iceberg(10).unwrap() < 1e-9 * 128.0 * 128.0);
    }

    #[test]
    fn mainlobe_first_zeros_at_l() {
        let p = NyquistPulse::rrc(64, 8, 0.35).unwrap();
        let prof = p.iceberg_profile();
        let k = p.len();
        for j in 1..8 {
            assert!(prof[j] > 1e-3 * prof[0]);
            assert!(prof[k - j] > 1e-3 * prof[0]);
        }
        assert!(prof[8] < 1e-9 * prof[0]);
        assert!(prof[k - 8] < 1e-9 * prof[0]);
    }

    #[test]
    fn custom_segment_validation() {
        assert!(NyquistPulse::custom(16, 4, &[0.5; 4]).is_ok());
        let err = NyquistPulse::custom(16, 4, &[0.2, 0.9, 0.1, 0.8]).unwrap_err();
        assert!(matches!(err, Error::Spectrum { index: 8, .. }), "{err}");
        assert!(NyquistPulse::custom(16, 4, &[0.1, 0.2, 0.3, 0.4]).is_err());
        assert!(NyquistPulse::custom(16, 4, &[0.5; 3]).is_err());
        let text = "0.25\n0.75 # upper\n";
        let p = NyquistPulse::from_text(16, 2, text).unwrap();
        assert_eq!(p.rolloff_range(), 7..9);
    }

    #[test]
    fn bad_parameters() {
        assert!(NyquistPulse::rrc(64, 4, 1.5).is_err());
        assert!(NyquistPulse::rrc(64, 4, -0.1).is_err());
        assert!(NyquistPulse::rrc(64, 0, 0.3).is_err());
        let p = NyquistPulse::rrc(16, 2, 0.3).unwrap();
        assert!(p.iceberg(32).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn rrc_invariants(n in 2usize..80, l in 1usize..7, alpha in 0.0f64..=1.0) {
                let p = NyquistPulse::rrc(n, l, alpha).unwrap();
                let g = p.spectrum();
                prop_assert!(g.iter().all(|&v| (0.0..=1.0).contains(&v)));
                prop_assert!(g.windows(2).all(|w| w[1] >= w[0]));
                prop_assert!((p.full_spectrum().iter().sum::<f64>() - n as f64).abs() < 1e-9);
                prop_assert!((energy(p.time_samples()) - 1.0).abs() < 1e-12);
                let prof = p.iceberg_profile();
                let k = p.len();
                for j in 1..k {
                    prop_assert!((prof[j] - prof[k - j]).abs() <= 1e-9 * prof[0]);
                }
                for m in 1..n {
                    prop_assert!(prof[m * l] <= 1e-9 * prof[0]);
                }
            }
        }
    }
}
