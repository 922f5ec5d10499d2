//! Closed-form expected squared ACF.
//!
//! For i.i.d. symbols with kurtosis `μ₄`, unitary basis `U` and Nyquist pulse
//! `g`, the expected squared periodic ACF averaged over `M` slots splits as
//!
//! ```text
//! E|R̄_k|² = N|f̃ᴴ g̃_k|²  +  (1/M)[‖g̃_k‖² + (μ₄ − 2)·N·‖Ṽ(g̃_k ⊙ f̃*)‖²]
//!           (iceberg)        (sea level)
//! ```
//!
//! where `f̃` is the unit-norm lag steering vector and `Ṽ = |UᴴF_Nᴴ|²`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::constellation::ConstellationSpec;
use crate::dft::lag_steering;
use crate::error::{param, Error, Result};
use crate::modulation::ModulationBasis;
use crate::pulse::NyquistPulse;

pub use crate::pulse::to_db;

/// Hard cap on the number of outcomes enumerated by [`fourth_moment_matrix`].
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// Per-lag decomposition for `k = 0..L·N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfStats {
    pub n: usize,
    pub m: usize,
    pub mu4: f64,
    pub iceberg: Vec<f64>,
    pub sea: Vec<f64>,
    pub total: Vec<f64>,
}

impl AcfStats {
    fn from_parts(n: usize, m: usize, mu4: f64, parts: Vec<(f64, f64)>) -> Self {
        let (iceberg, sea): (Vec<f64>, Vec<f64>) = parts.into_iter().unzip();
        let total = iceberg.iter().zip(&sea).map(|(a, b)| a + b).collect();
        Self {
            n,
            m,
            mu4,
            iceberg,
            sea,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty()
    }

    pub fn total_db(&self) -> Vec<f64> {
        self.total.iter().map(|&v| to_db(v, self.n)).collect()
    }

    pub fn iceberg_db(&self) -> Vec<f64> {
        self.iceberg.iter().map(|&v| to_db(v, self.n)).collect()
    }

    pub fn sea_db(&self) -> Vec<f64> {
        self.sea.iter().map(|&v| to_db(v, self.n)).collect()
    }
}

fn check_common(pulse: &NyquistPulse, mu4: f64, m: usize) -> Result<()> {
    if m < 1 {
        return Err(param("m", "integration count must be >= 1"));
    }
    if mu4.is_nan() || mu4 < 1.0 {
        return Err(param("mu4", format!("kurtosis must be >= 1, got {mu4}")));
    }
    if pulse.n() < 2 {
        return Err(param("n", "pulse has fewer than two symbols"));
    }
    Ok(())
}

/// Generic evaluation for an arbitrary unitary basis.
pub fn expected_sq_acf(basis: &ModulationBasis, pulse: &NyquistPulse, mu4: f64, m: usize) -> Result<AcfStats> {
    check_common(pulse, mu4, m)?;
    let n = pulse.n();
    if basis.n() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: basis.n(),
            context: "basis order vs pulse symbol count",
        });
    }
    let vt = basis.unistochastic().map(|v| Complex64::new(v, 0.0));
    let nf = n as f64;
    let parts = (0..pulse.len())
        .into_par_iter()
        .map(|k| {
            let gt = pulse.folded_response(k);
            let f = lag_steering(n, pulse.l(), k);
            let inner: Complex64 = f.iter().zip(&gt).map(|(a, b)| a.conj() * b).sum();
            let iceberg = nf * inner.norm_sqr();
            let w = DVector::from_iterator(n, gt.iter().zip(&f).map(|(a, b)| a * b.conj()));
            let spread = &vt * w;
            let gnorm: f64 = gt.iter().map(|v| v.norm_sqr()).sum();
            // exact zeros (OFDM with constant-modulus symbols) can round slightly negative
            let sea = ((gnorm + (mu4 - 2.0) * nf * spread.norm_squared()) / m as f64).max(0.0);
            (iceberg, sea)
        })
        .collect();
    Ok(AcfStats::from_parts(n, m, mu4, parts))
}

fn check_lag(pulse: &NyquistPulse, k: usize) -> Result<()> {
    if k >= pulse.len() {
        return Err(param("k", format!("lag {k} outside [0, {})", pulse.len())));
    }
    Ok(())
}

/// OFDM specialization: `(iceberg, (μ₄ − 1)/M · ‖g̃_k‖²)`.
pub fn ofdm_sq_acf(pulse: &NyquistPulse, mu4: f64, m: usize, k: usize) -> Result<(f64, f64)> {
    check_common(pulse, mu4, m)?;
    check_lag(pulse, k)?;
    let iceberg = pulse.iceberg(k)?;
    Ok((iceberg, (mu4 - 1.0) / m as f64 * sea_waves(pulse, k)))
}

/// Single-carrier specialization:
/// `((1 + (μ₄ − 2)/(MN))·iceberg, ‖g̃_k‖²/M)`.
///
/// The first element already includes the kurtosis-dependent share of the
/// variance, so the two elements still add up to `E|R̄_k|²`.
pub fn sc_sq_acf(pulse: &NyquistPulse, mu4: f64, m: usize, k: usize) -> Result<(f64, f64)> {
    check_common(pulse, mu4, m)?;
    check_lag(pulse, k)?;
    let iceberg = pulse.iceberg(k)?;
    let scale = 1.0 + (mu4 - 2.0) / (m as f64 * pulse.n() as f64);
    Ok((scale * iceberg, sea_waves(pulse, k) / m as f64))
}

/// Both SC and OFDM specializations over every lag, in [`AcfStats`] form
/// (the SC sea includes the scaled-iceberg share).
pub fn specialized_sq_acf(pulse: &NyquistPulse, mu4: f64, m: usize, ofdm: bool) -> Result<AcfStats> {
    check_common(pulse, mu4, m)?;
    let n = pulse.n();
    let ice = pulse.iceberg_profile();
    let parts = ice
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let w = sea_waves(pulse, k);
            let sea = if ofdm {
                (mu4 - 1.0) * w / m as f64
            } else {
                w / m as f64 + (mu4 - 2.0) / (m as f64 * n as f64) * a
            };
            (a, sea)
        })
        .collect();
    Ok(AcfStats::from_parts(n, m, mu4, parts))
}

/// Sea waves `‖g̃_k‖² = N − 2(1 − cos 2πk/L)·Σ g(1 − g)`.
pub fn sea_waves(pulse: &NyquistPulse, k: usize) -> f64 {
    let phase = 2.0 * PI * (k % pulse.l()) as f64 / pulse.l() as f64;
    pulse.n() as f64 - 2.0 * (1.0 - phase.cos()) * pulse.rolloff_energy()
}

/// `E R_k = √N·f̃ᴴ g̃_k`; it depends on neither the basis nor the alphabet.
pub fn mean_acf(pulse: &NyquistPulse, k: usize) -> Result<Complex64> {
    check_lag(pulse, k)?;
    Ok(pulse.mean_acf(k))
}

/// `E(ṽṽᴴ)` with `ṽ = vec(ssᴴ)` (column-major) by exact enumeration over
/// `𝒮ⁿ`. Oracle use only.
pub fn fourth_moment_matrix(c: &ConstellationSpec, n: usize) -> Result<DMatrix<f64>> {
    if !c.is_finite() {
        return Err(param("constellation", "enumeration needs a finite alphabet"));
    }
    if n < 1 {
        return Err(param("n", "vector length must be >= 1"));
    }
    let size = c.points().len();
    let outcomes = (size as f64).powi(n as i32);
    if outcomes > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(outcomes));
    }
    let dim = n * n;
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    let mut idx = vec![0usize; n];
    let mut v = DVector::<Complex64>::zeros(dim);
    for _ in 0..outcomes as usize {
        let s: Vec<Complex64> = idx.iter().map(|&i| c.points()[i]).collect();
        let w: f64 = idx.iter().map(|&i| c.probs()[i]).product();
        for j in 0..n {
            for i in 0..n {
                v[i + j * n] = s[i] * s[j].conj();
            }
        }
        acc += (&v * v.adjoint()) * Complex64::new(w, 0.0);
        // odometer increment
        for d in idx.iter_mut() {
            *d += 1;
            if *d < size {
                break;
            }
            *d = 0;
        }
    }
    let worst = acc.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(Error::Constellation(format!(
            "fourth-moment matrix has imaginary part {worst:.3e}"
        )));
    }
    Ok(acc.map(|z| z.re))
}

/// The structured pattern `E(ṽṽᴴ)` must take for an admissible alphabet.
pub fn fourth_moment_pattern(mu4: f64, n: usize) -> DMatrix<f64> {
    let dim = n * n;
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for k in 0..n {
            s[(i + i * n, k + k * n)] = if i == k { mu4 } else { 1.0 };
        }
        for j in 0..n {
            if i != j {
                s[(i + j * n, i + j * n)] = 1.0;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::BasisKind;
    use crate::rng::stream;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn decomposition_identity_and_lag_zero() {
        let p = NyquistPulse::rrc(16, 4, 0.35).unwrap();
        for kind in [BasisKind::Sc, BasisKind::Ofdm, BasisKind::Cdma] {
            let b = ModulationBasis::new(kind, 16).unwrap();
            for (mu4, m) in [(1.0, 1), (1.32, 10), (2.0, 1), (2.5, 100)] {
                let s = expected_sq_acf(&b, &p, mu4, m).unwrap();
                for k in 0..s.len() {
                    assert_eq!(s.total[k], s.iceberg[k] + s.sea[k]);
                    assert!(s.sea[k] >= 0.0);
                }
                let want = 256.0 + (mu4 - 1.0) * 16.0 / m as f64;
                assert!(rel(s.total[0], want) < 1e-9);
            }
        }
    }

    #[test]
    fn ofdm_psk_has_no_sea() {
        let p = NyquistPulse::rrc(32, 4, 0.5).unwrap();
        let b = ModulationBasis::ofdm(32).unwrap();
        let s = expected_sq_acf(&b, &p, 1.0, 1).unwrap();
        assert!(s.sea.iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn generic_matches_specializations() {
        let p = NyquistPulse::rrc(32, 5, 0.35).unwrap();
        for (ofdm, kind) in [(true, BasisKind::Ofdm), (false, BasisKind::Sc)] {
            let b = ModulationBasis::new(kind, 32).unwrap();
            for mu4 in [1.0, 1.32, 2.0, 2.5] {
                for m in [1, 7] {
                    let g = expected_sq_acf(&b, &p, mu4, m).unwrap();
                    let sp = specialized_sq_acf(&p, mu4, m, ofdm).unwrap();
                    for k in 0..g.len() {
                        let scale = g.total[0];
                        assert!((g.total[k] - sp.total[k]).abs() <= 1e-10 * scale, "k={k}");
                        let pair = if ofdm {
                            ofdm_sq_acf(&p, mu4, m, k).unwrap()
                        } else {
                            sc_sq_acf(&p, mu4, m, k).unwrap()
                        };
                        assert!((pair.0 + pair.1 - g.total[k]).abs() <= 1e-10 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn ofdm_sea_at_nyquist_lags_and_integration() {
        let p = NyquistPulse::rrc(64, 4, 0.35).unwrap();
        let (_, sea) = ofdm_sq_acf(&p, 1.32, 3, 8).unwrap();
        assert!(rel(sea, 0.32 * 64.0 / 3.0) < 1e-12);
        let (_, s1) = ofdm_sq_acf(&p, 1.32, 1, 13).unwrap();
        let (_, s100) = ofdm_sq_acf(&p, 1.32, 100, 13).unwrap();
        assert!(rel(s1 / s100, 100.0) < 1e-12);
    }

    #[test]
    fn sc_equals_ofdm_for_gaussian() {
        let p = NyquistPulse::rrc(32, 4, 0.35).unwrap();
        for k in 0..p.len() {
            let a = ofdm_sq_acf(&p, 2.0, 1, k).unwrap();
            let b = sc_sq_acf(&p, 2.0, 1, k).unwrap();
            assert!((a.0 + a.1 - b.0 - b.1).abs() < 1e-10 * 1024.0);
        }
    }

    #[test]
    fn sea_waves_closed_form_and_ripple() {
        let p = NyquistPulse::rrc(128, 10, 0.35).unwrap();
        for k in 0..40 {
            let direct: f64 = p.folded_response(k).iter().map(|v| v.norm_sqr()).sum();
            assert!((direct - sea_waves(&p, k)).abs() < 1e-10);
        }
        let period: Vec<f64> = (0..10).map(|k| sea_waves(&p, k)).collect();
        let argmin = (0..10).min_by(|&a, &b| period[a].total_cmp(&period[b])).unwrap();
        assert_eq!(argmin, 5);
        assert_eq!(sea_waves(&p, 20), 128.0);
        let sinc = NyquistPulse::sinc(128, 10).unwrap();
        assert!((0..50).all(|k| sea_waves(&sinc, k) == 128.0));
    }

    #[test]
    fn far_lag_ratio_for_16qam() {
        let mu4 = 1.32f64;
        let db = 10.0 * (1.0 / (mu4 - 1.0)).log10();
        assert!((db - 4.95).abs() < 0.05);
    }

    #[test]
    fn mean_acf_basics() {
        let p = NyquistPulse::rrc(32, 4, 0.35).unwrap();
        assert!((mean_acf(&p, 0).unwrap() - Complex64::new(32.0, 0.0)).norm() < 1e-12);
        for k in [1, 5, 77] {
            let v = mean_acf(&p, k).unwrap();
            assert!((v.norm_sqr() - p.iceberg(k).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn fourth_moment_qpsk_and_16qam() {
        let q = ConstellationSpec::psk(4).unwrap();
        let s = fourth_moment_matrix(&q, 2).unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        );
        assert!((s - expect).amax() < 1e-12);
        let qam = ConstellationSpec::qam(16).unwrap();
        let s = fourth_moment_matrix(&qam, 2).unwrap();
        assert!((s - fourth_moment_pattern(1.32, 2)).amax() < 1e-12);
    }

    #[test]
    fn fourth_moment_guard() {
        let qam = ConstellationSpec::qam(1024).unwrap();
        assert!(matches!(fourth_moment_matrix(&qam, 2), Err(Error::EnumerationTooLarge(_))));
        assert!(fourth_moment_matrix(&ConstellationSpec::gaussian(), 2).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = NyquistPulse::rrc(16, 4, 0.35).unwrap();
        let b = ModulationBasis::sc(8).unwrap();
        assert!(expected_sq_acf(&b, &p, 1.0, 1).is_err());
    }

    #[test]
    fn permuted_phase_rotated_ofdm_matches_ofdm() {
        // Π·Diag(θ) applied to F_Nᴴ leaves Ṽ a permutation matrix
        let n = 16;
        let p = NyquistPulse::rrc(n, 4, 0.35).unwrap();
        let base = ModulationBasis::ofdm(n).unwrap();
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect();
        let u = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            base.matrix()[(i, perm[j])] * Complex64::from_polar(1.0, 0.37 * j as f64)
        });
        let rotated = ModulationBasis::custom(u).unwrap();
        let a = expected_sq_acf(&base, &p, 1.32, 1).unwrap();
        let b = expected_sq_acf(&rotated, &p, 1.32, 1).unwrap();
        for k in 0..a.len() {
            assert!((a.sea[k] - b.sea[k]).abs() < 1e-9);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn sub_gaussian_ofdm_minimizes_sea(seed in any::<u64>(), mu4 in 1.0f64..2.0) {
                let p = NyquistPulse::rrc(16, 4, 0.35).unwrap();
                let u = ModulationBasis::random_unitary(16, &mut stream(seed, 0)).unwrap();
                let o = expected_sq_acf(&ModulationBasis::ofdm(16).unwrap(), &p, mu4, 1).unwrap();
                let r = expected_sq_acf(&u, &p, mu4, 1).unwrap();
                for k in 0..r.len() {
                    prop_assert!(r.sea[k] >= o.sea[k] - 1e-9);
                }
            }

            #[test]
            fn super_gaussian_sc_minimizes_sea(seed in any::<u64>(), mu4 in 2.0f64..4.0) {
                let p = NyquistPulse::rrc(16, 4, 0.35).unwrap();
                let u = ModulationBasis::random_unitary(16, &mut stream(seed, 0)).unwrap();
                let s = expected_sq_acf(&ModulationBasis::sc(16).unwrap(), &p, mu4, 1).unwrap();
                let r = expected_sq_acf(&u, &p, mu4, 1).unwrap();
                for k in 0..r.len() {
                    prop_assert!(r.sea[k] >= s.sea[k] - 1e-9);
                }
            }

            #[test]
            fn gaussian_is_basis_invariant(seed in any::<u64>()) {
                let p = NyquistPulse::rrc(16, 4, 0.35).unwrap();
                let u = ModulationBasis::random_unitary(16, &mut stream(seed, 0)).unwrap();
                let s = expected_sq_acf(&ModulationBasis::sc(16).unwrap(), &p, 2.0, 1).unwrap();
                let r = expected_sq_acf(&u, &p, 2.0, 1).unwrap();
                for k in 0..r.len() {
                    prop_assert!((r.sea[k] - s.sea[k]).abs() <= 1e-10);
                }
            }

            #[test]
            fn integration_scales_sea(m in 1usize..500, mu4 in 1.0f64..3.0, k in 0usize..64) {
                let p = NyquistPulse::rrc(16, 4, 0.35).unwrap();
                let (_, s1) = ofdm_sq_acf(&p, mu4, 1, k).unwrap();
                let (_, sm) = ofdm_sq_acf(&p, mu4, m, k).unwrap();
                prop_assert!((s1 / m as f64 - sm).abs() <= 1e-12 * s1.max(1e-300));
            }
        }
    }
}
