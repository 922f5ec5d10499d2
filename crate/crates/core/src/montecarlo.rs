//! Monte Carlo estimation of ACF statistics.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constellation::ConstellationSpec;
use crate::dft::{circular_xcorr, fft, ifft};
use crate::error::{param, Error, Result};
use crate::modulation::ModulationBasis;
use crate::pulse::NyquistPulse;
use crate::rng::stream;

/// Upper bound on jackknife groups.
pub const MAX_GROUPS: usize = 100;

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub constellation: ConstellationSpec,
    pub basis: ModulationBasis,
    pub pulse: NyquistPulse,
    pub trials: usize,
    pub m: usize,
    pub seed: u64,
}

impl TrialConfig {
    pub fn new(
        constellation: ConstellationSpec,
        basis: ModulationBasis,
        pulse: NyquistPulse,
        trials: usize,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            constellation,
            basis,
            pulse,
            trials,
            m,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(param("trials", "must be >= 1"));
        }
        if self.m < 1 {
            return Err(param("m", "must be >= 1"));
        }
        if self.basis.n() != self.pulse.n() {
            return Err(Error::Dimension {
                expected: self.pulse.n(),
                actual: self.basis.n(),
                context: "basis order vs pulse symbol count",
            });
        }
        Ok(())
    }

    fn symbols(&self, trial: u64) -> Vec<Complex64> {
        self.constellation
            .sample_symbols(self.pulse.n(), &mut stream(self.seed, trial))
    }
}

/// Transmit samples `x̃ = p ⊛ upsample(U s)` for one trial.
pub fn synthesize(cfg: &TrialConfig, trial: u64) -> Vec<Complex64> {
    let s = cfg.symbols(trial);
    shape_symbols(&cfg.basis, &cfg.pulse, &s).expect("config dimensions validated")
}

/// Modulate, upsample by zero insertion and circularly filter with `p`.
pub fn shape_symbols(basis: &ModulationBasis, pulse: &NyquistPulse, s: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = pulse.n();
    let k = pulse.len();
    let mut x = basis.modulate(s)?;
    fft(&mut x);
    let mut pf = pulse.time_samples().to_vec();
    fft(&mut pf);
    // spectrum of the upsampled sequence repeats the N-point spectrum L times
    let mut buf: Vec<Complex64> = (0..k).map(|f| pf[f] * x[f % n]).collect();
    ifft(&mut buf);
    let inv = 1.0 / k as f64;
    buf.iter_mut().for_each(|v| *v *= inv);
    Ok(buf)
}

/// Periodic ACF `R_k = x̃ᴴ J_k x̃` with `(J_k x)_i = x_{i+k}`.
pub fn periodic_acf(xt: &[Complex64]) -> Vec<Complex64> {
    circular_xcorr(xt, xt)
}

/// Empirical statistics of the block-averaged ACF `R̄_k` (average of `m`
/// consecutive trials).
#[derive(Debug, Clone, PartialEq)]
pub struct McStats {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub blocks: usize,
    pub groups: usize,
    /// `E|R̄_k|²`.
    pub mean_sq: Vec<f64>,
    /// `E R̄_k`.
    pub mean: Vec<Complex64>,
    /// `Var(R̄_k)`.
    pub variance: Vec<f64>,
    pub se_mean_sq: Vec<f64>,
    pub se_variance: Vec<f64>,
}

impl McStats {
    pub fn len(&self) -> usize {
        self.mean_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_sq.is_empty()
    }

    /// Fraction of lags where `|mean_sq − reference| ≤ z · se`.
    pub fn fraction_within(&self, reference: &[f64], z: f64) -> f64 {
        let hits = self
            .mean_sq
            .iter()
            .zip(&self.se_mean_sq)
            .zip(reference)
            .filter(|((e, se), r)| (*e - *r).abs() <= z * *se)
            .count();
        hits as f64 / self.len() as f64
    }
}

struct GroupSums {
    blocks: usize,
    s1: Vec<Complex64>,
    s2: Vec<f64>,
}

/// Block-averaged ACF for trials `[first, first + m)`, computed from the
/// averaged per-bin power so only one length-`K` transform is needed.
fn block_acf(cfg: &TrialConfig, first: u64, weights: &[f64], out: &mut [Complex64]) {
    let n = cfg.pulse.n();
    let mut bins = vec![0.0; n];
    let mut pow = vec![0.0; n];
    let mut work = vec![Complex64::default(); n];
    for t in first..first + cfg.m as u64 {
        let s = cfg.symbols(t);
        cfg.basis
            .bin_power_into(&s, &mut work, &mut pow)
            .expect("config dimensions validated");
        bins.iter_mut().zip(&pow).for_each(|(b, p)| *b += p);
    }
    let inv_m = 1.0 / cfg.m as f64;
    for (f, o) in out.iter_mut().enumerate() {
        *o = Complex64::new(weights[f] * bins[f % n] * inv_m, 0.0);
    }
    ifft(out);
}

fn group_sums(cfg: &TrialConfig, weights: &[f64], blocks: std::ops::Range<usize>) -> GroupSums {
    let k = cfg.pulse.len();
    let mut s1 = vec![Complex64::default(); k];
    let mut s2 = vec![0.0; k];
    let mut r = vec![Complex64::default(); k];
    for b in blocks.clone() {
        block_acf(cfg, (b * cfg.m) as u64, weights, &mut r);
        for ((a, q), v) in s1.iter_mut().zip(s2.iter_mut()).zip(&r) {
            *a += v;
            *q += v.norm_sqr();
        }
    }
    GroupSums {
        blocks: blocks.len(),
        s1,
        s2,
    }
}

/// Run all trials and estimate `E|R̄_k|²`, `E R̄_k` and `Var(R̄_k)` with
/// grouped jackknife standard errors. Output is bit-identical for a given
/// seed regardless of thread count.
pub fn estimate_stats(cfg: &TrialConfig) -> Result<McStats> {
    cfg.validate()?;
    if cfg.trials % cfg.m != 0 {
        return Err(param(
            "trials",
            format!("{} trials do not split into blocks of {}", cfg.trials, cfg.m),
        ));
    }
    let blocks = cfg.trials / cfg.m;
    if blocks < 2 {
        return Err(param("trials", "need at least two blocks for error estimates"));
    }
    let groups = blocks.min(MAX_GROUPS);
    // |P_f|²/K = G_f/N
    let weights: Vec<f64> = cfg
        .pulse
        .full_spectrum()
        .iter()
        .map(|g| g / cfg.pulse.n() as f64)
        .collect();
    let sums: Vec<GroupSums> = (0..groups)
        .into_par_iter()
        .map(|g| group_sums(cfg, &weights, g * blocks / groups..(g + 1) * blocks / groups))
        .collect();

    let k = cfg.pulse.len();
    let mut s1 = vec![Complex64::default(); k];
    let mut s2 = vec![0.0; k];
    for g in &sums {
        s1.iter_mut().zip(&g.s1).for_each(|(a, b)| *a += b);
        s2.iter_mut().zip(&g.s2).for_each(|(a, b)| *a += b);
    }
    let bf = blocks as f64;
    let var_of = |s1: Complex64, s2: f64, nb: f64| (s2 - s1.norm_sqr() / nb) / (nb - 1.0);

    let mut mean_sq = vec![0.0; k];
    let mut mean = vec![Complex64::default(); k];
    let mut variance = vec![0.0; k];
    let mut se_mean_sq = vec![0.0; k];
    let mut se_variance = vec![0.0; k];
    let gf = groups as f64;
    let mut loo_sq = vec![0.0; groups];
    let mut loo_var = vec![0.0; groups];
    for lag in 0..k {
        mean_sq[lag] = s2[lag] / bf;
        mean[lag] = s1[lag] / bf;
        variance[lag] = var_of(s1[lag], s2[lag], bf).max(0.0);
        for (j, g) in sums.iter().enumerate() {
            let nb = bf - g.blocks as f64;
            loo_sq[j] = (s2[lag] - g.s2[lag]) / nb;
            loo_var[j] = if nb >= 2.0 {
                var_of(s1[lag] - g.s1[lag], s2[lag] - g.s2[lag], nb)
            } else {
                variance[lag]
            };
        }
        se_mean_sq[lag] = jackknife_se(&loo_sq, gf);
        se_variance[lag] = jackknife_se(&loo_var, gf);
    }
    Ok(McStats {
        n: cfg.pulse.n(),
        m: cfg.m,
        trials: cfg.trials,
        blocks,
        groups,
        mean_sq,
        mean,
        variance,
        se_mean_sq,
        se_variance,
    })
}

fn jackknife_se(loo: &[f64], g: f64) -> f64 {
    let avg = loo.iter().sum::<f64>() / g;
    let ss: f64 = loo.iter().map(|v| (v - avg).powi(2)).sum();
    ((g - 1.0) / g * ss).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::BasisKind;
    use crate::theory::{expected_sq_acf, mean_acf};
    use nalgebra::{DMatrix, DVector};

    fn cfg(c: ConstellationSpec, kind: BasisKind, n: usize, l: usize, trials: usize, m: usize) -> TrialConfig {
        TrialConfig::new(
            c,
            ModulationBasis::new(kind, n).unwrap(),
            NyquistPulse::rrc(n, l, 0.35).unwrap(),
            trials,
            m,
            42,
        )
        .unwrap()
    }

    #[test]
    fn unit_symbol_gives_shifted_pulse() {
        let pulse = NyquistPulse::rrc(8, 4, 0.5).unwrap();
        let basis = ModulationBasis::sc(8).unwrap();
        let mut s = vec![Complex64::default(); 8];
        s[0] = Complex64::new(1.0, 0.0);
        let xt = shape_symbols(&basis, &pulse, &s).unwrap();
        for (a, b) in xt.iter().zip(pulse.time_samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_matches_dense_circulant() {
        let c = cfg(ConstellationSpec::qam(16).unwrap(), BasisKind::Cdma, 8, 3, 10, 1);
        let k = 24;
        let p = c.pulse.time_samples();
        let circ = DMatrix::from_fn(k, k, |i, j| p[(i + k - j) % k]);
        for t in 0..3 {
            let s = c.symbols(t);
            let x = c.basis.modulate(&s).unwrap();
            let mut up = DVector::zeros(k);
            for (i, v) in x.iter().enumerate() {
                up[i * 3] = *v;
            }
            let dense = &circ * up;
            let xt = synthesize(&c, t);
            for i in 0..k {
                assert!((dense[i] - xt[i]).norm() < 1e-10);
            }
            let es: f64 = s.iter().map(|v| v.norm_sqr()).sum();
            let ex: f64 = xt.iter().map(|v| v.norm_sqr()).sum();
            assert!((es - ex).abs() < 1e-10 * es);
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let c = cfg(ConstellationSpec::gaussian(), BasisKind::Ofdm, 16, 2, 10, 1);
        assert_eq!(synthesize(&c, 3), synthesize(&c, 3));
        assert_ne!(synthesize(&c, 3), synthesize(&c, 4));
    }

    #[test]
    fn periodic_acf_brute_force() {
        let c = cfg(ConstellationSpec::gaussian(), BasisKind::Sc, 8, 2, 10, 1);
        let xt = synthesize(&c, 0);
        let r = periodic_acf(&xt);
        let k = xt.len();
        for lag in 0..k {
            let direct: Complex64 = (0..k).map(|i| xt[i].conj() * xt[(i + lag) % k]).sum();
            assert!((direct - r[lag]).norm() < 1e-10);
        }
        let e: f64 = xt.iter().map(|v| v.norm_sqr()).sum();
        assert!((r[0].re - e).abs() < 1e-10 && r[0].im.abs() < 1e-10);
        for lag in 1..k {
            assert!((r[k - lag] - r[lag].conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn spectral_block_path_matches_time_domain() {
        for kind in [BasisKind::Sc, BasisKind::Ofdm, BasisKind::Cdma] {
            let c = cfg(ConstellationSpec::qam(16).unwrap(), kind, 16, 4, 12, 3);
            let weights: Vec<f64> = c.pulse.full_spectrum().iter().map(|g| g / 16.0).collect();
            let mut fast = vec![Complex64::default(); 64];
            block_acf(&c, 3, &weights, &mut fast);
            let mut slow = vec![Complex64::default(); 64];
            for t in 3..6 {
                for (a, b) in slow.iter_mut().zip(periodic_acf(&synthesize(&c, t))) {
                    *a += b / 3.0;
                }
            }
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_ragged_blocks() {
        let c = cfg(ConstellationSpec::psk(4).unwrap(), BasisKind::Sc, 8, 2, 10, 3);
        assert!(estimate_stats(&c).is_err());
    }

    #[test]
    fn matches_theory_small() {
        let c = cfg(ConstellationSpec::qam(16).unwrap(), BasisKind::Sc, 16, 4, 20_000, 1);
        let emp = estimate_stats(&c).unwrap();
        let th = expected_sq_acf(&c.basis, &c.pulse, 1.32, 1).unwrap();
        assert!(emp.fraction_within(&th.total, 5.0) >= 0.95);
        // sample mean against the closed-form mean, 5 standard errors per component
        let trials = 20_000f64;
        for lag in [0usize, 1, 3, 7] {
            let mu = mean_acf(&c.pulse, lag).unwrap();
            let se = (emp.variance[lag] / trials).sqrt();
            assert!((emp.mean[lag] - mu).norm() <= 5.0 * se + 1e-9, "lag {lag}");
        }
    }

    #[test]
    fn ofdm_psk_variance_vanishes() {
        let c = cfg(ConstellationSpec::psk(8).unwrap(), BasisKind::Ofdm, 16, 4, 200, 1);
        let emp = estimate_stats(&c).unwrap();
        let peak = 256.0;
        assert!(emp.variance.iter().all(|&v| v < 1e-6 * peak));
    }

    #[test]
    fn bit_identical_across_thread_counts() {
        let c = cfg(ConstellationSpec::qam(16).unwrap(), BasisKind::Cdma, 16, 2, 600, 2);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| estimate_stats(&c).unwrap());
        let b = four.install(|| estimate_stats(&c).unwrap());
        assert_eq!(a, b);
    }
}
