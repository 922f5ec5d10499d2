//! Matched-filter ranging with random communication waveforms.
//!
//! Echoes follow `y = Σ_q α_q J_{τ_q} x̃ + z` with `(J_k x)_i = x_{i+k}`, and the
//! matched filter `ỹ_i = Σ_j x̃_j* y_{j−i} = Σ_q α_q R_{τ_q − i} + z̃_i` peaks at
//! `i = τ_q`. Targets are static over the `M` integrated slots while the data
//! symbols are redrawn every slot.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::ConstellationSpec;
use crate::dft::{cis, fft};
use crate::error::{param, Error, Result};
use crate::modulation::ModulationBasis;
use crate::montecarlo::shape_symbols;
use crate::pulse::{to_db, NyquistPulse};
use crate::rng::{derive_seed, stream};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const TAG_SYMBOLS: u64 = 0x5359_4d42;
const TAG_NOISE: u64 = 0x4e4f_4953;
const TAG_PHASE: u64 = 0x5048_4153;

/// Mapping between lag indices and range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeGrid {
    pub n: usize,
    pub l: usize,
    pub bandwidth_hz: f64,
}

impl RangeGrid {
    pub fn new(n: usize, l: usize, bandwidth_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(param("bandwidth_hz", format!("must be positive, got {bandwidth_hz}")));
        }
        if n < 2 || l < 1 {
            return Err(param("n", format!("need N >= 2 and L >= 1, got N={n}, L={l}")));
        }
        Ok(Self { n, l, bandwidth_hz })
    }

    /// Symbol period `T = 1/B`.
    pub fn symbol_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// Sample period `T_s = T/L`.
    pub fn sample_period(&self) -> f64 {
        self.symbol_period() / self.l as f64
    }

    /// Subcarrier spacing `B/N`.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth_hz / self.n as f64
    }

    /// Range step per lag, `c·T_s/2`.
    pub fn lag_spacing_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.sample_period() / 2.0
    }

    pub fn lags(&self) -> usize {
        self.n * self.l
    }

    pub fn lag_to_range(&self, lag: usize) -> f64 {
        lag as f64 * self.lag_spacing_m()
    }

    /// Nearest on-grid lag.
    pub fn range_to_lag(&self, range_m: f64) -> Result<usize> {
        let lag = (range_m / self.lag_spacing_m()).round();
        if !(lag >= 0.0 && lag < self.lags() as f64) {
            return Err(param(
                "range",
                format!(
                    "{range_m} m outside the unambiguous window [0, {}) m",
                    self.lag_to_range(self.lags())
                ),
            ));
        }
        Ok(lag as usize)
    }

    /// Half a symbol-resolution cell, `c·T/2`: the detection-success radius.
    pub fn resolution_m(&self) -> f64 {
        self.lag_spacing_m() * self.l as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub delay: usize,
    pub amplitude: Complex64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct Waveform {
    pub constellation: ConstellationSpec,
    pub basis: ModulationBasis,
    pub pulse: NyquistPulse,
}

impl Waveform {
    pub fn new(constellation: ConstellationSpec, basis: ModulationBasis, pulse: NyquistPulse) -> Result<Self> {
        if basis.n() != pulse.n() {
            return Err(Error::Dimension {
                expected: pulse.n(),
                actual: basis.n(),
                context: "basis order vs pulse symbol count",
            });
        }
        Ok(Self {
            constellation,
            basis,
            pulse,
        })
    }

    /// Transmit samples for a given symbol stream.
    pub fn transmit(&self, rng: &mut impl Rng) -> Vec<Complex64> {
        let s = self.constellation.sample_symbols(self.pulse.n(), rng);
        shape_symbols(&self.basis, &self.pulse, &s).expect("dimensions checked at construction")
    }
}

#[derive(Debug, Clone)]
pub struct RangingScenario {
    pub grid: RangeGrid,
    pub waveform: Waveform,
    pub targets: Vec<Target>,
    /// Complex noise variance per sample.
    pub noise_var: f64,
    pub m: usize,
    /// Inclusive lag interval searched for the tracked target.
    pub roi: (usize, usize),
    /// Index into `targets` of the target whose range is estimated.
    pub track: usize,
    /// Draw a uniform random phase for every target on each run.
    pub random_phase: bool,
}

impl RangingScenario {
    pub fn validate(&self) -> Result<()> {
        let k = self.grid.lags();
        if self.waveform.pulse.len() != k {
            return Err(Error::Dimension {
                expected: k,
                actual: self.waveform.pulse.len(),
                context: "waveform length vs range grid",
            });
        }
        if self.m < 1 {
            return Err(param("m", "integration count must be >= 1"));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(param("noise_var", format!("must be finite and >= 0, got {}", self.noise_var)));
        }
        let mut delays: Vec<usize> = self.targets.iter().map(|t| t.delay).collect();
        if let Some(d) = delays.iter().find(|&&d| d >= k) {
            return Err(param("targets", format!("delay {d} outside [0, {k})")));
        }
        delays.sort_unstable();
        if delays.windows(2).any(|w| w[0] == w[1]) {
            return Err(param("targets", "target delays must be distinct"));
        }
        if self.roi.0 > self.roi.1 || self.roi.1 >= k {
            return Err(param("roi", format!("lag interval {:?} is empty or outside [0, {k})", self.roi)));
        }
        if self.track >= self.targets.len() {
            return Err(param("track", format!("no target with index {}", self.track)));
        }
        Ok(())
    }

    /// Per-sample received power of the strongest echo.
    pub fn strong_power(&self) -> f64 {
        let amp = self
            .targets
            .iter()
            .map(|t| t.amplitude.norm_sqr())
            .fold(0.0, f64::max);
        amp * self.grid.n as f64 / self.grid.lags() as f64
    }

    /// Noise variance that realizes `snr_db` against the strongest echo.
    pub fn noise_for_snr(&self, snr_db: f64) -> f64 {
        self.strong_power() / 10f64.powf(snr_db / 10.0)
    }

    fn amplitudes(&self, run: u64, seed: u64) -> Vec<Complex64> {
        if !self.random_phase {
            return self.targets.iter().map(|t| t.amplitude).collect();
        }
        let mut rng = stream(derive_seed(seed, TAG_PHASE), run);
        self.targets
            .iter()
            .map(|t| t.amplitude * cis(2.0 * PI * rng.random::<f64>()))
            .collect()
    }
}

fn complex_normal(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// `y = Σ α_q J_{τ_q} x̃ + z` with the scenario's amplitudes.
pub fn synthesize_echo(scenario: &RangingScenario, xt: &[Complex64], rng: &mut impl Rng) -> Vec<Complex64> {
    let amps: Vec<Complex64> = scenario.targets.iter().map(|t| t.amplitude).collect();
    echo_with(&scenario.targets, &amps, scenario.noise_var, xt, rng)
}

fn echo_with(
    targets: &[Target],
    amps: &[Complex64],
    noise_var: f64,
    xt: &[Complex64],
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let k = xt.len();
    let mut y = vec![Complex64::default(); k];
    for (t, a) in targets.iter().zip(amps) {
        for (i, v) in y.iter_mut().enumerate() {
            *v += a * xt[(i + t.delay) % k];
        }
    }
    if noise_var > 0.0 {
        y.iter_mut().for_each(|v| *v += complex_normal(rng, noise_var));
    }
    y
}

/// `ỹ_i = Σ_j x̃_j* y_{j−i}` for all `i`, via FFT.
pub fn matched_filter(xt: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    if xt.len() != y.len() {
        return Err(Error::Dimension {
            expected: xt.len(),
            actual: y.len(),
            context: "echo length vs transmit length",
        });
    }
    let k = xt.len();
    let mut fx = xt.to_vec();
    let mut fy = y.to_vec();
    fft(&mut fx);
    fft(&mut fy);
    let mut w: Vec<Complex64> = fx.iter().zip(&fy).map(|(a, b)| a.conj() * b).collect();
    fft(&mut w);
    let inv = 1.0 / k as f64;
    w.iter_mut().for_each(|v| *v *= inv);
    Ok(w)
}

/// Coherently integrated `|(1/M) Σ_m ỹ^{(m)}|²` by explicit time-domain
/// simulation of every slot. Reference path.
pub fn integrate_profiles(scenario: &RangingScenario, run: u64, seed: u64) -> Result<Vec<f64>> {
    scenario.validate()?;
    let amps = scenario.amplitudes(run, seed);
    let k = scenario.grid.lags();
    let sym_seed = derive_seed(derive_seed(seed, TAG_SYMBOLS), run);
    let noise_seed = derive_seed(derive_seed(seed, TAG_NOISE), run);
    let mut acc = vec![Complex64::default(); k];
    for slot in 0..scenario.m as u64 {
        let xt = scenario.waveform.transmit(&mut stream(sym_seed, slot));
        let y = echo_with(
            &scenario.targets,
            &amps,
            scenario.noise_var,
            &xt,
            &mut stream(noise_seed, slot),
        );
        let mf = matched_filter(&xt, &y)?;
        acc.iter_mut().zip(&mf).for_each(|(a, b)| *a += b);
    }
    let inv = 1.0 / scenario.m as f64;
    Ok(acc.iter().map(|v| (v * inv).norm_sqr()).collect())
}

/// Per-run state for the frequency-domain path: the summed transmit power
/// spectrum `Σ_m |X̃_m[f]|²` over all slots.
struct SlotSpectrum {
    power: Vec<f64>,
}

fn slot_spectrum(scenario: &RangingScenario, run: u64, seed: u64) -> SlotSpectrum {
    let wf = &scenario.waveform;
    let n = wf.pulse.n();
    let sym_seed = derive_seed(derive_seed(seed, TAG_SYMBOLS), run);
    let mut bins = vec![0.0; n];
    let mut pow = vec![0.0; n];
    let mut work = vec![Complex64::default(); n];
    for slot in 0..scenario.m as u64 {
        let s = wf.constellation.sample_symbols(n, &mut stream(sym_seed, slot));
        wf.basis
            .bin_power_into(&s, &mut work, &mut pow)
            .expect("dimensions checked at construction");
        bins.iter_mut().zip(&pow).for_each(|(b, p)| *b += p);
    }
    // |P_f|² = K·G_f/N
    let full = wf.pulse.full_spectrum();
    let k = full.len();
    let scale = k as f64 / n as f64;
    let power = full
        .iter()
        .enumerate()
        .map(|(f, g)| g * scale * bins[f % n])
        .collect();
    SlotSpectrum { power }
}

/// Integrated profile from the summed power spectrum. The averaged noise
/// term `(1/M)Σ_m X̃_m* Z_m` is drawn directly as independent
/// `CN(0, Kσ²·Σ_m|X̃_m|²/M²)` bins, which is its exact conditional law.
fn profile_from_spectrum(
    spec: &SlotSpectrum,
    targets: &[Target],
    amps: &[Complex64],
    noise_var: f64,
    m: usize,
    rng: Option<&mut crate::rng::StreamRng>,
) -> Vec<f64> {
    let k = spec.power.len();
    let inv_m = 1.0 / m as f64;
    let mut w: Vec<Complex64> = (0..k)
        .map(|f| {
            let h: Complex64 = targets
                .iter()
                .zip(amps)
                .map(|(t, a)| a * cis(2.0 * PI * ((f * t.delay) % k) as f64 / k as f64))
                .sum();
            h * spec.power[f] * inv_m
        })
        .collect();
    if let Some(rng) = rng {
        if noise_var > 0.0 {
            for (v, p) in w.iter_mut().zip(&spec.power) {
                *v += complex_normal(rng, k as f64 * noise_var * p) * inv_m;
            }
        }
    }
    fft(&mut w);
    let inv_k = 1.0 / k as f64;
    w.iter().map(|v| (v * inv_k).norm_sqr()).collect()
}

/// Fast equivalent of [`integrate_profiles`]: identical noiseless output for
/// the same seed and run, and the same distribution with noise.
pub fn integrate_profiles_fast(scenario: &RangingScenario, run: u64, seed: u64) -> Result<Vec<f64>> {
    scenario.validate()?;
    let amps = scenario.amplitudes(run, seed);
    let spec = slot_spectrum(scenario, run, seed);
    let mut rng = stream(derive_seed(derive_seed(seed, TAG_NOISE), run), u64::MAX);
    Ok(profile_from_spectrum(
        &spec,
        &scenario.targets,
        &amps,
        scenario.noise_var,
        scenario.m,
        Some(&mut rng),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEstimate {
    pub lag: usize,
    pub range_m: f64,
    /// Peak power in dB relative to `N²`.
    pub peak_db: f64,
}

/// Argmax of `profile` over the inclusive lag interval `roi`; ties go to the
/// smallest lag.
pub fn estimate_range(profile: &[f64], roi: (usize, usize), grid: &RangeGrid) -> Result<RangeEstimate> {
    if roi.0 > roi.1 || roi.1 >= profile.len() {
        return Err(param("roi", format!("lag interval {roi:?} is empty or outside the profile")));
    }
    let mut best = roi.0;
    for i in roi.0..=roi.1 {
        if profile[i] > profile[best] {
            best = i;
        }
    }
    Ok(RangeEstimate {
        lag: best,
        range_m: grid.lag_to_range(best),
        peak_db: to_db(profile[best], grid.n),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub runs: usize,
    /// RMSE over all runs.
    pub rmse_m: f64,
    /// RMSE over successful runs only; `None` when no run succeeded.
    pub rmse_success_m: Option<f64>,
    pub success_rate: f64,
}

/// RMSE and success rate of the tracked target's range estimate over an SNR
/// grid. Symbol draws are shared across SNR points within a run.
pub fn rmse_sweep(base: &RangingScenario, snr_grid_db: &[f64], runs: usize, seed: u64) -> Result<Vec<SweepRow>> {
    base.validate()?;
    if runs < 1 {
        return Err(param("runs", "need at least one Monte Carlo run"));
    }
    let truth = base.grid.lag_to_range(base.targets[base.track].delay);
    let radius = base.grid.resolution_m();
    let errors: Vec<Vec<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let amps = base.amplitudes(run, seed);
            let spec = slot_spectrum(base, run, seed);
            snr_grid_db
                .iter()
                .enumerate()
                .map(|(j, &snr)| {
                    let noise = base.noise_for_snr(snr);
                    let mut rng = stream(derive_seed(derive_seed(seed, TAG_NOISE), run), j as u64);
                    let prof = profile_from_spectrum(&spec, &base.targets, &amps, noise, base.m, Some(&mut rng));
                    let est = estimate_range(&prof, base.roi, &base.grid).expect("roi validated");
                    est.range_m - truth
                })
                .collect()
        })
        .collect();
    Ok(snr_grid_db
        .iter()
        .enumerate()
        .map(|(j, &snr)| {
            let errs: Vec<f64> = errors.iter().map(|e| e[j]).collect();
            let ok: Vec<f64> = errs.iter().copied().filter(|e| e.abs() <= radius + 1e-12).collect();
            let rms = |v: &[f64]| (v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64).sqrt();
            SweepRow {
                snr_db: snr,
                runs,
                rmse_m: rms(&errs),
                rmse_success_m: (!ok.is_empty()).then(|| rms(&ok)),
                success_rate: ok.len() as f64 / runs as f64,
            }
        })
        .collect())
}

/// The two-target scene used throughout: strong echo at 20 m, a weak one at
/// 30 m `gap_db` below it, searched over 23.74–31.24 m on a 200 MHz grid.
pub fn two_target_scenario(waveform: Waveform, gap_db: f64, m: usize) -> Result<RangingScenario> {
    let grid = RangeGrid::new(waveform.pulse.n(), waveform.pulse.l(), 200e6)?;
    let targets = vec![
        Target {
            delay: grid.range_to_lag(20.0)?,
            amplitude: Complex64::new(1.0, 0.0),
            label: "strong".into(),
        },
        Target {
            delay: grid.range_to_lag(30.0)?,
            amplitude: Complex64::new(10f64.powf(-gap_db / 20.0), 0.0),
            label: "weak".into(),
        },
    ];
    let roi = (grid.range_to_lag(23.74)?, grid.range_to_lag(31.24)?);
    let sc = RangingScenario {
        grid,
        waveform,
        targets,
        noise_var: 0.0,
        m,
        roi,
        track: 1,
        random_phase: true,
    };
    sc.validate()?;
    Ok(sc)
}
