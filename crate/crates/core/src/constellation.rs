//! Symbol alphabets and their fourth-order statistics.
//!
//! Every constellation is validated against two assumptions at construction:
//! unit average power `E|s|² = 1`, and zero mean and pseudo-variance
//! `E(s) = E(s²) = 0`. Under those assumptions the only statistic of the
//! alphabet that reaches the expected squared ACF is the kurtosis
//! `μ₄ = E|s|⁴`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance for the moment checks performed at construction.
pub const MOMENT_TOL: f64 = 1e-12;

/// Half-width of the band around `μ₄ = 2` classified as Gaussian.
pub const CLASSIFY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    Psk(usize),
    Qam(usize),
    Gaussian,
    Custom,
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Psk(m) => write!(f, "psk{m}"),
            Self::Qam(m) => write!(f, "qam{m}"),
            Self::Gaussian => f.write_str("gaussian"),
            Self::Custom => f.write_str("custom"),
        }
    }
}

/// Position of a constellation's kurtosis relative to the Gaussian value 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KurtosisClass {
    SubGaussian,
    Gaussian,
    SuperGaussian,
}

/// A validated symbol alphabet, or the continuous circular Gaussian.
#[derive(Debug, Clone)]
pub struct ConstellationSpec {
    kind: ConstellationKind,
    points: Vec<Complex64>,
    probs: Vec<f64>,
    sampler: Sampler,
}

#[derive(Debug, Clone)]
enum Sampler {
    Uniform,
    Weighted(WeightedIndex<f64>),
    Gaussian,
}

impl ConstellationSpec {
    /// `m`-ary PSK on the unit circle with a `π/m` phase offset.
    pub fn psk(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Constellation(format!("PSK order must be >= 2, got {m}")));
        }
        let points = (0..m)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64 + PI / m as f64))
            .collect();
        Self::finite(ConstellationKind::Psk(m), points, None)
    }

    /// `m`-ary QAM scaled to unit power.
    ///
    /// Square orders (`m = 4^k`) use a Gray-labelled square lattice; orders
    /// `m = 2·4^k ≥ 32` use the cross lattice obtained by removing the four
    /// corner blocks from a `(6/√32)·√m` square grid.
    pub fn qam(m: usize) -> Result<Self> {
        let bits = m.trailing_zeros() as usize;
        if m < 4 || !m.is_power_of_two() {
            return Err(Error::Constellation(format!(
                "QAM order must be a power of two >= 4, got {m}"
            )));
        }
        let raw = if bits % 2 == 0 {
            square_qam(bits / 2)
        } else if m >= 32 {
            cross_qam(m)
        } else {
            return Err(Error::Constellation(format!(
                "{m}-QAM has no rotationally symmetric lattice"
            )));
        };
        let power = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / raw.len() as f64;
        let scale = power.sqrt().recip();
        let points = raw.into_iter().map(|p| p * scale).collect();
        Self::finite(ConstellationKind::Qam(m), points, None)
    }

    /// Circularly symmetric complex Gaussian with unit variance.
    pub fn gaussian() -> Self {
        Self {
            kind: ConstellationKind::Gaussian,
            points: Vec::new(),
            probs: Vec::new(),
            sampler: Sampler::Gaussian,
        }
    }

    /// Arbitrary alphabet. `probs = None` means equiprobable points.
    pub fn custom(points: Vec<Complex64>, probs: Option<Vec<f64>>) -> Result<Self> {
        Self::finite(ConstellationKind::Custom, points, probs)
    }

    /// Parse names such as `qam16`, `psk8`, `qpsk`, `bpsk`, `gaussian`.
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let order = |prefix: &str| -> Option<usize> {
            lower
                .strip_prefix(prefix)
                .map(|s| s.trim_start_matches('-'))
                .and_then(|s| s.parse().ok())
        };
        match lower.as_str() {
            "gaussian" | "gauss" => return Ok(Self::gaussian()),
            "qpsk" => return Self::psk(4),
            "bpsk" => return Self::psk(2),
            _ => {}
        }
        if let Some(m) = order("qam") {
            return Self::qam(m);
        }
        if let Some(m) = order("psk") {
            return Self::psk(m);
        }
        Err(Error::Constellation(format!("unknown constellation name `{name}`")))
    }

    /// Parse an alphabet file: one point per line as `re im [prob]`,
    /// whitespace or comma separated, `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut probs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: lineno + 1,
                    reason: e.to_string(),
                })?;
            match fields.as_slice() {
                [re, im] => points.push(Complex64::new(*re, *im)),
                [re, im, p] => {
                    points.push(Complex64::new(*re, *im));
                    probs.push(*p);
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        reason: format!("expected 2 or 3 columns, got {}", fields.len()),
                    })
                }
            }
        }
        let probs = match probs.len() {
            0 => None,
            n if n == points.len() => Some(probs),
            _ => {
                return Err(Error::Parse {
                    line: 0,
                    reason: "probability column must be given for all points or none".into(),
                })
            }
        };
        Self::custom(points, probs)
    }

    fn finite(kind: ConstellationKind, points: Vec<Complex64>, probs: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Constellation("empty alphabet".into()));
        }
        let uniform = probs.is_none();
        let probs = probs.unwrap_or_else(|| vec![1.0 / points.len() as f64; points.len()]);
        if probs.len() != points.len() {
            return Err(Error::Constellation(format!(
                "{} points but {} probabilities",
                points.len(),
                probs.len()
            )));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Constellation(format!("probability {i} is invalid: {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Constellation(format!("probabilities sum to {total}, not 1")));
        }
        let mut mean = Complex64::default();
        let mut pseudo = Complex64::default();
        let mut power = 0.0;
        for (s, p) in points.iter().zip(&probs) {
            mean += s * p;
            pseudo += s * s * p;
            power += s.norm_sqr() * p;
        }
        if (power - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Constellation(format!("average power is {power}, not 1")));
        }
        if mean.norm() > MOMENT_TOL {
            return Err(Error::Constellation(format!("mean is {mean}, not 0")));
        }
        if pseudo.norm() > MOMENT_TOL {
            return Err(Error::Constellation(format!("pseudo-variance E(s^2) is {pseudo}, not 0")));
        }
        let sampler = if uniform {
            Sampler::Uniform
        } else {
            Sampler::Weighted(
                WeightedIndex::new(&probs).map_err(|e| Error::Constellation(e.to_string()))?,
            )
        };
        Ok(Self {
            kind,
            points,
            probs,
            sampler,
        })
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    /// Alphabet points; empty for the Gaussian case.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self.sampler, Sampler::Gaussian)
    }

    /// `μ₄ = E|s|⁴`; exactly 2 for the Gaussian.
    pub fn kurtosis(&self) -> f64 {
        if !self.is_finite() {
            return 2.0;
        }
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| s.norm_sqr().powi(2) * p)
            .sum()
    }

    pub fn classify(&self) -> KurtosisClass {
        classify_kurtosis(self.kurtosis())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Complex64 {
        match &self.sampler {
            Sampler::Uniform => self.points[rng.random_range(0..self.points.len())],
            Sampler::Weighted(w) => self.points[w.sample(rng)],
            Sampler::Gaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * FRAC_1_SQRT_2
            }
        }
    }

    /// Fill `out` with i.i.d. draws.
    pub fn sample_into(&self, out: &mut [Complex64], rng: &mut impl Rng) {
        out.iter_mut().for_each(|s| *s = self.sample(rng));
    }

    pub fn sample_symbols(&self, n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

pub fn classify_kurtosis(mu4: f64) -> KurtosisClass {
    if mu4 < 2.0 - CLASSIFY_EPS {
        KurtosisClass::SubGaussian
    } else if mu4 > 2.0 + CLASSIFY_EPS {
        KurtosisClass::SuperGaussian
    } else {
        KurtosisClass::Gaussian
    }
}

fn inverse_gray(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

/// Unscaled square lattice with odd-integer coordinates, ordered by Gray label.
fn square_qam(bits_per_axis: usize) -> Vec<Complex64> {
    let side = 1usize << bits_per_axis;
    let level = |label: usize| (2 * inverse_gray(label)) as f64 - (side - 1) as f64;
    (0..side * side)
        .map(|label| Complex64::new(level(label >> bits_per_axis), level(label & (side - 1))))
        .collect()
}

/// Unscaled cross lattice: a `side × side` grid with `side = 6·√(m/32)` minus
/// four `(side/6) × (side/6)` corner blocks.
fn cross_qam(m: usize) -> Vec<Complex64> {
    let side = ((m as f64 * 36.0 / 32.0).sqrt()).round() as i64;
    let corner = side / 6;
    let limit = side - 2 * corner - 1;
    let mut out = Vec::with_capacity(m);
    for a in (-(side - 1)..side).step_by(2) {
        for b in (-(side - 1)..side).step_by(2) {
            if a.abs() > limit && b.abs() > limit {
                continue;
            }
            out.push(Complex64::new(a as f64, b as f64));
        }
    }
    debug_assert_eq!(out.len(), m);
    out
}
