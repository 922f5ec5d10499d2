//! Roll-off spectrum design that minimizes pulse ACF sidelobes.
//!
//! The free variables are the `N_α` roll-off entries of the folded spectrum
//! `g`. For every lag the scaled mean ACF `E R_k/√N` is affine in them, so the
//! integrated sidelobe level (ISL) over a lag set is a convex quadratic and the
//! peak sidelobe level (PSL) is a maximum of convex quadratics. Both are
//! solved with the conic splitting solver in [`admm`], then the iterate is
//! projected exactly onto the feasible set.

pub mod admm;
pub mod projection;

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dft::cis;
use crate::error::{param, Error, Result};
use crate::pulse::{rolloff_count, to_db, NyquistPulse};

use admm::{ConicProblem, Cones, Settings};
use projection::{max_violation, project_feasible};

/// Allowed constraint violation of a returned design.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Isl,
    Psl,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Isl => "isl",
            Self::Psl => "psl",
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "isl" => Ok(Self::Isl),
            "psl" => Ok(Self::Psl),
            other => Err(param("objective", format!("expected isl or psl, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionUnits {
    /// Oversampled lag indices.
    Lag,
    /// Symbol delays; `[a, b]` expands to lags `[aL, bL]`.
    Symbol,
}

impl std::str::FromStr for RegionUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lag" | "lags" => Ok(Self::Lag),
            "symbol" | "symbols" => Ok(Self::Symbol),
            other => Err(param("region-units", format!("expected lag or symbol, got `{other}`"))),
        }
    }
}

/// Inclusive lag range for a region given in either unit.
pub fn region_lags(start: usize, end: usize, units: RegionUnits, l: usize) -> Vec<usize> {
    match units {
        RegionUnits::Lag => (start..=end).collect(),
        RegionUnits::Symbol => (start * l..=end * l).collect(),
    }
}

/// `E R_k/√N = a·x + b` over the free roll-off entries `x`.
#[derive(Debug, Clone)]
pub struct LagMap {
    pub lag: usize,
    pub a: Vec<Complex64>,
    pub b: Complex64,
}

impl LagMap {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.a.iter().zip(x).map(|(a, v)| a * v).sum::<Complex64>() + self.b
    }
}

#[derive(Debug, Clone)]
pub struct ShapingProblem {
    pub n: usize,
    pub l: usize,
    pub n_alpha: usize,
    pub k_sl: Vec<usize>,
    pub objective: Objective,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub objective_kind: Objective,
    pub iterations: usize,
    /// Final `f_ISL` or `f_PSL` value (sum or max of `|E R_k|²/N`).
    pub objective: f64,
    /// Objective mapped to dB relative to the mainlobe `N²`.
    pub objective_db: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub max_violation: f64,
    pub converged: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ShapingSolution {
    pub pulse: NyquistPulse,
    pub report: SolverReport,
}

impl ShapingProblem {
    pub fn new(n: usize, l: usize, alpha: f64, k_sl: Vec<usize>, objective: Objective) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(param("alpha", format!("roll-off must lie in [0, 1], got {alpha}")));
        }
        Self::with_rolloff_count(n, l, rolloff_count(n, alpha), k_sl, objective)
    }

    pub fn with_rolloff_count(n: usize, l: usize, n_alpha: usize, k_sl: Vec<usize>, objective: Objective) -> Result<Self> {
        if n < 2 || l < 1 {
            return Err(param("n", format!("need N >= 2 and L >= 1, got N={n}, L={l}")));
        }
        if n_alpha > n || (n - n_alpha) % 2 != 0 {
            return Err(param("n_alpha", format!("{n_alpha} must not exceed N = {n} and share its parity")));
        }
        if k_sl.is_empty() {
            return Err(param("k_sl", "lag region is empty"));
        }
        let k = n * l;
        if let Some(bad) = k_sl.iter().find(|&&v| v == 0 || v >= k) {
            return Err(param("k_sl", format!("lag {bad} outside [1, {}]", k - 1)));
        }
        let mut k_sl = k_sl;
        k_sl.sort_unstable();
        k_sl.dedup();
        Ok(Self {
            n,
            l,
            n_alpha,
            k_sl,
            objective,
            tol: 1e-8,
            max_iter: 200_000,
        })
    }

    pub fn free_range(&self) -> std::ops::Range<usize> {
        let start = (self.n - self.n_alpha) / 2;
        start..start + self.n_alpha
    }

    /// Per-lag affine maps over the free entries.
    pub fn affine_maps(&self) -> Vec<LagMap> {
        let n = self.n;
        let kk = n * self.l;
        let free = self.free_range();
        let scale = 1.0 / (n as f64).sqrt();
        self.k_sl
            .iter()
            .map(|&k| {
                let z1 = cis(-2.0 * PI * (k % self.l) as f64 / self.l as f64) - 1.0;
                let ph = |i: usize| cis(2.0 * PI * ((i * k) % kk) as f64 / kk as f64);
                let mut b: Complex64 = (0..n).map(ph).sum();
                b += z1 * (free.end..n).map(ph).sum::<Complex64>();
                let a = free.clone().map(|i| z1 * ph(i) * scale).collect();
                LagMap { lag: k, a, b: b * scale }
            })
            .collect()
    }

    pub fn isl_of(&self, x: &[f64]) -> f64 {
        self.affine_maps().iter().map(|m| m.eval(x).norm_sqr()).sum()
    }

    pub fn psl_of(&self, x: &[f64]) -> f64 {
        self.affine_maps()
            .iter()
            .map(|m| m.eval(x).norm_sqr())
            .fold(0.0, f64::max)
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.objective {
            Objective::Isl => self.isl_of(x),
            Objective::Psl => self.psl_of(x),
        }
    }

    fn objective_db(&self, v: f64) -> f64 {
        to_db(v * self.n as f64, self.n)
    }

    /// Roll-off segment of the RRC pulse on this grid; always feasible.
    pub fn rrc_start(&self) -> Vec<f64> {
        let alpha = self.n_alpha as f64 / self.n as f64;
        let p = NyquistPulse::rrc(self.n, self.l, alpha).expect("grid validated");
        p.spectrum()[self.free_range()].to_vec()
    }

    /// Linear constraint rows: `Σx = N_α/2`, then `x_i − x_{i+1} ≤ 0`,
    /// `−x_0 ≤ 0`, `x_last ≤ 1`. `extra` zero columns are appended.
    fn linear_rows(&self, extra: usize) -> (DMatrix<f64>, DVector<f64>, usize) {
        let nf = self.n_alpha;
        let rows = 1 + (nf - 1) + 2;
        let mut a = DMatrix::zeros(rows, nf + extra);
        let mut b = DVector::zeros(rows);
        for j in 0..nf {
            a[(0, j)] = 1.0;
        }
        b[0] = nf as f64 / 2.0;
        for i in 0..nf - 1 {
            a[(1 + i, i)] = 1.0;
            a[(1 + i, i + 1)] = -1.0;
        }
        a[(nf, 0)] = -1.0;
        a[(nf + 1, nf - 1)] = 1.0;
        b[nf + 1] = 1.0;
        (a, b, rows - 1)
    }

    /// Stacked real rows `[Re a; Im a]` and offsets, scaled by `s`.
    fn real_rows(&self, maps: &[LagMap], s: f64) -> (DMatrix<f64>, DVector<f64>) {
        let nf = self.n_alpha;
        let mut c = DMatrix::zeros(2 * maps.len(), nf);
        let mut d = DVector::zeros(2 * maps.len());
        for (r, m) in maps.iter().enumerate() {
            for j in 0..nf {
                c[(2 * r, j)] = m.a[j].re * s;
                c[(2 * r + 1, j)] = m.a[j].im * s;
            }
            d[2 * r] = m.b.re * s;
            d[2 * r + 1] = m.b.im * s;
        }
        (c, d)
    }

    fn conic(&self) -> (ConicProblem, DVector<f64>) {
        let nf = self.n_alpha;
        let maps = self.affine_maps();
        let start = self.rrc_start();
        let base = self.value(&start).max(1e-300);
        match self.objective {
            Objective::Isl => {
                // scale so the RRC baseline objective is 1
                let (c, d) = self.real_rows(&maps, 1.0 / base.sqrt());
                let (a, b, nonneg) = self.linear_rows(0);
                let p = c.transpose() * &c * 2.0;
                let q = c.transpose() * d * 2.0;
                let prob = ConicProblem {
                    p,
                    q,
                    a,
                    b,
                    cones: Cones {
                        zero: 1,
                        nonneg,
                        soc3: 0,
                    },
                };
                (prob, DVector::from_vec(start))
            }
            Objective::Psl => {
                // variables (x, t): minimize t with t ≥ |a_k x + b_k| (scaled)
                let s = 1.0 / base.sqrt();
                let (c, d) = self.real_rows(&maps, s);
                let (lin_a, lin_b, nonneg) = self.linear_rows(1);
                let nk = maps.len();
                let rows = lin_a.nrows() + 3 * nk;
                let mut a = DMatrix::zeros(rows, nf + 1);
                let mut b = DVector::zeros(rows);
                a.view_mut((0, 0), lin_a.shape()).copy_from(&lin_a);
                b.rows_mut(0, lin_b.len()).copy_from(&lin_b);
                for r in 0..nk {
                    let row = lin_a.nrows() + 3 * r;
                    a[(row, nf)] = -1.0;
                    for j in 0..nf {
                        a[(row + 1, j)] = -c[(2 * r, j)];
                        a[(row + 2, j)] = -c[(2 * r + 1, j)];
                    }
                    b[row + 1] = d[2 * r];
                    b[row + 2] = d[2 * r + 1];
                }
                let mut q = DVector::zeros(nf + 1);
                q[nf] = 1.0;
                let mut warm = DVector::zeros(nf + 1);
                warm.rows_mut(0, nf).copy_from_slice(&start);
                warm[nf] = 1.0;
                let prob = ConicProblem {
                    p: DMatrix::zeros(nf + 1, nf + 1),
                    q,
                    a,
                    b,
                    cones: Cones {
                        zero: 1,
                        nonneg,
                        soc3: nk,
                    },
                };
                (prob, warm)
            }
        }
    }

    /// Design the roll-off segment.
    ///
    /// On non-convergence the error carries the best iterate, projected onto
    /// the feasible set, together with its report.
    pub fn solve(&self) -> Result<ShapingSolution> {
        if self.n_alpha == 0 {
            let pulse = NyquistPulse::sinc(self.n, self.l)?;
            return Ok(ShapingSolution {
                pulse,
                report: SolverReport {
                    objective_kind: self.objective,
                    iterations: 0,
                    objective: self.value(&[]),
                    objective_db: self.objective_db(self.value(&[])),
                    primal_residual: 0.0,
                    dual_residual: 0.0,
                    max_violation: 0.0,
                    converged: true,
                    note: Some("zero roll-off: the brick-wall spectrum is the only feasible point".into()),
                },
            });
        }
        let (prob, warm) = self.conic();
        let settings = Settings {
            tol: self.tol,
            max_iter: self.max_iter,
            ..Settings::default()
        };
        let out = admm::solve(&prob, &settings, Some(&warm));
        let sum = self.n_alpha as f64 / 2.0;
        let x = project_feasible(&out.x.as_slice()[..self.n_alpha], sum);
        let violation = max_violation(&x, sum);
        let pulse = NyquistPulse::custom(self.n, self.l, &x)?;
        let value = self.value(&x);
        let solution = ShapingSolution {
            pulse,
            report: SolverReport {
                objective_kind: self.objective,
                iterations: out.iterations,
                objective: value,
                objective_db: self.objective_db(value),
                primal_residual: out.primal,
                dual_residual: out.dual,
                max_violation: violation,
                converged: out.converged,
                note: None,
            },
        };
        if out.converged {
            Ok(solution)
        } else {
            Err(Error::ShapingNotConverged(Box::new(solution)))
        }
    }
}

/// `f_ISL = Σ_{k∈K} |E R_k|²/N`, evaluated from the pulse.
pub fn objective_isl(pulse: &NyquistPulse, k_sl: &[usize]) -> f64 {
    let prof = pulse.iceberg_profile();
    k_sl.iter().map(|&k| prof[k]).sum::<f64>() / pulse.n() as f64
}

/// `f_PSL = max_{k∈K} |E R_k|²/N`, evaluated from the pulse.
pub fn objective_psl(pulse: &NyquistPulse, k_sl: &[usize]) -> f64 {
    let prof = pulse.iceberg_profile();
    k_sl.iter().map(|&k| prof[k]).fold(0.0, f64::max) / pulse.n() as f64
}

/// Floor applied before converting icebergs to dB so exact zeros stay finite.
pub const DB_FLOOR: f64 = -300.0;

fn floored_db(v: f64, n: usize) -> f64 {
    to_db(v, n).max(DB_FLOOR)
}

/// Per-lag iceberg comparison of two pulses on the same grid.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub lags: Vec<usize>,
    pub a_db: Vec<f64>,
    pub b_db: Vec<f64>,
    /// `a_db − b_db`; negative where pulse A is lower.
    pub delta_db: Vec<f64>,
    pub in_region: Vec<bool>,
    pub isl_a_db: f64,
    pub isl_b_db: f64,
    pub psl_a_db: f64,
    pub psl_b_db: f64,
}

pub fn compare(a: &NyquistPulse, b: &NyquistPulse, k_sl: &[usize]) -> Result<Comparison> {
    if a.n() != b.n() || a.l() != b.l() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
            context: "pulses must share N and L",
        });
    }
    let n = a.n();
    let pa = a.iceberg_profile();
    let pb = b.iceberg_profile();
    let a_db: Vec<f64> = pa.iter().map(|&v| floored_db(v, n)).collect();
    let b_db: Vec<f64> = pb.iter().map(|&v| floored_db(v, n)).collect();
    let delta_db = a_db.iter().zip(&b_db).map(|(x, y)| x - y).collect();
    let mut in_region = vec![false; a.len()];
    for &k in k_sl {
        if k < in_region.len() {
            in_region[k] = true;
        }
    }
    let nf = n as f64;
    Ok(Comparison {
        lags: (0..a.len()).collect(),
        a_db,
        b_db,
        delta_db,
        in_region,
        isl_a_db: floored_db(objective_isl(a, k_sl) * nf, n),
        isl_b_db: floored_db(objective_isl(b, k_sl) * nf, n),
        psl_a_db: floored_db(objective_psl(a, k_sl) * nf, n),
        psl_b_db: floored_db(objective_psl(b, k_sl) * nf, n),
    })
}
