//! Dense operator-splitting solver for small conic programs
//!
//! ```text
//! minimize    ½ xᵀPx + qᵀx
//! subject to  Ax + s = b,   s ∈ K
//! ```
//!
//! where `K` is a product of a zero cone, a nonnegative orthant and
//! three-dimensional second-order cones, in that row order. The iteration is
//! the OSQP splitting with the constraint set `b − K`, over-relaxation and
//! adaptive penalty.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cones {
    pub zero: usize,
    pub nonneg: usize,
    pub soc3: usize,
}

impl Cones {
    pub fn rows(&self) -> usize {
        self.zero + self.nonneg + 3 * self.soc3
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub cones: Cones,
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub tol: f64,
    pub max_iter: usize,
    pub sigma: f64,
    pub rho: f64,
    pub relax: f64,
    pub check_every: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200_000,
            sigma: 1e-6,
            rho: 0.1,
            relax: 1.6,
            check_every: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub primal: f64,
    pub dual: f64,
    pub converged: bool,
}

/// Project `v` onto the cone `K` in place.
fn project_cone(v: &mut [f64], cones: &Cones) {
    let (zero, rest) = v.split_at_mut(cones.zero);
    zero.iter_mut().for_each(|z| *z = 0.0);
    let (nonneg, soc) = rest.split_at_mut(cones.nonneg);
    nonneg.iter_mut().for_each(|z| *z = z.max(0.0));
    for c in soc.chunks_exact_mut(3) {
        let t = c[0];
        let r = (c[1] * c[1] + c[2] * c[2]).sqrt();
        if r <= t {
            continue;
        }
        if r <= -t {
            c.iter_mut().for_each(|z| *z = 0.0);
            continue;
        }
        let h = 0.5 * (r + t);
        c[0] = h;
        c[1] *= h / r;
        c[2] *= h / r;
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

struct Kkt {
    chol: Cholesky<f64, Dyn>,
}

impl Kkt {
    fn new(prob: &ConicProblem, sigma: f64, rho: &DVector<f64>) -> Option<Self> {
        let n = prob.p.nrows();
        let ra = DMatrix::from_fn(prob.a.nrows(), n, |i, j| rho[i] * prob.a[(i, j)]);
        let m = &prob.p + DMatrix::identity(n, n) * sigma + prob.a.transpose() * ra;
        Some(Self { chol: m.cholesky()? })
    }
}

fn penalties(cones: &Cones, rho: f64) -> DVector<f64> {
    DVector::from_fn(cones.rows(), |i, _| if i < cones.zero { 1e3 * rho } else { rho })
}

pub fn solve(prob: &ConicProblem, st: &Settings, warm: Option<&DVector<f64>>) -> Outcome {
    let n = prob.p.nrows();
    let m = prob.a.nrows();
    debug_assert_eq!(m, prob.cones.rows());
    let mut rho_scalar = st.rho;
    let mut rho = penalties(&prob.cones, rho_scalar);
    let mut kkt = Kkt::new(prob, st.sigma, &rho).expect("KKT matrix is positive definite");

    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut z = &prob.a * &x;
    let mut y = DVector::<f64>::zeros(m);
    let at = prob.a.transpose();
    let mut work = DVector::<f64>::zeros(m);
    let mut best = (f64::INFINITY, x.clone(), f64::INFINITY, f64::INFINITY);

    for it in 1..=st.max_iter {
        // x-update
        let rhs_c = DVector::from_fn(m, |i, _| rho[i] * z[i] - y[i]);
        let rhs = &x * st.sigma - &prob.q + &at * rhs_c;
        let xt = kkt.chol.solve(&rhs);
        let zt = &prob.a * &xt;
        x = &xt * st.relax + &x * (1.0 - st.relax);
        // z-update onto b − K
        for i in 0..m {
            let zr = st.relax * zt[i] + (1.0 - st.relax) * z[i];
            work[i] = prob.b[i] - (zr + y[i] / rho[i]);
        }
        project_cone(work.as_mut_slice(), &prob.cones);
        for i in 0..m {
            let zr = st.relax * zt[i] + (1.0 - st.relax) * z[i];
            let zn = prob.b[i] - work[i];
            y[i] += rho[i] * (zr - zn);
            z[i] = zn;
        }

        if it % st.check_every == 0 || it == st.max_iter {
            let ax = &prob.a * &x;
            let px = &prob.p * &x;
            let aty = &at * &y;
            let rp = inf_norm(&(&ax - &z));
            let rd = inf_norm(&(&px + &prob.q + &aty));
            let sp = inf_norm(&ax).max(inf_norm(&z)).max(1.0);
            let sd = inf_norm(&px).max(inf_norm(&prob.q)).max(inf_norm(&aty)).max(1.0);
            let score = (rp / sp).max(rd / sd);
            if score < best.0 {
                best = (score, x.clone(), rp, rd);
            }
            if rp <= st.tol * sp && rd <= st.tol * sd {
                return Outcome {
                    x,
                    iterations: it,
                    primal: rp,
                    dual: rd,
                    converged: true,
                };
            }
            // balance the normalized residuals
            let ratio = ((rp / sp) / (rd / sd).max(1e-300)).sqrt();
            let proposal = (rho_scalar * ratio).clamp(1e-6, 1e6);
            if proposal > 5.0 * rho_scalar || proposal < rho_scalar / 5.0 {
                rho_scalar = proposal;
                rho = penalties(&prob.cones, rho_scalar);
                if let Some(k) = Kkt::new(prob, st.sigma, &rho) {
                    kkt = k;
                }
            }
        }
    }
    Outcome {
        x: best.1,
        iterations: st.max_iter,
        primal: best.2,
        dual: best.3,
        converged: false,
    }
}
