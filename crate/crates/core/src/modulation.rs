//! Unitary modulation bases and their frequency-domain images.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dft::{dft_matrix, fft, ifft};
use crate::error::{param, Error, Result};

/// Unitarity tolerance on `‖UᴴU − I‖_F`.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Sc,
    Ofdm,
    Cdma,
    Custom,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sc => "sc",
            Self::Ofdm => "ofdm",
            Self::Cdma => "cdma",
            Self::Custom => "custom",
        })
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sc" | "single-carrier" => Ok(Self::Sc),
            "ofdm" => Ok(Self::Ofdm),
            "cdma" | "hadamard" => Ok(Self::Cdma),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Basis(format!("unknown basis `{other}`"))),
        }
    }
}

/// An `N × N` unitary modulation matrix `U`, with `x = U s`.
#[derive(Debug, Clone)]
pub struct ModulationBasis {
    kind: BasisKind,
    u: DMatrix<Complex64>,
}

impl ModulationBasis {
    /// Build one of the structured bases. `Custom` is rejected here; use
    /// [`ModulationBasis::custom`].
    pub fn new(kind: BasisKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(param("n", format!("basis order must be >= 2, got {n}")));
        }
        let u = match kind {
            BasisKind::Sc => DMatrix::identity(n, n),
            BasisKind::Ofdm => dft_matrix(n).adjoint(),
            BasisKind::Cdma => hadamard(n)?,
            BasisKind::Custom => {
                return Err(Error::Basis("custom bases need an explicit matrix".into()))
            }
        };
        Ok(Self { kind, u })
    }

    pub fn sc(n: usize) -> Result<Self> {
        Self::new(BasisKind::Sc, n)
    }

    pub fn ofdm(n: usize) -> Result<Self> {
        Self::new(BasisKind::Ofdm, n)
    }

    pub fn cdma(n: usize) -> Result<Self> {
        Self::new(BasisKind::Cdma, n)
    }

    /// Wrap a caller-supplied matrix after checking that it is square and unitary.
    pub fn custom(u: DMatrix<Complex64>) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::Basis(format!(
                "matrix is {}x{}, not square",
                u.nrows(),
                u.ncols()
            )));
        }
        if u.nrows() < 2 {
            return Err(Error::Basis("basis order must be >= 2".into()));
        }
        let defect = unitarity_defect(&u);
        if defect.is_nan() || defect >= UNITARY_TOL {
            return Err(Error::Basis(format!(
                "matrix is not unitary: ||U^H U - I||_F = {defect:.3e}"
            )));
        }
        Ok(Self {
            kind: BasisKind::Custom,
            u,
        })
    }

    /// Haar-distributed unitary from the QR factorization of a complex
    /// Gaussian matrix, with the phases of `diag(R)` absorbed into `Q`.
    pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Result<Self> {
        if n < 2 {
            return Err(param("n", format!("basis order must be >= 2, got {n}")));
        }
        let z = DMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        });
        let qr = z.qr();
        let r = qr.r();
        let mut q = qr.q();
        for (j, mut col) in q.column_iter_mut().enumerate() {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
            col *= phase;
        }
        Ok(Self {
            kind: BasisKind::Custom,
            u: q,
        })
    }

    /// Parse a row-major complex matrix: each line holds one row as
    /// `re im re im ...`, whitespace or comma separated.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| Error::Parse {
                    line: lineno + 1,
                    reason: e.to_string(),
                })?;
            if vals.len() % 2 != 0 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    reason: "odd number of values; expected re/im pairs".into(),
                });
            }
            rows.push(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        }
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("row has {} entries, expected {n}", r.len()),
            });
        }
        Self::custom(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    /// `V = Uᴴ F_Nᴴ`.
    pub fn freq_matrix(&self) -> DMatrix<Complex64> {
        self.u.adjoint() * dft_matrix(self.n()).adjoint()
    }

    /// `Ṽ = V ⊙ V*`, a bistochastic matrix.
    pub fn unistochastic(&self) -> DMatrix<f64> {
        match self.kind {
            BasisKind::Sc => {
                let n = self.n();
                DMatrix::from_element(n, n, 1.0 / n as f64)
            }
            BasisKind::Ofdm => DMatrix::identity(self.n(), self.n()),
            _ => self.freq_matrix().map(|v| v.norm_sqr()),
        }
    }

    /// `x = U s`, with FFT shortcuts for SC and OFDM.
    pub fn modulate(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::default(); self.n()];
        self.modulate_into(s, &mut out)?;
        Ok(out)
    }

    pub fn modulate_into(&self, s: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.n();
        for len in [s.len(), out.len()] {
            if len != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: len,
                    context: "symbol vector",
                });
            }
        }
        match self.kind {
            BasisKind::Sc => out.copy_from_slice(s),
            BasisKind::Ofdm => {
                out.copy_from_slice(s);
                ifft(out);
                let scale = 1.0 / (n as f64).sqrt();
                out.iter_mut().for_each(|v| *v *= scale);
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.u.row(i).iter().zip(s).map(|(a, b)| a * b).sum();
                }
            }
        }
        Ok(())
    }

    /// `|F_N U s|²` scaled so the entries sum to `N‖s‖²`; this is the
    /// per-bin power of the unnormalized length-N transform of `x`.
    pub fn bin_power_into(&self, s: &[Complex64], work: &mut [Complex64], out: &mut [f64]) -> Result<()> {
        if self.kind == BasisKind::Ofdm {
            // F_N F_Nᴴ s = s
            let n = self.n() as f64;
            for (o, v) in out.iter_mut().zip(s) {
                *o = v.norm_sqr() * n;
            }
            return Ok(());
        }
        self.modulate_into(s, work)?;
        fft(work);
        for (o, v) in out.iter_mut().zip(work.iter()) {
            *o = v.norm_sqr();
        }
        Ok(())
    }
}

/// `‖UᴴU − I‖_F`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - DMatrix::<Complex64>::identity(n, n)).norm()
}

/// Sylvester Hadamard matrix scaled by `1/√n`.
fn hadamard(n: usize) -> Result<DMatrix<Complex64>> {
    if !n.is_power_of_two() {
        return Err(Error::Basis(format!("Hadamard order must be a power of two, got {n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * scale, 0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = stream(seed, 0);
        (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    }

    #[test]
    fn sc_is_identity() {
        let b = ModulationBasis::sc(4).unwrap();
        assert_eq!(b.matrix(), &DMatrix::identity(4, 4));
        let s = random_vec(4, 1);
        assert_eq!(b.modulate(&s).unwrap(), s);
    }

    #[test]
    fn ofdm_freq_matrix_is_identity() {
        let b = ModulationBasis::ofdm(8).unwrap();
        let v = b.freq_matrix();
        assert!((v - DMatrix::<Complex64>::identity(8, 8)).norm() < 1e-12);
        let vt = b.freq_matrix().map(|v| v.norm_sqr());
        assert!((vt - b.unistochastic()).norm() < 1e-12);
    }

    #[test]
    fn sc_unistochastic_is_uniform() {
        let b = ModulationBasis::sc(8).unwrap();
        let dense = b.freq_matrix().map(|v| v.norm_sqr());
        for v in dense.iter() {
            assert!((v - 1.0 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ofdm_first_unit_vector() {
        let b = ModulationBasis::ofdm(16).unwrap();
        let mut e1 = vec![Complex64::default(); 16];
        e1[0] = Complex64::new(1.0, 0.0);
        for v in b.modulate(&e1).unwrap() {
            assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_paths_match_dense_product() {
        for kind in [BasisKind::Sc, BasisKind::Ofdm] {
            let b = ModulationBasis::new(kind, 32).unwrap();
            let s = random_vec(32, 5);
            let fast = b.modulate(&s).unwrap();
            let dense = b.matrix() * nalgebra::DVector::from_vec(s.clone());
            for (a, d) in fast.iter().zip(dense.iter()) {
                assert!((a - d).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bin_power_matches_fft() {
        for kind in [BasisKind::Sc, BasisKind::Ofdm, BasisKind::Cdma] {
            let b = ModulationBasis::new(kind, 16).unwrap();
            let s = random_vec(16, 9);
            let mut x = b.modulate(&s).unwrap();
            fft(&mut x);
            let mut work = vec![Complex64::default(); 16];
            let mut pow = vec![0.0; 16];
            b.bin_power_into(&s, &mut work, &mut pow).unwrap();
            for (p, v) in pow.iter().zip(&x) {
                assert!((p - v.norm_sqr()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cdma_is_unitary_and_checks_order() {
        let b = ModulationBasis::cdma(16).unwrap();
        assert!(unitarity_defect(b.matrix()) < 1e-12);
        assert!(ModulationBasis::cdma(12).is_err());
    }

    #[test]
    fn custom_rejects_non_unitary() {
        let m = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        assert!(ModulationBasis::custom(m).is_err());
    }

    #[test]
    fn random_unitary_properties() {
        let a = ModulationBasis::random_unitary(8, &mut stream(1, 0)).unwrap();
        let b = ModulationBasis::random_unitary(8, &mut stream(2, 0)).unwrap();
        assert!(unitarity_defect(a.matrix()) < UNITARY_TOL);
        assert!((a.matrix() - b.matrix()).norm() > 1e-3);
        let vt = a.unistochastic();
        for i in 0..8 {
            assert!((vt.row(i).sum() - 1.0).abs() < 1e-10);
            assert!((vt.column(i).sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn matrix_text_round_trip() {
        let text = "0.6 0 0 0.8\n0 0.8 0.6 0\n";
        let b = ModulationBasis::from_text(text).unwrap();
        assert_eq!(b.kind(), BasisKind::Custom);
        assert_eq!(b.matrix()[(0, 1)], Complex64::new(0.0, 0.8));
        assert!(ModulationBasis::from_text("1 0 0\n").is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let b = ModulationBasis::sc(4).unwrap();
        assert!(matches!(
            b.modulate(&[Complex64::default(); 3]),
            Err(Error::Dimension { expected: 4, actual: 3, .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn modulation_is_isometric(seed in any::<u64>(), kind in 0usize..4, log_n in 1u32..6) {
                let n = 1usize << log_n;
                let b = match kind {
                    0 => ModulationBasis::sc(n),
                    1 => ModulationBasis::ofdm(n),
                    2 => ModulationBasis::cdma(n),
                    _ => ModulationBasis::random_unitary(n, &mut stream(seed, 1)),
                }.unwrap();
                let s = random_vec(n, seed);
                let x = b.modulate(&s).unwrap();
                let ns: f64 = s.iter().map(|v| v.norm_sqr()).sum();
                let nx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
                prop_assert!((ns - nx).abs() <= 1e-12 * ns.max(1.0));
            }
        }
    }
}
