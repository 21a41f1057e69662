//! Small dense complex matrices and Hermitian spectral calculus.
//!
//! Everything here is sized for the handful of levels the rest of the crate
//! works with (n up to ~8). Eigendecompositions use cyclic complex Jacobi
//! rotations with a fixed pivot order, so identical inputs produce
//! bit-identical outputs on a given platform.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum |m - m^H| entry accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-CLAMP_EPS, 0)` are treated as round-off and clamped to zero.
pub const CLAMP_EPS: f64 = 1e-12;
/// Relative off-diagonal Frobenius norm at which Jacobi iteration stops.
pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadDim("matrix dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Matrix unit `E_{ab}` (a one at row `a`, column `b`).
    pub fn unit(dim: usize, a: usize, b: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(a, b)] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|m - m^H|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m^H) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `self · diag(d) · self^H`.
    pub fn conjugate_diagonal(&self, diag: &[f64]) -> Self {
        let n = self.dim;
        debug_assert_eq!(diag.len(), n);
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &d) in diag.iter().enumerate() {
                    acc += self[(i, k)] * self[(j, k)].conj() * d;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// Max entry of `|m^H m - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(self.dim)).max_abs()
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a[r * n + col].norm().total_cmp(&a[s * n + col].norm()))
                .unwrap_or(col);
            if a[pivot * n + col].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let d = a[col * n + col];
            det *= d;
            for r in col + 1..n {
                let factor = a[r * n + col] / d;
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= factor * v;
                }
            }
        }
        det
    }

    fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Eigendecomposition `m = V diag(λ) V^H` with ascending `λ`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.eigenvectors.conjugate_diagonal(&self.eigenvalues)
    }

    /// Apply `f` to the spectrum after clamping round-off negatives.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        let mapped = clamped_spectrum(&self.eigenvalues)?
            .into_iter()
            .map(|l| {
                let v = f(l);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::DomainError(format!("f({l:e}) = {v}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.eigenvectors.conjugate_diagonal(&mapped))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }
}

fn clamped_spectrum(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    eigenvalues
        .iter()
        .map(|&l| {
            if l >= 0.0 {
                Ok(l)
            } else if l >= -CLAMP_EPS {
                Ok(0.0)
            } else {
                Err(Error::NegativeSpectrum(l))
            }
        })
        .collect()
}

fn off_diagonal_norm(a: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEig> {
    m.check_hermitian()?;
    let n = m.dim;
    let mut a = m.hermitian_part().entries;
    let mut v = ComplexMatrix::identity(n).entries;
    let tol = JACOBI_TOL * m.frobenius_norm();

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                let phase = apq / b;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * b);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                let sp = phase * s;
                let spc = sp.conj();
                // a <- a J, with J = [[c, s e^{iφ}], [-s e^{-iφ}, c]] on (p, q)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - spc * akq;
                    a[k * n + q] = sp * akp + akq * c;
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - spc * vkq;
                    v[k * n + q] = sp * vkp + vkq * c;
                }
                // a <- J^H a
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - sp * aqk;
                    a[q * n + k] = spc * apk + aqk * c;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a, n);
        if off > tol {
            return Err(Error::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off,
            });
        }
    }

    let raw: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
    let eigenvalues = order.iter().map(|&i| raw[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, c| v[r * n + order[c]]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// `V f(λ) V^H` for a Hermitian positive-semidefinite `m`.
pub fn spectral_fn(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    eig_hermitian(m)?.map_spectrum(f)
}

/// `exp(i h)` for Hermitian `h`; unitary, and special-unitary when `h` is traceless.
pub fn unitary_exp(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(h)?;
    let n = h.dim;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, l))
        .collect();
    let vecs = &eig.eigenvectors;
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| vecs[(i, k)] * phases[k] * vecs[(j, k)].conj())
            .sum()
    }))
}

/// Spectrum of `b^{1/2} a b^{1/2}`, ascending, clamped at zero.
///
/// This is also the (real, non-negative) spectrum of the non-Hermitian
/// product `a b`.
pub fn product_spectrum(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    a.check_hermitian()?;
    let sqrt_b = spectral_fn(b, f64::sqrt)?;
    let sandwich = (&(&sqrt_b * a) * &sqrt_b).hermitian_part();
    let eig = eig_hermitian(&sandwich)?;
    clamped_spectrum(&eig.eigenvalues)
}

/// `Σ μ^z` over the spectrum `μ` of `a b` (equivalently of `b^{1/2} a b^{1/2}`).
pub fn trace_product_power(a: &ComplexMatrix, b: &ComplexMatrix, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::BadParams(format!("power z must be positive, got {z}")));
    }
    // `a` must itself be PSD; product_spectrum only checks b through its square root.
    clamped_spectrum(&eig_hermitian(a)?.eigenvalues)?;
    Ok(product_spectrum(a, b)?.iter().map(|mu| mu.powf(z)).sum())
}
