//! Density matrices, the probability simplex and the unfolding
//! `(U, p) ↦ U diag(p) U^H` from `SU(n) × Δ⁰ₙ` onto invertible states.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, CLAMP_EPS, HERMITIAN_TOL};
use crate::su_basis;

/// Smallest eigenvalue a state needs to count as invertible.
pub const FULL_RANK_EPS: f64 = 1e-10;
/// Two eigenvalues closer than this (relative) are treated as equal.
pub const DEGENERACY_RTOL: f64 = 1e-8;

const TRACE_TOL: f64 = 1e-10;
const SIMPLEX_SUM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;
const DET_TOL: f64 = 1e-8;

/// `|a - b| <= DEGENERACY_RTOL * max(a, b)`.
pub fn eigenvalues_coincide(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_RTOL * a.abs().max(b.abs())
}

/// A point of the open simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::BadDim("probability vector is empty".into()));
        }
        if let Some(bad) = p.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidState(format!(
                "probability {bad} is not in the open interval (0, 1]"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidState(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `p + a`, failing if the result leaves the interior.
    pub fn shifted(&self, a: &[f64]) -> Result<Self> {
        if a.len() != self.len() {
            return Err(Error::DimMismatch {
                expected: self.len(),
                got: a.len(),
            });
        }
        let p: Vec<f64> = self.0.iter().zip(a).map(|(x, d)| x + d).collect();
        let min = p.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::ProbeOutOfDomain(min));
        }
        Ok(Self(p))
    }
}

/// Tangent vector to the simplex: components sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexTangent(Vec<f64>);

impl SimplexTangent {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        let sum: f64 = a.iter().sum();
        if sum.abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidState(format!(
                "simplex tangent components sum to {sum:e}"
            )));
        }
        Ok(Self(a))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// `Σ s_m (e_m - e_n)`, the tangent with free coordinates `s` (length n-1).
    pub fn from_free_coordinates(s: &[f64]) -> Self {
        let mut a = s.to_vec();
        a.push(-s.iter().sum::<f64>());
        Self(a)
    }

    /// Inverse of [`SimplexTangent::from_free_coordinates`].
    pub fn free_coordinates(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    min_eigenvalue: f64,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let defect = mat.hermiticity_defect();
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(defect));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {} + {}i", tr.re, tr.im)));
        }
        let mat = mat.hermitian_part();
        let min_eigenvalue = eig_hermitian(&mat)?.min_eigenvalue();
        if min_eigenvalue < -CLAMP_EPS {
            return Err(Error::NegativeSpectrum(min_eigenvalue));
        }
        Ok(Self {
            mat,
            min_eigenvalue,
        })
    }

    /// `diag(p)`.
    pub fn diagonal(p: &ProbabilityVector) -> Self {
        Self {
            mat: ComplexMatrix::from_real_diagonal(p.as_slice()),
            min_eigenvalue: p.as_slice().iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::diagonal(&ProbabilityVector::uniform(n))
    }

    /// `(1 - eps) ρ + eps I/n`.
    pub fn mixed_with_identity(&self, eps: f64) -> Self {
        let n = self.dim();
        let mixed = &self.mat.scale_real(1.0 - eps)
            + &ComplexMatrix::identity(n).scale_real(eps / n as f64);
        Self {
            mat: mixed,
            min_eigenvalue: (1.0 - eps) * self.min_eigenvalue + eps / n as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_invertible(&self) -> bool {
        self.min_eigenvalue > FULL_RANK_EPS
    }

    pub fn require_invertible(&self) -> Result<()> {
        if self.is_invertible() {
            Ok(())
        } else {
            Err(Error::NotInvertible(self.min_eigenvalue))
        }
    }
}

/// A point `(U, p)` of the unfolding space `SU(n) × Δ⁰ₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedState {
    u: ComplexMatrix,
    p: ProbabilityVector,
}

impl UnfoldedState {
    pub fn new(u: ComplexMatrix, p: ProbabilityVector) -> Result<Self> {
        if u.dim() != p.len() {
            return Err(Error::DimMismatch {
                expected: p.len(),
                got: u.dim(),
            });
        }
        let defect = u.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::InvalidState(format!("U is not unitary (defect {defect:e})")));
        }
        let det = u.determinant();
        if (det - Complex64::new(1.0, 0.0)).norm() > DET_TOL {
            return Err(Error::InvalidState(format!(
                "det U = {} + {}i, expected 1",
                det.re, det.im
            )));
        }
        Ok(Self { u, p })
    }

    pub(crate) fn new_unchecked(u: ComplexMatrix, p: ProbabilityVector) -> Self {
        Self { u, p }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn probabilities(&self) -> &ProbabilityVector {
        &self.p
    }
}

/// `π(U, p) = U diag(p) U^H`.
pub fn fold(s: &UnfoldedState) -> DensityMatrix {
    let mat = s.u.conjugate_diagonal(s.p.as_slice()).hermitian_part();
    DensityMatrix {
        mat,
        min_eigenvalue: s.p.as_slice().iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Diagonalize an invertible state into `(U, p)` with `p` descending and `det U = 1`.
pub fn unfold(rho: &DensityMatrix) -> Result<UnfoldedState> {
    let eig = eig_hermitian(rho.matrix())?;
    let min = eig.min_eigenvalue();
    if !(min > FULL_RANK_EPS) {
        return Err(Error::NotInvertible(min));
    }
    let n = rho.dim();
    let mut p: Vec<f64> = eig.eigenvalues.iter().rev().copied().collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let v = &eig.eigenvectors;
    let mut u = ComplexMatrix::from_fn(n, |i, j| v[(i, n - 1 - j)]);
    let det = u.determinant();
    let phase = Complex64::from_polar(1.0, -det.arg() / n as f64);
    u = u.scale(phase);
    Ok(UnfoldedState::new_unchecked(u, ProbabilityVector(p)))
}

/// Partition of `0..n` into runs of coinciding probabilities.
pub fn degeneracy_blocks(p: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| p[i].total_cmp(&p[j]));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match blocks.last_mut() {
            Some(block) if eigenvalues_coincide(p[*block.last().unwrap()], p[idx]) => {
                block.push(idx)
            }
            _ => blocks.push(vec![idx]),
        }
    }
    for block in &mut blocks {
        block.sort_unstable();
    }
    blocks.sort_by_key(|b| b[0]);
    blocks
}

/// Hermitian traceless `H` with `[H, diag(p)] = 0`: the directions `U ↦ U exp(i t H)`
/// along which the fold map does not move.
pub fn kernel_basis(s: &UnfoldedState) -> Vec<ComplexMatrix> {
    let n = s.dim();
    let p = s.p.as_slice();
    let mut basis: Vec<ComplexMatrix> = (1..n).map(|d| su_basis::diagonal_generator(n, d)).collect();
    for block in degeneracy_blocks(p) {
        for (i, &a) in block.iter().enumerate() {
            for &b in &block[i + 1..] {
                let (sym, anti) = su_basis::pair_generators(n, a, b);
                basis.push(sym);
                basis.push(anti);
            }
        }
    }
    basis
}

/// Haar-random unitary from Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    for j in 0..n {
        for k in 0..j {
            let proj: Complex64 = (0..n).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..n {
                let v = cols[k][i];
                cols[j][i] -= proj * v;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= norm);
    }
    ComplexMatrix::from_fn(n, |i, j| cols[j][i])
}

/// Haar-random element of SU(n).
pub fn haar_special_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let u = haar_unitary(n, rng);
    let det = u.determinant();
    u.scale(Complex64::from_polar(1.0, -det.arg() / n as f64))
}

fn check_random_params(n: usize, min_eig: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::BadParams("dimension must be at least 1".into()));
    }
    if !(min_eig > 0.0 && min_eig < 1.0 / n as f64) {
        return Err(Error::BadParams(format!(
            "min_eig must lie in (0, 1/{n}), got {min_eig}"
        )));
    }
    Ok(())
}

/// Interior simplex point `min_eig + (1 - n min_eig) · Dirichlet(1, …, 1)`.
pub fn random_probabilities(n: usize, min_eig: f64, rng: &mut impl Rng) -> Result<ProbabilityVector> {
    check_random_params(n, min_eig)?;
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let scale = 1.0 - n as f64 * min_eig;
    let mut p: Vec<f64> = draws.iter().map(|d| min_eig + scale * d / total).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= sum);
    Ok(ProbabilityVector(p))
}

pub fn random_unfolded_with(n: usize, min_eig: f64, rng: &mut impl Rng) -> Result<UnfoldedState> {
    let p = random_probabilities(n, min_eig, rng)?;
    let u = haar_special_unitary(n, rng);
    Ok(UnfoldedState::new_unchecked(u, p))
}

pub fn random_state_with(n: usize, min_eig: f64, rng: &mut impl Rng) -> Result<DensityMatrix> {
    Ok(fold(&random_unfolded_with(n, min_eig, rng)?))
}

/// Seeded random invertible state with smallest eigenvalue at least `min_eig`.
pub fn random_state(n: usize, min_eig: f64, seed: u64) -> Result<DensityMatrix> {
    random_state_with(n, min_eig, &mut ChaCha8Rng::seed_from_u64(seed))
}
