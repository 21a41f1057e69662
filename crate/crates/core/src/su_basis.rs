//! Generalized Gell-Mann generators of su(n), normalized to `Tr(σ_j σ_k) = 2 δ_jk`.
//!
//! For n = 2 and n = 3 the generators follow the Pauli and Gell-Mann numbering.
//! For larger n the order is: symmetric pairs in lexicographic `(α, β)` order,
//! then antisymmetric pairs in the same order, then the n−1 diagonal generators.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HERMITIAN_TOL};

/// How a generator was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Symmetric { a: usize, b: usize },
    Antisymmetric { a: usize, b: usize },
    Diagonal { d: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuBasis {
    n: usize,
    generators: Vec<ComplexMatrix>,
    kinds: Vec<GeneratorKind>,
}

/// `E_ab + E_ba` and `i(E_ba − E_ab)`.
pub fn pair_generators(n: usize, a: usize, b: usize) -> (ComplexMatrix, ComplexMatrix) {
    let mut sym = ComplexMatrix::zeros(n);
    sym[(a, b)] = Complex64::new(1.0, 0.0);
    sym[(b, a)] = Complex64::new(1.0, 0.0);
    let mut anti = ComplexMatrix::zeros(n);
    anti[(b, a)] = Complex64::new(0.0, 1.0);
    anti[(a, b)] = Complex64::new(0.0, -1.0);
    (sym, anti)
}

/// `√(2/(d(d+1))) (Σ_{j<d} E_jj − d E_dd)` for `d` in `1..n` (0-based row `d`).
pub fn diagonal_generator(n: usize, d: usize) -> ComplexMatrix {
    let df = d as f64;
    let c = (2.0 / (df * (df + 1.0))).sqrt();
    let mut diag = vec![0.0; n];
    diag[..d].iter_mut().for_each(|x| *x = c);
    diag[d] = -df * c;
    ComplexMatrix::from_real_diagonal(&diag)
}

fn generator(n: usize, kind: GeneratorKind) -> ComplexMatrix {
    match kind {
        GeneratorKind::Symmetric { a, b } => pair_generators(n, a, b).0,
        GeneratorKind::Antisymmetric { a, b } => pair_generators(n, a, b).1,
        GeneratorKind::Diagonal { d } => diagonal_generator(n, d),
    }
}

fn ordering(n: usize) -> Vec<GeneratorKind> {
    use GeneratorKind::*;
    match n {
        2 => vec![Symmetric { a: 0, b: 1 }, Antisymmetric { a: 0, b: 1 }, Diagonal { d: 1 }],
        3 => vec![
            Symmetric { a: 0, b: 1 },
            Antisymmetric { a: 0, b: 1 },
            Diagonal { d: 1 },
            Symmetric { a: 0, b: 2 },
            Antisymmetric { a: 0, b: 2 },
            Symmetric { a: 1, b: 2 },
            Antisymmetric { a: 1, b: 2 },
            Diagonal { d: 2 },
        ],
        _ => {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            pairs
                .iter()
                .map(|&(a, b)| Symmetric { a, b })
                .chain(pairs.iter().map(|&(a, b)| Antisymmetric { a, b }))
                .chain((1..n).map(|d| Diagonal { d }))
                .collect()
        }
    }
}

/// Build the basis for `n ≥ 2`.
pub fn build_su_basis(n: usize) -> Result<SuBasis> {
    if n < 2 {
        return Err(Error::BadDim(format!("su(n) needs n >= 2, got {n}")));
    }
    let kinds = ordering(n);
    let generators = kinds.iter().map(|&k| generator(n, k)).collect();
    Ok(SuBasis { n, generators, kinds })
}

impl SuBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of generators, `n² − 1`.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> &ComplexMatrix {
        &self.generators[k]
    }

    pub fn kinds(&self) -> &[GeneratorKind] {
        &self.kinds
    }

    /// `M_k^{αβ}`, the `(α, β)` entry of `σ_k`.
    pub fn coeff(&self, k: usize, alpha: usize, beta: usize) -> Complex64 {
        self.generators[k][(alpha, beta)]
    }

    /// `Σ_k c_k σ_k`.
    pub fn combine(&self, c: &[f64]) -> Result<ComplexMatrix> {
        if c.len() != self.len() {
            return Err(Error::DimMismatch {
                expected: self.len(),
                got: c.len(),
            });
        }
        let mut acc = ComplexMatrix::zeros(self.n);
        for (ck, g) in c.iter().zip(&self.generators) {
            if *ck != 0.0 {
                acc = &acc + &g.scale_real(*ck);
            }
        }
        Ok(acc)
    }

    /// All coefficients `Tr(σ_k H)/2` of a Hermitian traceless `H`.
    pub fn decompose(&self, h: &ComplexMatrix) -> Result<Vec<f64>> {
        check_direction(self.n, h)?;
        Ok((0..self.len()).map(|k| half_trace_product(&self.generators[k], h)).collect())
    }
}

fn half_trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re / 2.0
}

fn check_direction(n: usize, h: &ComplexMatrix) -> Result<()> {
    if h.dim() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: h.dim(),
        });
    }
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let tr = h.trace().norm();
    if tr > HERMITIAN_TOL {
        return Err(Error::NotTraceless(tr));
    }
    Ok(())
}

/// `θ^k` on the left-invariant direction generated by `H`: `Tr(σ_k H)/2`.
pub fn maurer_cartan_coefficient(basis: &SuBasis, k: usize, direction: &ComplexMatrix) -> Result<f64> {
    check_direction(basis.n, direction)?;
    if k >= basis.len() {
        return Err(Error::BadParams(format!(
            "generator index {k} out of range 0..{}",
            basis.len()
        )));
    }
    Ok(half_trace_product(&basis.generators[k], direction))
}
