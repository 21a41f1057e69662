//! Closed-form metric tensors on the unfolding space.
//!
//! A metric splits into a transversal block, the Fisher–Rao form `Σ dp_α²/p_α`
//! on simplex tangents, and a tangential block in the Maurer–Cartan coframe
//! `θ^j` of an [`SuBasis`]. Quadratic forms are evaluated with [`apply_metric`];
//! the dp block lives in the overcomplete basis and should not be compared
//! entrywise.

use serde::Serialize;

use crate::entropy::QZParams;
use crate::error::{Error, Result};
use crate::state::{eigenvalues_coincide, ProbabilityVector, SimplexTangent};
use crate::su_basis::SuBasis;

/// Basis convention tag written into serialized metrics.
pub const BASIS_CONVENTION: &str = "generalized-gell-mann";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTensor {
    pub n: usize,
    pub label: String,
    pub params: Option<QZParams>,
    /// Row-major n×n.
    pub transversal: Vec<f64>,
    /// Row-major (n²−1)×(n²−1).
    pub tangential: Vec<f64>,
    pub basis: &'static str,
}

impl MetricTensor {
    pub fn tangential_dim(&self) -> usize {
        self.n * self.n - 1
    }

    pub fn transversal_at(&self, a: usize, b: usize) -> f64 {
        self.transversal[a * self.n + b]
    }

    pub fn tangential_at(&self, j: usize, k: usize) -> f64 {
        self.tangential[j * self.tangential_dim() + k]
    }

    /// Largest `|C_jk − C_kj|`.
    pub fn tangential_asymmetry(&self) -> f64 {
        let m = self.tangential_dim();
        let mut worst: f64 = 0.0;
        for j in 0..m {
            for k in 0..m {
                worst = worst.max((self.tangential_at(j, k) - self.tangential_at(k, j)).abs());
            }
        }
        worst
    }
}

/// Simplex component plus `θ` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub simplex: SimplexTangent,
    pub theta: Vec<f64>,
}

impl TangentVector {
    pub fn new(simplex: SimplexTangent, theta: Vec<f64>) -> Self {
        Self { simplex, theta }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            simplex: SimplexTangent::zeros(n),
            theta: vec![0.0; n * n - 1],
        }
    }

    pub fn tangential(theta: Vec<f64>) -> Self {
        let n = ((theta.len() + 1) as f64).sqrt().round() as usize;
        Self {
            simplex: SimplexTangent::zeros(n),
            theta,
        }
    }

    pub fn scaled_sum(&self, s: f64, other: &Self) -> Self {
        let a: Vec<f64> = self
            .simplex
            .as_slice()
            .iter()
            .zip(other.simplex.as_slice())
            .map(|(x, y)| x + s * y)
            .collect();
        let n = a.len();
        let mut a = a;
        // keep the sum exactly zero
        let drift: f64 = a.iter().sum();
        a[n - 1] -= drift;
        Self {
            simplex: SimplexTangent::new(a).expect("sum forced to zero"),
            theta: self.theta.iter().zip(&other.theta).map(|(x, y)| x + s * y).collect(),
        }
    }
}

/// `g(v1, v2)`.
pub fn apply_metric(g: &MetricTensor, v1: &TangentVector, v2: &TangentVector) -> Result<f64> {
    let m = g.tangential_dim();
    for v in [v1, v2] {
        if v.simplex.len() != g.n {
            return Err(Error::DimMismatch {
                expected: g.n,
                got: v.simplex.len(),
            });
        }
        if v.theta.len() != m {
            return Err(Error::DimMismatch {
                expected: m,
                got: v.theta.len(),
            });
        }
    }
    let (a1, a2) = (v1.simplex.as_slice(), v2.simplex.as_slice());
    let mut acc = 0.0;
    for i in 0..g.n {
        for j in 0..g.n {
            acc += a1[i] * g.transversal_at(i, j) * a2[j];
        }
    }
    for j in 0..m {
        if v1.theta[j] == 0.0 {
            continue;
        }
        for k in 0..m {
            acc += v1.theta[j] * g.tangential_at(j, k) * v2.theta[k];
        }
    }
    Ok(acc)
}

/// Symmetric eigenvalue-pair coefficients with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ECoefficients {
    pub n: usize,
    pub e: Vec<f64>,
}

impl ECoefficients {
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.e[a * self.n + b]
    }
}

fn pair_table(p: &[f64], f: impl Fn(f64, f64) -> f64) -> ECoefficients {
    let n = p.len();
    let mut e = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            if eigenvalues_coincide(p[a], p[b]) {
                continue;
            }
            let v = f(p[a], p[b]);
            e[a * n + b] = v;
            e[b * n + a] = v;
        }
    }
    ECoefficients { n, e }
}

/// `E_αβ` for one pair, via `x^s − y^s = y^s expm1(s ln(x/y))`.
pub fn e_pair(pa: f64, pb: f64, params: QZParams) -> f64 {
    let (q, z) = (params.q, params.z);
    let l = (pa / pb).ln();
    (pa - pb) * (q / z * l).exp_m1() * ((1.0 - q) / z * l).exp_m1() / (l / z).exp_m1()
}

pub fn e_coefficients(p: &ProbabilityVector, params: QZParams) -> Result<ECoefficients> {
    params.validate()?;
    Ok(pair_table(p.as_slice(), |a, b| e_pair(a, b, params)))
}

fn fisher_rao(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut t = vec![0.0; n * n];
    for (a, pa) in p.iter().enumerate() {
        t[a * n + a] = 1.0 / pa;
    }
    t
}

fn check_basis(p: &ProbabilityVector, basis: &SuBasis) -> Result<()> {
    if basis.dim() != p.len() {
        return Err(Error::DimMismatch {
            expected: p.len(),
            got: basis.dim(),
        });
    }
    Ok(())
}

/// `prefactor · Σ′_{α≠β} e_αβ Re(M_j^{αβ} M_k^{βα})`.
fn tangential_block(e: &ECoefficients, basis: &SuBasis, prefactor: f64) -> Vec<f64> {
    let n = e.n;
    let m = basis.len();
    let mut t = vec![0.0; m * m];
    for j in 0..m {
        let gj = basis.generator(j);
        for k in j..m {
            let gk = basis.generator(k);
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let eab = e.at(a, b);
                    if eab != 0.0 {
                        acc += eab * (gj[(a, b)] * gk[(b, a)]).re;
                    }
                }
            }
            t[j * m + k] = prefactor * acc;
            t[k * m + j] = prefactor * acc;
        }
    }
    t
}

/// `Σ′ e_αβ Im(M_j^{αβ} M_k^{βα})` for every `(j, k)`: cancels identically.
pub fn imaginary_part_residual(p: &ProbabilityVector, params: QZParams, basis: &SuBasis) -> Result<f64> {
    check_basis(p, basis)?;
    let e = e_coefficients(p, params)?;
    let n = p.len();
    let m = basis.len();
    let mut worst: f64 = 0.0;
    for j in 0..m {
        for k in 0..m {
            let (gj, gk) = (basis.generator(j), basis.generator(k));
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += e.at(a, b) * (gj[(a, b)] * gk[(b, a)]).im;
                }
            }
            worst = worst.max(acc.abs());
        }
    }
    Ok(worst)
}

/// The q-z metric at diagonal `p`.
pub fn metric_qz(p: &ProbabilityVector, params: QZParams, basis: &SuBasis) -> Result<MetricTensor> {
    check_basis(p, basis)?;
    let e = e_coefficients(p, params)?;
    Ok(MetricTensor {
        n: p.len(),
        label: "qz".into(),
        params: Some(params),
        transversal: fisher_rao(p.as_slice()),
        tangential: tangential_block(&e, basis, params.z * params.prefactor()),
        basis: BASIS_CONVENTION,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SpecialMetric {
    Bures,
    WignerYanase,
    Tsallis { q: f64 },
    VonNeumann,
}

impl SpecialMetric {
    pub fn label(&self) -> String {
        match self {
            Self::Bures => "bures".into(),
            Self::WignerYanase => "wigner_yanase".into(),
            Self::Tsallis { q } => format!("tsallis(q={q})"),
            Self::VonNeumann => "von_neumann".into(),
        }
    }
}

/// n-level closed forms of the named members.
pub fn special_metric(p: &ProbabilityVector, which: SpecialMetric, basis: &SuBasis) -> Result<MetricTensor> {
    check_basis(p, basis)?;
    let pv = p.as_slice();
    let (e, prefactor, params) = match which {
        SpecialMetric::Bures => (
            pair_table(pv, |a, b| (a - b).powi(2) / (a + b)),
            2.0,
            Some(QZParams::BURES),
        ),
        SpecialMetric::WignerYanase => (
            pair_table(pv, |a, b| (a.sqrt() - b.sqrt()).powi(2)),
            4.0,
            Some(QZParams::WIGNER_YANASE),
        ),
        SpecialMetric::Tsallis { q } => {
            let params = QZParams::new(q, 1.0)?;
            (
                pair_table(pv, |a, b| (a.powf(q) - b.powf(q)) * (a.powf(1.0 - q) - b.powf(1.0 - q))),
                params.prefactor(),
                Some(params),
            )
        }
        SpecialMetric::VonNeumann => (pair_table(pv, |a, b| (a - b) * (a.ln() - b.ln())), 1.0, None),
    };
    Ok(MetricTensor {
        n: pv.len(),
        label: which.label(),
        params,
        transversal: fisher_rao(pv),
        tangential: tangential_block(&e, basis, prefactor),
        basis: BASIS_CONVENTION,
    })
}

fn check_w(w: f64) -> Result<()> {
    if !(w > -1.0 && w < 1.0) {
        return Err(Error::BadParams(format!("Bloch radius must lie in (-1, 1), got {w}")));
    }
    Ok(())
}

/// Qubit metric with transversal `dw²/(1−w²)` and tangential `c (θ¹² + θ²²)`.
fn qubit_metric(w: f64, coeff: f64, label: String, params: Option<QZParams>) -> MetricTensor {
    // dw = dp₁ − dp₂
    let t = 1.0 / (1.0 - w * w);
    let mut tangential = vec![0.0; 9];
    tangential[0] = coeff;
    tangential[4] = coeff;
    MetricTensor {
        n: 2,
        label,
        params,
        transversal: vec![t, -t, -t, t],
        tangential,
        basis: BASIS_CONVENTION,
    }
}

/// Tangential coefficient of the qubit q-z metric.
pub fn qubit_tangential_coefficient(w: f64, params: QZParams) -> f64 {
    let (q, z) = (params.q, params.z);
    if w == 0.0 {
        return 0.0;
    }
    let a = (1.0 + w) / 2.0;
    let b = (1.0 - w) / 2.0;
    let d = |s: f64| a.powf(s) - b.powf(s);
    2.0 * w * z / (q * (1.0 - q)) * d(q / z) * d((1.0 - q) / z) / d(1.0 / z)
}

pub fn qubit_metric_closed_form(w: f64, params: QZParams) -> Result<MetricTensor> {
    check_w(w)?;
    params.validate()?;
    Ok(qubit_metric(w, qubit_tangential_coefficient(w, params), "qz_qubit".into(), Some(params)))
}

/// `2w ln((1+w)/(1−w))`.
pub fn qubit_q1_tangential_coefficient(w: f64) -> f64 {
    2.0 * w * (w.ln_1p() - (-w).ln_1p())
}

pub fn qubit_q1_limit_metric(w: f64) -> Result<MetricTensor> {
    check_w(w)?;
    Ok(qubit_metric(w, qubit_q1_tangential_coefficient(w), "von_neumann_qubit".into(), None))
}

/// `f(t) = (q(1−q)/(4z)) (t−1)(t^{1/z}−1) / ((t^{q/z}−1)(t^{(1−q)/z}−1))`, with `f(1) = 1/4`.
pub fn petz_monotone_function(t: f64, params: QZParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("Petz function needs t > 0, got {t}")));
    }
    params.validate()?;
    if t == 1.0 {
        return Ok(0.25);
    }
    let (q, z) = (params.q, params.z);
    let l = t.ln();
    let num = (t - 1.0) * (l / z).exp_m1();
    let den = (q / z * l).exp_m1() * ((1.0 - q) / z * l).exp_m1();
    Ok(q * (1.0 - q) / (4.0 * z) * num / den)
}

pub fn petz_tangential_coefficient(w: f64, params: QZParams) -> Result<f64> {
    check_w(w)?;
    if w == 0.0 {
        return Ok(0.0);
    }
    let f = petz_monotone_function((1.0 - w) / (1.0 + w), params)?;
    Ok(w * w / ((1.0 + w) * f))
}

pub fn petz_metric_qubit(w: f64, params: QZParams) -> Result<MetricTensor> {
    let c = petz_tangential_coefficient(w, params)?;
    Ok(qubit_metric(w, c, "petz_qubit".into(), Some(params)))
}

/// Evaluation of the qubit tangential coefficient along `w → 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialLimitReport {
    pub params: QZParams,
    pub w: Vec<f64>,
    pub values: Vec<f64>,
    pub last: f64,
    /// Richardson extrapolation to `w = 1`.
    pub extrapolated: f64,
    /// `2z/(q(1−q))`.
    pub expected: f64,
    /// Ratio of the last two increments.
    pub contraction: f64,
    pub settled: bool,
}

impl RadialLimitReport {
    pub fn relative_error(&self) -> f64 {
        ((self.extrapolated - self.expected) / self.expected).abs()
    }
}

/// Increments must shrink by at least this factor to count as settling.
pub const RADIAL_CONTRACTION_MAX: f64 = 0.9;
const RICHARDSON_TERMS: usize = 2;

/// Default sequence `w_k = 1 − 10^{−k}`, `k = 1..=6`.
pub fn default_radial_sequence() -> Vec<f64> {
    (1..=6).map(|k| 1.0 - 10f64.powi(-k)).collect()
}

/// Exponents of the expansion of the coefficient in `b = (1−w)/2` near 0.
fn radial_exponents(params: QZParams) -> Vec<f64> {
    let (q, z) = (params.q, params.z);
    let base = [q / z, (1.0 - q) / z, 1.0 / z, 1.0];
    let mut out: Vec<f64> = Vec::new();
    for &x in &base {
        out.push(x);
        for &y in &base {
            out.push(x + y);
            for &v in &base {
                out.push(x + y + v);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

/// Solve the small dense system `a x = rhs` by partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (rhs[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn radial_limit_qubit(params: QZParams, w_sequence: &[f64]) -> Result<RadialLimitReport> {
    params.validate()?;
    if w_sequence.len() < 2 {
        return Err(Error::BadParams("radial sequence needs at least two points".into()));
    }
    if !w_sequence.windows(2).all(|p| p[0] < p[1]) || !w_sequence.iter().all(|&w| w > 0.0 && w < 1.0) {
        return Err(Error::BadParams(
            "radial sequence must increase strictly inside (0, 1)".into(),
        ));
    }
    let values: Vec<f64> = w_sequence
        .iter()
        .map(|&w| qubit_tangential_coefficient(w, params))
        .collect();
    let m = values.len();
    let last = values[m - 1];
    let k = RICHARDSON_TERMS.min(m - 1);
    let exps = radial_exponents(params);
    let rows: Vec<Vec<f64>> = (m - k - 1..m)
        .map(|i| {
            let b = (1.0 - w_sequence[i]) / 2.0;
            std::iter::once(1.0).chain(exps[..k].iter().map(|e| b.powf(*e))).collect()
        })
        .collect();
    let extrapolated = solve_dense(rows, values[m - k - 1..].to_vec())
        .map(|x| x[0])
        .unwrap_or(last);
    let contraction = if m >= 3 {
        let d1 = values[m - 1] - values[m - 2];
        let d0 = values[m - 2] - values[m - 3];
        if d0 == 0.0 {
            0.0
        } else {
            (d1 / d0).abs()
        }
    } else {
        0.0
    };
    Ok(RadialLimitReport {
        params,
        w: w_sequence.to_vec(),
        values,
        last,
        extrapolated,
        expected: 2.0 * params.z * params.prefactor(),
        contraction,
        settled: contraction <= RADIAL_CONTRACTION_MAX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{kernel_basis, ProbabilityVector, UnfoldedState};
    use crate::linalg::ComplexMatrix;
    use crate::su_basis::build_su_basis;

    fn pv(p: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(p.to_vec()).unwrap()
    }

    fn qz(q: f64, z: f64) -> QZParams {
        QZParams::new(q, z).unwrap()
    }

    /// E directly from the defining quotient with plain powers.
    fn e_direct(a: f64, b: f64, q: f64, z: f64) -> f64 {
        let d = |s: f64| a.powf(s) - b.powf(s);
        (a - b) * d(q / z) * d((1.0 - q) / z) / d(1.0 / z)
    }

    #[test]
    fn e_pair_matches_direct_quotient() {
        for &(a, b) in &[(0.6, 0.1), (0.2, 0.5), (0.34, 0.33)] {
            for &(q, z) in &[(0.3, 0.7), (0.5, 0.5), (0.8, 2.5)] {
                let got = e_pair(a, b, qz(q, z));
                let want = e_direct(a, b, q, z);
                assert!((got - want).abs() <= 1e-13 * want.abs().max(1e-3));
                assert!(got >= 0.0);
            }
        }
    }

    #[test]
    fn e_coefficients_special_values() {
        let p = pv(&[0.5, 0.3, 0.2]);
        let e = e_coefficients(&p, QZParams::BURES).unwrap();
        let wy = e_coefficients(&p, QZParams::WIGNER_YANASE).unwrap();
        let s = p.as_slice();
        for a in 0..3 {
            assert_eq!(e.at(a, a), 0.0);
            for b in 0..3 {
                if a != b {
                    let bures = (s[a] - s[b]).powi(2) / (s[a] + s[b]);
                    assert!((e.at(a, b) - bures).abs() < 1e-15);
                    let w = (s[a].sqrt() - s[b].sqrt()).powi(2);
                    assert!((wy.at(a, b) - w).abs() < 1e-15);
                    assert_eq!(e.at(a, b), e.at(b, a));
                }
            }
        }
    }

    #[test]
    fn e_cutoff_for_close_eigenvalues() {
        let p = pv(&[0.25 * (1.0 + 1e-10), 0.25 * (1.0 - 1e-10), 0.5]);
        let e = e_coefficients(&p, qz(0.3, 1.1)).unwrap();
        assert_eq!(e.at(0, 1), 0.0);
        assert!(e.at(0, 2) > 0.0);
    }

    #[test]
    fn qubit_general_matches_closed_form() {
        let b = build_su_basis(2).unwrap();
        let g = metric_qz(&pv(&[0.75, 0.25]), qz(0.3, 0.7), &b).unwrap();
        let c = qubit_metric_closed_form(0.5, qz(0.3, 0.7)).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert!((g.tangential_at(j, k) - c.tangential_at(j, k)).abs() < 1e-12);
            }
        }
        let v = TangentVector::new(SimplexTangent::new(vec![0.1, -0.1]).unwrap(), vec![0.0; 3]);
        let a = apply_metric(&g, &v, &v).unwrap();
        let bq = apply_metric(&c, &v, &v).unwrap();
        assert!((a - bq).abs() < 1e-14);
        // dw = 0.2, 1/(1 - 0.25)
        assert!((a - 0.04 / 0.75).abs() < 1e-14);
    }

    #[test]
    fn named_qubit_coefficients() {
        for &w in &[0.1, 0.5, 0.9] {
            let b = qubit_tangential_coefficient(w, QZParams::BURES);
            assert!((b - 4.0 * w * w).abs() < 1e-12);
            let wy = qubit_tangential_coefficient(w, QZParams::WIGNER_YANASE);
            assert!((wy - 8.0 * (1.0 - (1.0 - w * w).sqrt())).abs() < 1e-12);
        }
        assert!((qubit_q1_tangential_coefficient(0.5) - 3f64.ln()).abs() < 1e-15);
        assert!(qubit_q1_tangential_coefficient(1e-9).abs() < 1e-17);
        let near = qubit_tangential_coefficient(0.5, qz(1.0 - 1e-5, 1.0));
        assert!((near - 3f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn petz_named_functions() {
        for &t in &[0.01, 0.3, 1.0, 2.0, 50.0] {
            let b = petz_monotone_function(t, QZParams::BURES).unwrap();
            assert!((b - (1.0 + t) / 8.0).abs() < 1e-14);
            let w = petz_monotone_function(t, QZParams::WIGNER_YANASE).unwrap();
            assert!((w - (t.sqrt() + 1.0).powi(2) / 16.0).abs() < 1e-14);
        }
        let t: f64 = 3.0;
        let near = petz_monotone_function(t, qz(1.0 - 1e-6, 1.0)).unwrap();
        assert!((near - (t - 1.0) / (4.0 * t.ln())).abs() < 1e-6);
        assert!(petz_monotone_function(0.0, QZParams::BURES).is_err());
    }

    #[test]
    fn petz_matches_closed_form() {
        for &(w, q, z) in &[(0.3, 0.2, 0.6), (-0.7, 0.5, 1.9), (0.95, 0.8, 1.0)] {
            let a = petz_tangential_coefficient(w, qz(q, z)).unwrap();
            let b = qubit_tangential_coefficient(w, qz(q, z));
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
        assert_eq!(petz_tangential_coefficient(0.0, QZParams::BURES).unwrap(), 0.0);
        assert!(petz_tangential_coefficient(1e-6, QZParams::BURES).unwrap() < 1e-11);
    }

    #[test]
    fn radial_limit_values() {
        let seq = default_radial_sequence();
        for &(q, z) in &[(0.5, 1.0), (0.5, 0.5), (0.3, 1.5)] {
            let r = radial_limit_qubit(qz(q, z), &seq).unwrap();
            assert!(r.relative_error() < 1e-3, "{r:?}");
            assert!(r.settled);
        }
        let r = radial_limit_qubit(QZParams::WIGNER_YANASE, &seq).unwrap();
        assert_eq!(r.expected, 8.0);
        let r = radial_limit_qubit(qz(1.0 - 1e-3, 1.0), &seq).unwrap();
        assert!(!r.settled);
        assert!(radial_limit_qubit(QZParams::BURES, &[0.9, 0.5]).is_err());
    }

    #[test]
    fn special_metrics_match_generic() {
        let p = pv(&[0.4, 0.3, 0.2, 0.1]);
        let b = build_su_basis(4).unwrap();
        let pairs = [
            (SpecialMetric::Bures, QZParams::BURES),
            (SpecialMetric::WignerYanase, QZParams::WIGNER_YANASE),
            (SpecialMetric::Tsallis { q: 0.3 }, qz(0.3, 1.0)),
        ];
        for (which, params) in pairs {
            let s = special_metric(&p, which, &b).unwrap();
            let g = metric_qz(&p, params, &b).unwrap();
            for (x, y) in s.tangential.iter().zip(&g.tangential) {
                assert!((x - y).abs() < 1e-12, "{which:?}");
            }
        }
        let b2 = build_su_basis(2).unwrap();
        let vn = special_metric(&pv(&[0.75, 0.25]), SpecialMetric::VonNeumann, &b2).unwrap();
        assert!((vn.tangential_at(0, 0) - 3f64.ln()).abs() < 1e-15);
        let bures = special_metric(&pv(&[0.75, 0.25]), SpecialMetric::Bures, &b2).unwrap();
        assert!((bures.tangential_at(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qutrit_block_structure() {
        let p = pv(&[0.5, 0.3, 0.2]);
        let params = qz(0.4, 1.2);
        let g = metric_qz(&p, params, &build_su_basis(3).unwrap()).unwrap();
        let e = e_coefficients(&p, params).unwrap();
        let c = 2.0 * params.z * params.prefactor();
        let blocks = [((0, 1), e.at(0, 1)), ((3, 4), e.at(0, 2)), ((5, 6), e.at(1, 2))];
        let mut want = vec![0.0; 64];
        for ((i, j), ev) in blocks {
            want[i * 8 + i] = c * ev;
            want[j * 8 + j] = c * ev;
        }
        for (x, y) in g.tangential.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_qutrit_blocks() {
        let params = qz(0.4, 1.2);
        let b = build_su_basis(3).unwrap();
        let g = metric_qz(&pv(&[0.4, 0.4, 0.2]), params, &b).unwrap();
        assert_eq!(g.tangential_at(0, 0), 0.0);
        assert!((g.tangential_at(3, 3) - g.tangential_at(5, 5)).abs() < 1e-15);
        let split = |gap: f64| {
            let g = metric_qz(&pv(&[0.4 + gap / 2.0, 0.4 - gap / 2.0, 0.2]), params, &b).unwrap();
            (g.tangential_at(0, 0), (g.tangential_at(3, 3) - g.tangential_at(5, 5)).abs())
        };
        let (pair6, diff6) = split(1e-6);
        let (_, diff7) = split(1e-7);
        assert!(pair6 < 1e-8);
        // the remaining blocks merge linearly in the gap
        assert!(diff6 < 1e-5);
        assert!((diff6 / diff7 - 10.0).abs() < 1e-3);
    }

    #[test]
    fn imaginary_parts_cancel() {
        let p = pv(&[0.1, 0.2, 0.3, 0.4]);
        let r = imaginary_part_residual(&p, qz(0.3, 0.9), &build_su_basis(4).unwrap()).unwrap();
        assert!(r < 1e-15);
    }

    #[test]
    fn apply_metric_basic_properties() {
        let p = pv(&[0.5, 0.3, 0.2]);
        let g = metric_qz(&p, qz(0.6, 0.8), &build_su_basis(3).unwrap()).unwrap();
        let u = TangentVector::new(
            SimplexTangent::from_free_coordinates(&[0.1, 0.05]),
            (0..8).map(|k| k as f64 * 0.1 - 0.3).collect(),
        );
        let v = TangentVector::new(
            SimplexTangent::from_free_coordinates(&[-0.2, 0.07]),
            (0..8).map(|k| (k as f64).sin()).collect(),
        );
        let w = TangentVector::new(
            SimplexTangent::from_free_coordinates(&[0.3, 0.01]),
            (0..8).map(|k| (k as f64).cos()).collect(),
        );
        assert_eq!(apply_metric(&g, &u, &TangentVector::zero(3)).unwrap(), 0.0);
        let lhs = apply_metric(&g, &u.scaled_sum(0.5, &v).scaled_sum(1.0, &TangentVector::zero(3)), &w).unwrap();
        let rhs = apply_metric(&g, &u, &w).unwrap() + 0.5 * apply_metric(&g, &v, &w).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let a = apply_metric(&g, &u, &v).unwrap();
        let b = apply_metric(&g, &v, &u).unwrap();
        assert!((a - b).abs() < 1e-14);
        let simplex_only = TangentVector::new(u.simplex.clone(), vec![0.0; 8]);
        let fr: f64 = u.simplex.as_slice().iter().zip(p.as_slice()).map(|(x, q)| x * x / q).sum();
        assert!((apply_metric(&g, &simplex_only, &simplex_only).unwrap() - fr).abs() < 1e-15);
        assert!(apply_metric(&g, &TangentVector::zero(2), &u).is_err());
    }

    #[test]
    fn kernel_is_annihilated() {
        let b = build_su_basis(3).unwrap();
        for p in [vec![0.5, 0.3, 0.2], vec![0.4, 0.4, 0.2]] {
            let s = UnfoldedState::new(ComplexMatrix::identity(3), pv(&p)).unwrap();
            let g = metric_qz(s.probabilities(), qz(0.3, 1.4), &b).unwrap();
            for h in kernel_basis(&s) {
                let v = TangentVector::tangential(b.decompose(&h).unwrap());
                assert!(apply_metric(&g, &v, &v).unwrap().abs() < 1e-12);
            }
        }
    }
}
