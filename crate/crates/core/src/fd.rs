//! Finite-difference extraction of the metric and skewness tensor from a
//! two-point function near the diagonal.
//!
//! Chart coordinates `x ∈ R^D`, `D = (n−1) + (n²−1)`, map to
//! `(U exp(i Σ x_θ σ), p + Σ x_s (e_m − e_n))`. Each slot of the two-point
//! function gets its own copy of the chart, both centred on the same base.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{apply_channel, KrausChannel};
use crate::entropy::{qz_divergence, QZParams};
use crate::error::{Error, Result};
use crate::linalg::unitary_exp;
use crate::metric::{apply_metric, metric_qz, MetricTensor, TangentVector, BASIS_CONVENTION};
use crate::state::{fold, kernel_basis, DensityMatrix, SimplexTangent, UnfoldedState};
use crate::su_basis::SuBasis;

pub const HESSIAN_STEP: f64 = 1e-4;
pub const THIRD_STEP: f64 = 1e-3;

pub trait TwoPointFunction: Sync {
    fn eval(&self, x: &UnfoldedState, y: &UnfoldedState) -> Result<f64>;
}

impl<F> TwoPointFunction for F
where
    F: Fn(&UnfoldedState, &UnfoldedState) -> Result<f64> + Sync,
{
    fn eval(&self, x: &UnfoldedState, y: &UnfoldedState) -> Result<f64> {
        self(x, y)
    }
}

/// `S_{q,z}(π(x) | π(y))`.
#[derive(Debug, Clone, Copy)]
pub struct QzPullback(pub QZParams);

impl TwoPointFunction for QzPullback {
    fn eval(&self, x: &UnfoldedState, y: &UnfoldedState) -> Result<f64> {
        qz_divergence(&fold(x), &fold(y), self.0)
    }
}

/// `S(φ(π(x)) | φ(π(y)))`.
pub struct ChannelPullback<'a, S> {
    pub channel: &'a KrausChannel,
    pub divergence: S,
}

impl<S> TwoPointFunction for ChannelPullback<'_, S>
where
    S: Fn(&DensityMatrix, &DensityMatrix) -> Result<f64> + Sync,
{
    fn eval(&self, x: &UnfoldedState, y: &UnfoldedState) -> Result<f64> {
        let a = apply_channel(self.channel, &fold(x))?;
        let b = apply_channel(self.channel, &fold(y))?;
        (self.divergence)(&a, &b)
    }
}

#[derive(Debug, Clone)]
pub struct DiagonalChart<'b> {
    pub base: UnfoldedState,
    pub basis: &'b SuBasis,
    pub step: f64,
    pub third_step: f64,
}

impl<'b> DiagonalChart<'b> {
    pub fn new(base: UnfoldedState, basis: &'b SuBasis) -> Result<Self> {
        if basis.dim() != base.dim() {
            return Err(Error::DimMismatch {
                expected: base.dim(),
                got: basis.dim(),
            });
        }
        Ok(Self {
            base,
            basis,
            step: HESSIAN_STEP,
            third_step: THIRD_STEP,
        })
    }

    pub fn n(&self) -> usize {
        self.base.dim()
    }

    /// Number of chart coordinates.
    pub fn dim(&self) -> usize {
        let n = self.n();
        n - 1 + n * n - 1
    }

    pub fn simplex_dim(&self) -> usize {
        self.n() - 1
    }

    pub fn point(&self, x: &[f64]) -> Result<UnfoldedState> {
        let ns = self.simplex_dim();
        let a = SimplexTangent::from_free_coordinates(&x[..ns]);
        let p = self.base.probabilities().shifted(a.as_slice())?;
        let theta = &x[ns..];
        let u = if theta.iter().all(|&t| t == 0.0) {
            self.base.unitary().clone()
        } else {
            self.base.unitary() * &unitary_exp(&self.basis.combine(theta)?)?
        };
        Ok(UnfoldedState::new_unchecked(u, p))
    }

    /// Chart coordinates of a tangent vector.
    pub fn coordinates(&self, v: &TangentVector) -> Vec<f64> {
        let mut x = v.simplex.free_coordinates().to_vec();
        x.extend_from_slice(&v.theta);
        x
    }

    pub fn unit(&self, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim()];
        e[j] = 1.0;
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Left,
    Right,
}

fn eval_displaced<S: TwoPointFunction + ?Sized>(
    s: &S,
    chart: &DiagonalChart,
    terms: &[(Slot, &[f64], f64)],
) -> Result<f64> {
    let d = chart.dim();
    let mut left = vec![0.0; d];
    let mut right = vec![0.0; d];
    for (slot, dir, c) in terms {
        let target = match slot {
            Slot::Left => &mut left,
            Slot::Right => &mut right,
        };
        for (t, v) in target.iter_mut().zip(dir.iter()) {
            *t += c * v;
        }
    }
    s.eval(&chart.point(&left)?, &chart.point(&right)?)
}

/// `∂_u^{σ1} ∂_v^{σ2} S` at the base, central stencil of width `h`.
pub fn second_derivative<S: TwoPointFunction + ?Sized>(
    s: &S,
    chart: &DiagonalChart,
    (s1, u): (Slot, &[f64]),
    (s2, v): (Slot, &[f64]),
    h: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for a in [1.0, -1.0] {
        for b in [1.0, -1.0] {
            acc += a * b * eval_displaced(s, chart, &[(s1, u, a * h), (s2, v, b * h)])?;
        }
    }
    Ok(acc / (4.0 * h * h))
}

/// Richardson-extrapolated second derivative: `(4 D(h/2) − D(h))/3`.
pub fn second_derivative_richardson<S: TwoPointFunction + ?Sized>(
    s: &S,
    chart: &DiagonalChart,
    first: (Slot, &[f64]),
    second: (Slot, &[f64]),
) -> Result<f64> {
    let h = chart.step;
    let coarse = second_derivative(s, chart, first, second, h)?;
    let fine = second_derivative(s, chart, first, second, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `∂_u^{σ1} ∂_v^{σ2} ∂_w^{σ3} S` at the base.
pub fn third_derivative<S: TwoPointFunction + ?Sized>(
    s: &S,
    chart: &DiagonalChart,
    dirs: [(Slot, &[f64]); 3],
    h: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for a in [1.0, -1.0] {
        for b in [1.0, -1.0] {
            for c in [1.0, -1.0] {
                let terms = [
                    (dirs[0].0, dirs[0].1, a * h),
                    (dirs[1].0, dirs[1].1, b * h),
                    (dirs[2].0, dirs[2].1, c * h),
                ];
                acc += a * b * c * eval_displaced(s, chart, &terms)?;
            }
        }
    }
    Ok(acc / (8.0 * h * h * h))
}

/// Largest one-slot first derivative (Richardson-extrapolated central difference)
/// over all chart directions.
pub fn criticality_check<S: TwoPointFunction + ?Sized>(s: &S, chart: &DiagonalChart) -> Result<f64> {
    let h = chart.step;
    let d = chart.dim();
    let grads: Vec<f64> = (0..2 * d)
        .into_par_iter()
        .map(|idx| {
            let slot = if idx < d { Slot::Left } else { Slot::Right };
            let e = chart.unit(idx % d);
            let central = |h: f64| -> Result<f64> {
                let plus = eval_displaced(s, chart, &[(slot, &e, h)])?;
                let minus = eval_displaced(s, chart, &[(slot, &e, -h)])?;
                Ok((plus - minus) / (2.0 * h))
            };
            Ok(((4.0 * central(h / 2.0)? - central(h)?) / 3.0).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(grads.into_iter().fold(0.0, f64::max))
}

/// Dense row-major `D × D` matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartMatrix {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl ChartMatrix {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.at(i, j) * y[j];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|v| -v).collect(),
        }
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
    }

    /// `max |a − b| / max |b|`.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        self.max_distance(other) / other.max_abs().max(f64::MIN_POSITIVE)
    }
}

fn second_matrix<S: TwoPointFunction + ?Sized>(
    s: &S,
    chart: &DiagonalChart,
    s1: Slot,
    s2: Slot,
) -> Result<ChartMatrix> {
    let d = chart.dim();
    let symmetric = s1 == s2;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| !symmetric || i <= j)
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (ei, ej) = (chart.unit(i), chart.unit(j));
            second_derivative_richardson(s, chart, (s1, &ei), (s2, &ej))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut entries = vec![0.0; d * d];
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[i * d + j] = v;
        if symmetric {
            entries[j * d + i] = v;
        }
    }
    Ok(ChartMatrix { dim: d, entries })
}

/// Second-derivative data of a two-point function at the base point.
#[derive(Debug, Clone, Serialize)]
pub struct HessianMetric {
    /// `−∂_x ∂_y S`: the extracted metric in chart coordinates.
    pub g: ChartMatrix,
    /// `∂_x ∂_y S`.
    pub lr: ChartMatrix,
    /// `∂_x ∂_x S`.
    pub ll: ChartMatrix,
    /// `∂_y ∂_y S`.
    pub rr: ChartMatrix,
    /// Largest `|g|` entry coupling a simplex and a θ coordinate.
    pub mixed_max: f64,
    pub metric: MetricTensor,
}

impl HessianMetric {
    /// `g(v1, v2)` from the full chart matrix, including the mixed block.
    pub fn form(&self, chart: &DiagonalChart, v1: &TangentVector, v2: &TangentVector) -> f64 {
        self.g.form(&chart.coordinates(v1), &chart.coordinates(v2))
    }
}

/// Lift an `(n−1)×(n−1)` form in free simplex coordinates to the dp basis.
fn lift_simplex_block(g: &ChartMatrix, n: usize) -> Vec<f64> {
    let m = n - 1;
    // L = (AᵀA)⁻¹Aᵀ with A = [e_m − e_n]; (AᵀA)⁻¹ = I − J/n
    let mut l = vec![0.0; m * n];
    for r in 0..m {
        for c in 0..n {
            let at = |row: usize, col: usize| -> f64 {
                if col == n - 1 {
                    -1.0
                } else if col == row {
                    1.0
                } else {
                    0.0
                }
            };
            let mut v = 0.0;
            for k in 0..m {
                let inv = if r == k { 1.0 } else { 0.0 } - 1.0 / n as f64;
                v += inv * at(k, c);
            }
            l[r * n + c] = v;
        }
    }
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut v = 0.0;
            for r in 0..m {
                for c in 0..m {
                    v += l[r * n + a] * g.at(r, c) * l[c * n + b];
                }
            }
            out[a * n + b] = v;
        }
    }
    out
}

fn chart_metric_tensor(g: &ChartMatrix, chart: &DiagonalChart, label: &str) -> MetricTensor {
    let n = chart.n();
    let ns = chart.simplex_dim();
    let m = n * n - 1;
    let mut tangential = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            tangential[j * m + k] = 0.5 * (g.at(ns + j, ns + k) + g.at(ns + k, ns + j));
        }
    }
    MetricTensor {
        n,
        label: label.into(),
        params: None,
        transversal: lift_simplex_block(g, n),
        tangential,
        basis: BASIS_CONVENTION,
    }
}

/// Metric of a potential function as minus its mixed Hessian on the diagonal.
pub fn hessian_metric<S: TwoPointFunction + ?Sized>(s: &S, chart: &DiagonalChart) -> Result<HessianMetric> {
    let lr = second_matrix(s, chart, Slot::Left, Slot::Right)?;
    let ll = second_matrix(s, chart, Slot::Left, Slot::Left)?;
    let rr = second_matrix(s, chart, Slot::Right, Slot::Right)?;
    let g = lr.negated();
    let ns = chart.simplex_dim();
    let d = chart.dim();
    let mut mixed_max: f64 = 0.0;
    for i in 0..ns {
        for j in ns..d {
            mixed_max = mixed_max.max(g.at(i, j).abs()).max(g.at(j, i).abs());
        }
    }
    let metric = chart_metric_tensor(&g, chart, "fd_hessian");
    Ok(HessianMetric {
        g,
        lr,
        ll,
        rr,
        mixed_max,
        metric,
    })
}

/// `−∂_s ∂_t S(x(s v), x(t v))`: the extracted metric on a single vector.
pub fn directional_metric<S: TwoPointFunction + ?Sized>(
    s: &S,
    chart: &DiagonalChart,
    v: &TangentVector,
) -> Result<f64> {
    let x = chart.coordinates(v);
    Ok(-second_derivative_richardson(s, chart, (Slot::Left, &x), (Slot::Right, &x))?)
}

/// Metric of `(x, y) ↦ S(φ π x, φ π y)` in the input chart.
pub fn pullback_metric<S>(divergence: S, phi: &KrausChannel, chart: &DiagonalChart) -> Result<HessianMetric>
where
    S: Fn(&DensityMatrix, &DensityMatrix) -> Result<f64> + Sync,
{
    if phi.in_dim() != chart.n() {
        return Err(Error::ChannelDimMismatch {
            channel: phi.in_dim(),
            state: chart.n(),
        });
    }
    let f = ChannelPullback {
        channel: phi,
        divergence,
    };
    let mut h = hessian_metric(&f, chart)?;
    h.metric.label = "fd_pullback".into();
    Ok(h)
}

/// Rank-3 array in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartTensor3 {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl ChartTensor3 {
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[(i * self.dim + j) * self.dim + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn combine(&self, other: &Self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
    }

    /// Largest deviation from total symmetry under index permutations.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let v = self.at(i, j, k);
                    for w in [self.at(j, i, k), self.at(i, k, j), self.at(k, j, i)] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Slot patterns of the eight third-order combinations.
const SLOT_PATTERNS: [[Slot; 3]; 8] = {
    use Slot::{Left as L, Right as R};
    [
        [L, L, L],
        [R, R, R],
        [L, L, R],
        [R, R, L],
        [L, R, R],
        [R, L, L],
        [L, R, L],
        [R, L, R],
    ]
};

#[derive(Debug, Clone, Serialize)]
pub struct SkewnessTensor {
    /// `T = T_3 − T_4`.
    pub t: ChartTensor3,
    pub t12: ChartTensor3,
    pub t34: ChartTensor3,
    pub t56: ChartTensor3,
    pub t78: ChartTensor3,
}

impl SkewnessTensor {
    /// Largest pairwise distance among `T12, T56, −T34, −T78`.
    pub fn identity_defect(&self) -> f64 {
        let forms = [
            self.t12.clone(),
            self.t56.clone(),
            self.t34.combine(&self.t34, -2.0),
            self.t78.combine(&self.t78, -2.0),
        ];
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in a + 1..4 {
                worst = worst.max(forms[a].max_distance(&forms[b]));
            }
        }
        worst
    }
}

/// Richardson-extrapolated third differences for the eight slot patterns.
pub fn skewness_tensor<S: TwoPointFunction + ?Sized>(s: &S, chart: &DiagonalChart) -> Result<SkewnessTensor> {
    let d = chart.dim();
    let h = chart.third_step;
    let idx: Vec<(usize, usize, usize, usize)> = (0..8)
        .flat_map(|p| {
            (0..d).flat_map(move |i| (0..d).flat_map(move |j| (0..d).map(move |k| (p, i, j, k))))
        })
        .collect();
    let values = idx
        .par_iter()
        .map(|&(p, i, j, k)| {
            let (ei, ej, ek) = (chart.unit(i), chart.unit(j), chart.unit(k));
            let pat = SLOT_PATTERNS[p];
            let dirs = [(pat[0], &ei[..]), (pat[1], &ej[..]), (pat[2], &ek[..])];
            let coarse = third_derivative(s, chart, dirs, h)?;
            let fine = third_derivative(s, chart, dirs, h / 2.0)?;
            Ok((4.0 * fine - coarse) / 3.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let block = d * d * d;
    let ti: Vec<ChartTensor3> = values
        .chunks(block)
        .map(|c| ChartTensor3 {
            dim: d,
            entries: c.to_vec(),
        })
        .collect();
    let t12 = ti[0].combine(&ti[1], -1.0);
    let t34 = ti[2].combine(&ti[3], -1.0);
    let t56 = ti[4].combine(&ti[5], -1.0);
    let t78 = ti[6].combine(&ti[7], -1.0);
    Ok(SkewnessTensor {
        t: t34.clone(),
        t12,
        t34,
        t56,
        t78,
    })
}

/// Random tangent vector with no component along the kernel of the fold map.
pub fn random_nonkernel_tangent(s: &UnfoldedState, basis: &SuBasis, rng: &mut impl Rng) -> Result<TangentVector> {
    let n = s.dim();
    let free: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut theta: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for h in kernel_basis(s) {
        let mut k = basis.decompose(&h)?;
        for o in &ortho {
            let d: f64 = k.iter().zip(o).map(|(a, b)| a * b).sum();
            k.iter_mut().zip(o).for_each(|(a, b)| *a -= d * b);
        }
        let norm = k.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            k.iter_mut().for_each(|a| *a /= norm);
            ortho.push(k);
        }
    }
    for o in &ortho {
        let d: f64 = theta.iter().zip(o).map(|(a, b)| a * b).sum();
        theta.iter_mut().zip(o).for_each(|(a, b)| *a -= d * b);
    }
    Ok(TangentVector::new(SimplexTangent::from_free_coordinates(&free), theta))
}

/// One named pass/fail measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured < tolerance`.
    pub fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured < tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const TOL_GRAD: f64 = 1e-6;
pub const TOL_HESSIAN_REL: f64 = 1e-3;
pub const TOL_SLOT_IDENTITY_REL: f64 = 2e-4;
pub const TOL_MIXED_BLOCK: f64 = 1e-5;
pub const TOL_SKEWNESS: f64 = 5e-3;
pub const TOL_KERNEL: f64 = 1e-12;

/// Which families of checks [`verify_suite`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteCheck {
    Criticality,
    Hessian,
    SlotIdentities,
    Skewness,
    Kernel,
}

impl SuiteCheck {
    pub const ALL: [SuiteCheck; 5] = [
        SuiteCheck::Criticality,
        SuiteCheck::Hessian,
        SuiteCheck::SlotIdentities,
        SuiteCheck::Skewness,
        SuiteCheck::Kernel,
    ];
}

/// Run the chart-based checks of the q-z pullback at one base point.
///
/// Every tolerance is multiplied by `tol_scale`.
pub fn verify_suite(
    base: UnfoldedState,
    basis: &SuBasis,
    params: QZParams,
    checks: &[SuiteCheck],
    probes: &[TangentVector],
    tol_scale: f64,
) -> Result<VerificationReport> {
    let n = base.dim();
    let chart = DiagonalChart::new(base, basis)?;
    let s = QzPullback(params);
    let closed = metric_qz(chart.base.probabilities(), params, basis)?;
    let mut out = Vec::new();
    let tag = |name: &str| format!("n{n}/{name}");
    let needs_hessian = checks
        .iter()
        .any(|c| matches!(c, SuiteCheck::Hessian | SuiteCheck::SlotIdentities));
    let hess = if needs_hessian {
        Some(hessian_metric(&s, &chart)?)
    } else {
        None
    };
    for check in checks {
        match check {
            SuiteCheck::Criticality => {
                out.push(Check::below(tag("criticality"), criticality_check(&s, &chart)?, TOL_GRAD * tol_scale));
            }
            SuiteCheck::Hessian => {
                let h = hess.as_ref().expect("computed above");
                let mut worst: f64 = 0.0;
                for v in probes.iter() {
                    let want = apply_metric(&closed, v, v)?;
                    worst = worst.max(((h.form(&chart, v, v) - want) / want).abs());
                }
                out.push(Check::below(tag("hessian_vs_closed_form"), worst, TOL_HESSIAN_REL * tol_scale));
                out.push(Check::below(tag("mixed_block"), h.mixed_max, TOL_MIXED_BLOCK * tol_scale));
            }
            SuiteCheck::SlotIdentities => {
                let h = hess.as_ref().expect("computed above");
                out.push(Check::below(
                    tag("g_ll_vs_g"),
                    h.ll.relative_distance(&h.g),
                    TOL_SLOT_IDENTITY_REL * tol_scale,
                ));
                out.push(Check::below(
                    tag("g_rr_vs_g"),
                    h.rr.relative_distance(&h.g),
                    TOL_SLOT_IDENTITY_REL * tol_scale,
                ));
            }
            SuiteCheck::Skewness => {
                let t = skewness_tensor(&s, &chart)?;
                out.push(Check::below(tag("skewness_identities"), t.identity_defect(), TOL_SKEWNESS * tol_scale));
                if (params.q - 0.5).abs() < 1e-12 {
                    out.push(Check::below(tag("skewness_vanishes"), t.t.max_abs(), TOL_SKEWNESS * tol_scale));
                }
            }
            SuiteCheck::Kernel => {
                let mut worst: f64 = 0.0;
                for k in kernel_basis(&chart.base) {
                    let v = TangentVector::tangential(basis.decompose(&k)?);
                    worst = worst.max(apply_metric(&closed, &v, &v)?.abs());
                }
                out.push(Check::below(tag("kernel_annihilation"), worst, TOL_KERNEL * tol_scale));
            }
        }
    }
    Ok(VerificationReport { checks: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{depolarizing, unitary_channel};
    use crate::state::{haar_special_unitary, random_unfolded_with, ProbabilityVector};
    use crate::su_basis::build_su_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn base(n: usize, seed: u64) -> UnfoldedState {
        random_unfolded_with(n, 0.05, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn chart_origin_is_base() {
        let b = build_su_basis(3).unwrap();
        let s = base(3, 1);
        let chart = DiagonalChart::new(s.clone(), &b).unwrap();
        assert_eq!(chart.dim(), 10);
        assert_eq!(chart.point(&vec![0.0; 10]).unwrap(), s);
    }

    #[test]
    fn constant_function_is_flat() {
        let b = build_su_basis(2).unwrap();
        let chart = DiagonalChart::new(base(2, 2), &b).unwrap();
        let c = |_: &UnfoldedState, _: &UnfoldedState| Ok(1.5);
        assert_eq!(criticality_check(&c, &chart).unwrap(), 0.0);
        assert_eq!(hessian_metric(&c, &chart).unwrap().g.max_abs(), 0.0);
        assert_eq!(skewness_tensor(&c, &chart).unwrap().t.max_abs(), 0.0);
    }

    #[test]
    fn non_potential_function_is_flagged() {
        let b = build_su_basis(2).unwrap();
        let chart = DiagonalChart::new(base(2, 3), &b).unwrap();
        let f = |x: &UnfoldedState, y: &UnfoldedState| {
            let a = x.probabilities().as_slice()[0];
            let c = y.probabilities().as_slice()[0];
            Ok((a * a - c * c) / 2.0)
        };
        let grad = criticality_check(&f, &chart).unwrap();
        let p0 = chart.base.probabilities().as_slice()[0];
        assert!((grad - p0).abs() < 1e-10);
    }

    #[test]
    fn qz_pullback_is_critical_and_matches_closed_form() {
        let b = build_su_basis(2).unwrap();
        let params = QZParams::new(0.4, 1.3).unwrap();
        let chart = DiagonalChart::new(base(2, 4), &b).unwrap();
        let s = QzPullback(params);
        assert!(criticality_check(&s, &chart).unwrap() < TOL_GRAD);
        let h = hessian_metric(&s, &chart).unwrap();
        let closed = metric_qz(chart.base.probabilities(), params, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let v = random_nonkernel_tangent(&chart.base, &b, &mut rng).unwrap();
            let fd = h.form(&chart, &v, &v);
            let via_tensor = apply_metric(&h.metric, &v, &v).unwrap();
            let want = apply_metric(&closed, &v, &v).unwrap();
            assert!(((fd - want) / want).abs() < 1e-4);
            assert!(((via_tensor - want) / want).abs() < 1e-4);
            let dir = directional_metric(&s, &chart, &v).unwrap();
            assert!(((dir - want) / want).abs() < 1e-4);
        }
        assert!(h.mixed_max < TOL_MIXED_BLOCK);
        assert!(h.ll.relative_distance(&h.g) < TOL_SLOT_IDENTITY_REL);
        assert!(h.rr.relative_distance(&h.g) < TOL_SLOT_IDENTITY_REL);
    }

    #[test]
    fn left_right_transpose_symmetry() {
        let b = build_su_basis(2).unwrap();
        let chart = DiagonalChart::new(base(2, 6), &b).unwrap();
        let h = hessian_metric(&QzPullback(QZParams::new(0.3, 0.8).unwrap()), &chart).unwrap();
        let d = chart.dim();
        for i in 0..d {
            for j in 0..d {
                assert!((h.lr.at(i, j) - h.lr.at(j, i)).abs() < 1e-5 * (1.0 + h.lr.max_abs()));
            }
        }
    }

    #[test]
    fn simplex_lift_reproduces_free_form() {
        let b = build_su_basis(3).unwrap();
        let chart = DiagonalChart::new(base(3, 7), &b).unwrap();
        let d = chart.dim();
        let mut entries = vec![0.0; d * d];
        entries[0] = 2.0;
        entries[1] = 0.5;
        entries[d] = 0.5;
        entries[d + 1] = 3.0;
        let g = ChartMatrix { dim: d, entries };
        let t = chart_metric_tensor(&g, &chart, "x");
        let v = TangentVector::new(SimplexTangent::from_free_coordinates(&[0.3, -0.7]), vec![0.0; 8]);
        let x = chart.coordinates(&v);
        assert!((apply_metric(&t, &v, &v).unwrap() - g.form(&x, &x)).abs() < 1e-14);
    }

    #[test]
    fn skewness_vanishes_for_symmetric_divergence() {
        let b = build_su_basis(2).unwrap();
        let chart = DiagonalChart::new(base(2, 8), &b).unwrap();
        let s = QzPullback(QZParams::new(0.5, 0.8).unwrap());
        let x = chart.base.clone();
        let y = chart.point(&[0.01, 0.02, -0.03, 0.01]).unwrap();
        assert!((s.eval(&x, &y).unwrap() - s.eval(&y, &x).unwrap()).abs() < 1e-14);
        let t = skewness_tensor(&s, &chart).unwrap();
        assert!(t.t.max_abs() < TOL_SKEWNESS);
        assert!(t.identity_defect() < TOL_SKEWNESS);
    }

    #[test]
    fn skewness_identities_generic_q() {
        let b = build_su_basis(2).unwrap();
        let chart = DiagonalChart::new(base(2, 9), &b).unwrap();
        let t = skewness_tensor(&QzPullback(QZParams::new(0.3, 1.2).unwrap()), &chart).unwrap();
        assert!(t.t.max_abs() > 0.1);
        assert!(t.identity_defect() < TOL_SKEWNESS, "{}", t.identity_defect());
    }

    #[test]
    fn identity_and_unitary_pullbacks() {
        let b = build_su_basis(2).unwrap();
        let params = QZParams::new(0.35, 0.9).unwrap();
        let chart = DiagonalChart::new(base(2, 10), &b).unwrap();
        let div = move |a: &DensityMatrix, c: &DensityMatrix| qz_divergence(a, c, params);
        let direct = hessian_metric(&QzPullback(params), &chart).unwrap();
        let id = pullback_metric(div, &KrausChannel::identity(2), &chart).unwrap();
        assert!(id.g.max_distance(&direct.g) < 1e-10);
        let u = haar_special_unitary(2, &mut ChaCha8Rng::seed_from_u64(11));
        let rotated = pullback_metric(div, &unitary_channel(u).unwrap(), &chart).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let v = random_nonkernel_tangent(&chart.base, &b, &mut rng).unwrap();
            let a = rotated.form(&chart, &v, &v);
            let c = direct.form(&chart, &v, &v);
            assert!(((a - c) / c).abs() < 1e-6);
        }
    }

    #[test]
    fn depolarizing_pullback_contracts() {
        let b = build_su_basis(2).unwrap();
        let chart = DiagonalChart::new(base(2, 13), &b).unwrap();
        let div = |a: &DensityMatrix, c: &DensityMatrix| qz_divergence(a, c, QZParams::BURES);
        let pulled = pullback_metric(div, &depolarizing(2, 0.5).unwrap(), &chart).unwrap();
        let closed = metric_qz(chart.base.probabilities(), QZParams::BURES, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let v = random_nonkernel_tangent(&chart.base, &b, &mut rng).unwrap();
            assert!(pulled.form(&chart, &v, &v) <= apply_metric(&closed, &v, &v).unwrap());
        }
        assert!(matches!(
            pullback_metric(div, &depolarizing(3, 0.5).unwrap(), &chart),
            Err(Error::ChannelDimMismatch { .. })
        ));
    }

    #[test]
    fn probes_outside_simplex_are_reported() {
        let b = build_su_basis(2).unwrap();
        let p = ProbabilityVector::new(vec![1.0 - 1e-5, 1e-5]).unwrap();
        let s = UnfoldedState::new(crate::linalg::ComplexMatrix::identity(2), p).unwrap();
        let chart = DiagonalChart::new(s, &b).unwrap();
        assert!(matches!(
            hessian_metric(&QzPullback(QZParams::BURES), &chart),
            Err(Error::ProbeOutOfDomain(_))
        ));
    }

    #[test]
    fn nonkernel_vectors_avoid_kernel() {
        let b = build_su_basis(3).unwrap();
        let p = ProbabilityVector::new(vec![0.4, 0.4, 0.2]).unwrap();
        let s = UnfoldedState::new(crate::linalg::ComplexMatrix::identity(3), p).unwrap();
        let v = random_nonkernel_tangent(&s, &b, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for k in kernel_basis(&s) {
            let kc = b.decompose(&k).unwrap();
            let d: f64 = kc.iter().zip(&v.theta).map(|(a, c)| a * c).sum();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn suite_passes_and_scaled_tolerance_fails() {
        let b = build_su_basis(2).unwrap();
        let s = base(2, 15);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let probes: Vec<TangentVector> = (0..5)
            .map(|_| random_nonkernel_tangent(&s, &b, &mut rng).unwrap())
            .collect();
        let params = QZParams::new(0.5, 0.7).unwrap();
        let r = verify_suite(s.clone(), &b, params, &SuiteCheck::ALL, &probes, 1.0).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = verify_suite(s, &b, params, &[SuiteCheck::Hessian], &probes, 1e-12).unwrap();
        assert!(!r.passed());
        assert!(r.failures().any(|c| c.name.contains("hessian")));
    }
}
