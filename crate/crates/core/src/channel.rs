//! Kraus channels, the data-processing scan over the (q, z) plane, and the
//! metric monotonicity check.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{qz_divergence, QZParams};
use crate::error::{Error, Result};
use crate::fd::{directional_metric, random_nonkernel_tangent, ChannelPullback, DiagonalChart};
use crate::linalg::ComplexMatrix;
use crate::metric::{apply_metric, metric_qz};
use crate::state::{random_state_with, random_unfolded_with, haar_special_unitary, DensityMatrix};
use crate::su_basis::build_su_basis;

pub const TRACE_PRESERVATION_TOL: f64 = 1e-10;
/// Weight of `I/n` mixed into non-invertible channel outputs.
pub const REGULARIZATION_EPS: f64 = 1e-9;
/// Relative slack of the DPI comparison.
pub const TOL_DPI: f64 = 1e-8;
pub const TOL_MONOTONICITY: f64 = 1e-5;

/// Smallest eigenvalue of sampled states in the DPI scan.
const SCAN_MIN_EIG: f64 = 1e-3;
/// Smallest eigenvalue of base points in the monotonicity check (keeps FD probes interior).
const MONO_MIN_EIG: f64 = 0.02;

/// Rectangular `rows × cols` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl KrausOperator {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn from_square(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        Self::from_fn(n, n, |i, j| m[(i, j)])
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    /// `K ρ K^H`.
    fn conjugate(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let (r, c) = (self.rows, self.cols);
        let mut kr = vec![Complex64::new(0.0, 0.0); r * c];
        for i in 0..r {
            for k in 0..c {
                let kik = self.at(i, k);
                if kik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..c {
                    kr[i * c + j] += kik * rho[(k, j)];
                }
            }
        }
        ComplexMatrix::from_fn(r, |i, j| (0..c).map(|k| kr[i * c + k] * self.at(j, k).conj()).sum())
    }
}

/// CPTP map `ρ ↦ Σ K_i ρ K_i^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<KrausOperator>,
}

impl KrausChannel {
    /// Validates shapes and trace preservation.
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<KrausOperator>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || kraus.is_empty() {
            return Err(Error::BadDim("channel needs positive dimensions and at least one Kraus operator".into()));
        }
        if let Some(k) = kraus.iter().find(|k| k.rows != out_dim || k.cols != in_dim) {
            return Err(Error::BadDim(format!(
                "Kraus operator is {}x{}, expected {out_dim}x{in_dim}",
                k.rows, k.cols
            )));
        }
        let ch = Self { in_dim, out_dim, kraus };
        let defect = ch.trace_preservation_defect();
        if defect > TRACE_PRESERVATION_TOL {
            return Err(Error::BadParams(format!("Kraus operators are not trace preserving (defect {defect:e})")));
        }
        Ok(ch)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            in_dim: n,
            out_dim: n,
            kraus: vec![KrausOperator::from_square(&ComplexMatrix::identity(n))],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[KrausOperator] {
        &self.kraus
    }

    /// `max |Σ K^H K − I|`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let n = self.in_dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let s: Complex64 = self
                    .kraus
                    .iter()
                    .map(|k| (0..self.out_dim).map(|i| k.at(i, a).conj() * k.at(i, b)).sum::<Complex64>())
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// `ρ ↦ U ρ U^H`.
pub fn unitary_channel(u: ComplexMatrix) -> Result<KrausChannel> {
    let n = u.dim();
    KrausChannel::new(n, n, vec![KrausOperator::from_square(&u)])
}

/// `ρ ↦ (1 − λ) ρ + λ I/n`.
pub fn depolarizing(n: usize, lambda: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadParams(format!("depolarizing weight must lie in [0, 1], got {lambda}")));
    }
    let mut kraus = vec![KrausOperator::from_square(&ComplexMatrix::identity(n).scale_real((1.0 - lambda).sqrt()))];
    let w = (lambda / n as f64).sqrt();
    for i in 0..n {
        for j in 0..n {
            kraus.push(KrausOperator::from_square(&ComplexMatrix::unit(n, i, j).scale_real(w)));
        }
    }
    KrausChannel::new(n, n, kraus)
}

/// Stinespring sample: a Haar isometry `in → out ⊗ env` cut into `env` Kraus blocks.
pub fn random_channel_with(in_dim: usize, out_dim: usize, env_dim: usize, rng: &mut impl Rng) -> Result<KrausChannel> {
    if in_dim == 0 || out_dim == 0 || env_dim == 0 {
        return Err(Error::BadDim("channel dimensions must be positive".into()));
    }
    let rows = out_dim * env_dim;
    if rows < in_dim {
        return Err(Error::BadDim(format!(
            "no isometry from dimension {in_dim} into {out_dim}x{env_dim}"
        )));
    }
    let mut cols: Vec<Vec<Complex64>> = (0..in_dim)
        .map(|_| {
            (0..rows)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    for j in 0..in_dim {
        for k in 0..j {
            let proj: Complex64 = (0..rows).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..rows {
                let v = cols[k][i];
                cols[j][i] -= proj * v;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= norm);
    }
    let kraus = (0..env_dim)
        .map(|e| KrausOperator::from_fn(out_dim, in_dim, |i, j| cols[j][i * env_dim + e]))
        .collect();
    KrausChannel::new(in_dim, out_dim, kraus)
}

pub fn random_channel(in_dim: usize, out_dim: usize, env_dim: usize, seed: u64) -> Result<KrausChannel> {
    random_channel_with(in_dim, out_dim, env_dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn apply_channel(phi: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if phi.in_dim != rho.dim() {
        return Err(Error::ChannelDimMismatch {
            channel: phi.in_dim,
            state: rho.dim(),
        });
    }
    let mut out = ComplexMatrix::zeros(phi.out_dim);
    for k in &phi.kraus {
        out = &out + &k.conjugate(rho.matrix());
    }
    DensityMatrix::new(out.hermitian_part())
}

/// Channel output, mixed with `ε I/n` when it is not invertible.
pub fn apply_channel_regularized(phi: &KrausChannel, rho: &DensityMatrix) -> Result<(DensityMatrix, bool)> {
    let out = apply_channel(phi, rho)?;
    if out.is_invertible() {
        Ok((out, false))
    } else {
        Ok((out.mixed_with_identity(REGULARIZATION_EPS), true))
    }
}

/// Which channels the DPI scan samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    /// Stinespring channels with output dimension `n` and environment `env_dim`.
    Random { env_dim: usize },
    /// Haar unitary conjugations.
    Unitary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpiGridPoint {
    pub q: f64,
    pub z: f64,
    pub trials: usize,
    pub violations: usize,
    /// Smallest `S(ρ,ϱ) − S(φρ,φϱ)` seen.
    pub worst_gap: f64,
    /// Trials whose channel outputs needed regularization.
    pub regularized: usize,
    pub proven: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpiScanResult {
    pub n: usize,
    pub seed: u64,
    pub family: ChannelFamily,
    pub grid: Vec<DpiGridPoint>,
}

impl DpiScanResult {
    pub fn total_violations(&self) -> usize {
        self.grid.iter().map(|g| g.violations).sum()
    }

    pub fn proven_violations(&self) -> usize {
        self.grid.iter().filter(|g| g.proven).map(|g| g.violations).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,z,trials,violations,worst_gap,regularized,proven\n");
        for g in &self.grid {
            s.push_str(&format!(
                "{},{},{},{},{:e},{},{}\n",
                g.q, g.z, g.trials, g.violations, g.worst_gap, g.regularized, g.proven
            ));
        }
        s
    }
}

/// Independent stream for `(seed, grid index, trial)`.
pub fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

fn check_grid(q_grid: &[f64], z_grid: &[f64]) -> Result<()> {
    if q_grid.is_empty() || z_grid.is_empty() {
        return Err(Error::BadGrid("grids must be non-empty".into()));
    }
    if let Some(q) = q_grid.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
        return Err(Error::BadGrid(format!("q = {q} outside (0, 1)")));
    }
    if let Some(z) = z_grid.iter().find(|&&z| !(z > 0.0) || !z.is_finite()) {
        return Err(Error::BadGrid(format!("z = {z} is not positive")));
    }
    Ok(())
}

struct Trial {
    gap: f64,
    violated: bool,
    regularized: bool,
}

fn dpi_trial(params: QZParams, n: usize, family: ChannelFamily, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let rho = random_state_with(n, SCAN_MIN_EIG, rng)?;
    let sigma = random_state_with(n, SCAN_MIN_EIG, rng)?;
    let phi = match family {
        ChannelFamily::Random { env_dim } => random_channel_with(n, n, env_dim, rng)?,
        ChannelFamily::Unitary => unitary_channel(haar_special_unitary(n, rng))?,
    };
    let (a, ra) = apply_channel_regularized(&phi, &rho)?;
    let (b, rb) = apply_channel_regularized(&phi, &sigma)?;
    let before = qz_divergence(&rho, &sigma, params)?;
    let after = qz_divergence(&a, &b, params)?;
    let gap = before - after;
    Ok(Trial {
        gap,
        violated: gap < -TOL_DPI * (1.0 + before.abs()),
        regularized: ra || rb,
    })
}

/// Sample `trials` (ρ, ϱ, φ) triples at every grid point and tally DPI violations.
pub fn dpi_scan(
    q_grid: &[f64],
    z_grid: &[f64],
    n: usize,
    trials: usize,
    seed: u64,
    family: ChannelFamily,
) -> Result<DpiScanResult> {
    check_grid(q_grid, z_grid)?;
    if n < 1 || trials == 0 {
        return Err(Error::BadParams("dimension and trial count must be positive".into()));
    }
    let points: Vec<(f64, f64)> = q_grid
        .iter()
        .flat_map(|&q| z_grid.iter().map(move |&z| (q, z)))
        .collect();
    let grid = points
        .par_iter()
        .enumerate()
        .map(|(idx, &(q, z))| {
            let params = QZParams::new(q, z).map_err(|e| Error::BadGrid(e.to_string()))?;
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|t| dpi_trial(params, n, family, &mut trial_rng(seed, idx, t)))
                .collect::<Result<Vec<Trial>>>()?;
            Ok(DpiGridPoint {
                q,
                z,
                trials,
                violations: outcomes.iter().filter(|t| t.violated).count(),
                worst_gap: outcomes.iter().map(|t| t.gap).fold(f64::INFINITY, f64::min),
                regularized: outcomes.iter().filter(|t| t.regularized).count(),
                proven: params.dpi_proven(),
            })
        })
        .collect::<Result<Vec<DpiGridPoint>>>()?;
    Ok(DpiScanResult { n, seed, family, grid })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub params: QZParams,
    pub n: usize,
    pub trials: usize,
    /// Whether failures count against the parameters (proven region only).
    pub asserted: bool,
    pub failures: usize,
    /// Smallest `g(X,X) − (φ*g)(X,X)`.
    pub worst_margin: f64,
    pub tolerance: f64,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        !self.asserted || self.failures == 0
    }
}

/// Compare the closed-form metric with the finite-difference pullback through random channels.
pub fn monotonicity_check(params: QZParams, n: usize, trials: usize, seed: u64) -> Result<MonotonicityReport> {
    params.validate()?;
    let basis = build_su_basis(n)?;
    let margins = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, usize::MAX >> 32, t);
            let base = random_unfolded_with(n, MONO_MIN_EIG, &mut rng)?;
            let phi = random_channel_with(n, n, n, &mut rng)?;
            let v = random_nonkernel_tangent(&base, &basis, &mut rng)?;
            let g = apply_metric(&metric_qz(base.probabilities(), params, &basis)?, &v, &v)?;
            let chart = DiagonalChart::new(base, &basis)?;
            let pulled = ChannelPullback {
                channel: &phi,
                divergence: |a: &DensityMatrix, b: &DensityMatrix| qz_divergence(a, b, params),
            };
            Ok(g - directional_metric(&pulled, &chart, &v)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MonotonicityReport {
        params,
        n,
        trials,
        asserted: params.dpi_proven(),
        failures: margins.iter().filter(|&&m| m < -TOL_MONOTONICITY).count(),
        worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        tolerance: TOL_MONOTONICITY,
    })
}
