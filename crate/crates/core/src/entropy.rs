//! The q-z relative entropy family
//!
//! `S_{q,z}(ρ|ϱ) = (1 − Tr (ρ^{q/z} ϱ^{(1−q)/z})^z) / (q(1−q))`
//!
//! and its named members. Parameters at the edges of `(0, 1)` are rejected by
//! the generic path; the limits have their own functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, product_spectrum, spectral_fn, trace_product_power};
use crate::state::DensityMatrix;

/// How close `q` may get to 0 or 1 on the generic path.
pub const Q_EDGE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QZParams {
    pub q: f64,
    pub z: f64,
}

impl QZParams {
    /// Validates `q ∈ (0, 1)` away from the edges and `z > 0`.
    pub fn new(q: f64, z: f64) -> Result<Self> {
        let p = Self { q, z };
        p.validate()?;
        Ok(p)
    }

    pub const BURES: Self = Self { q: 0.5, z: 0.5 };
    pub const WIGNER_YANASE: Self = Self { q: 0.5, z: 1.0 };

    pub fn validate(&self) -> Result<()> {
        if !(self.z > 0.0) || !self.z.is_finite() {
            return Err(Error::BadParams(format!("z must be positive, got {}", self.z)));
        }
        if !(self.q >= Q_EDGE_EPS && self.q <= 1.0 - Q_EDGE_EPS) {
            return Err(Error::BadParams(format!(
                "q must lie in (0, 1) on the generic path, got {}",
                self.q
            )));
        }
        Ok(())
    }

    /// `1/(q(1−q))`.
    pub fn prefactor(&self) -> f64 {
        1.0 / (self.q * (1.0 - self.q))
    }

    /// Whether the data-processing inequality is known to hold at these parameters.
    pub fn dpi_proven(&self) -> bool {
        const EPS: f64 = 1e-12;
        let (q, z) = (self.q, self.z);
        let interior = q > 0.0 && q < 1.0;
        let tsallis = (z - 1.0).abs() < EPS && interior;
        let diagonal = (z - q).abs() < EPS && q >= 0.5 - EPS;
        let named = ((q - 0.5).abs() < EPS) && ((z - 0.5).abs() < EPS || (z - 1.0).abs() < EPS);
        tsallis || diagonal || named
    }
}

/// `(x^{1−q} − 1)/(1−q)`, or `ln x` once `|q − 1| < 1e-7`.
pub fn q_log(x: f64, q: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::DomainError(format!("q-logarithm of {x}")));
    }
    let lx = x.ln();
    if (q - 1.0).abs() < Q_EDGE_EPS {
        return Ok(lx);
    }
    Ok(((1.0 - q) * lx).exp_m1() / (1.0 - q))
}

fn check_pair(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    rho.require_invertible()?;
    sigma.require_invertible()
}

/// `Tr (ρ^{q/z} ϱ^{(1−q)/z})^z`.
pub fn trace_functional(rho: &DensityMatrix, sigma: &DensityMatrix, params: QZParams) -> Result<f64> {
    params.validate()?;
    check_pair(rho, sigma)?;
    let (q, z) = (params.q, params.z);
    let a = spectral_fn(rho.matrix(), |x| x.powf(q / z))?;
    let b = spectral_fn(sigma.matrix(), |x| x.powf((1.0 - q) / z))?;
    trace_product_power(&a, &b, z)
}

pub fn qz_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, params: QZParams) -> Result<f64> {
    let f = trace_functional(rho, sigma, params)?;
    Ok(params.prefactor() * (1.0 - f))
}

/// `S_{q,1}`.
pub fn tsallis_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, q: f64) -> Result<f64> {
    qz_divergence(rho, sigma, QZParams::new(q, 1.0)?)
}

/// `Tr ρ (ln ρ − ln ϱ)`.
pub fn von_neumann_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let self_term: f64 = eig_hermitian(rho.matrix())?
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum();
    let log_sigma = spectral_fn(sigma.matrix(), f64::ln)?;
    let cross = (rho.matrix() * &log_sigma).trace().re;
    Ok(self_term - cross)
}

/// `4(1 − Tr √(√ϱ ρ √ϱ))`.
pub fn bures_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let fidelity: f64 = product_spectrum(rho.matrix(), sigma.matrix())?
        .iter()
        .map(|&m| m.max(0.0).sqrt())
        .sum();
    Ok(4.0 * (1.0 - fidelity))
}

/// `4(1 − Tr ρ^{1/2} ϱ^{1/2})`.
pub fn wigner_yanase_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let a = spectral_fn(rho.matrix(), f64::sqrt)?;
    let b = spectral_fn(sigma.matrix(), f64::sqrt)?;
    Ok(4.0 * (1.0 - (&a * &b).trace().re))
}

/// Unregularized `D_{q,z} = −ln(Tr …)/(1 − q)`, for reporting only.
pub fn log_form(rho: &DensityMatrix, sigma: &DensityMatrix, params: QZParams) -> Result<f64> {
    let f = trace_functional(rho, sigma, params)?;
    Ok(-f.ln() / (1.0 - params.q))
}
