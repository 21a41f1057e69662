//! Quantum information geometry of the regularized q-z relative entropies.
//!
//! The crate builds density matrices and their unfolding `(U, p)`, evaluates the
//! q-z divergence family, assembles the induced metric in closed form, and checks
//! it against finite-difference derivatives and the data-processing inequality.

pub mod channel;
pub mod entropy;
pub mod error;
pub mod fd;
pub mod linalg;
pub mod metric;
pub mod state;
pub mod su_basis;

pub use error::{Error, Result};
