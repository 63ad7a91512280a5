//! Lyapunov-Perron computation of local unstable and stable manifolds for
//! finite-dimensional (Galerkin-truncated) evolution equations, with the
//! supporting spectral, Lyapunov-form and water-wave linear analysis.

pub mod error;
pub mod graded_space;
pub mod linear_analysis;
pub mod lyapunov_perron;
pub mod models;
pub mod numerics;
pub mod oracles;
pub mod waterwave;

pub use error::{Error, Result};
