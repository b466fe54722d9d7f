//! Computational geometry of numbers for badly approximable targets.

pub mod badlab;
pub mod bestapprox;
pub mod dynamics;
pub mod error;
pub mod intlin;
pub mod lattice;
pub mod minima;
pub mod linalg;
pub mod reduce;
pub mod scalar;
pub mod templates;
pub mod torus;

pub use error::{GonError, Result};
pub use scalar::Scalar;
