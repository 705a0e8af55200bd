//! Solvers and preconditioners for three-by-three block saddle point systems.

pub mod cholesky;
pub mod dense;
pub mod eigen;
pub mod error;
pub mod gmres;
pub mod mm;
pub mod ordering;
pub mod precond;
pub mod problems;
pub mod saddle;
pub mod sparse;
pub mod spd;
pub mod spectrum;
pub mod stationary;
pub mod vector;

pub use error::{Error, Result};
