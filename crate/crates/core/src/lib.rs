//! Adaptive C0 interior penalty methods for the displacement obstacle
//! problem of clamped Kirchhoff plates.

pub mod adapt;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod space;
pub mod traces;
pub mod vi_solver;

pub use error::{Error, Result};
