//! Explicit vector-P1 finite element solver for the stabilized time-dependent
//! Maxwell equations in conductive media, with a manufactured-solution
//! verification harness.

pub mod analysis;
pub mod assembly;
pub mod checks;
pub mod cli;
pub mod coefficients;
pub mod config;
pub mod error;
pub mod manufactured;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod study;
pub mod timestepper;

pub use error::{Error, Result};
