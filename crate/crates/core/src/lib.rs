//! Band-preservation defects, band-preserving approximants and lower-bound
//! certificates for operators on finite-dimensional atomic Banach lattices.

pub mod analysis;
pub mod approx;
pub mod checks;
pub mod error;
pub mod function;
pub mod gallery;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod report;
pub mod rng;
pub mod suite;

pub use analysis::*;
pub use approx::*;
pub use error::{LatticeError, Result};
pub use lattice::*;
pub use operator::Operator;
pub use report::{analyze, AnalysisReport, Approximant, REPORT_SCHEMA};
