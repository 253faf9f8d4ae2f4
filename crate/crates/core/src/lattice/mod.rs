//! Finite-dimensional atomic lattice substrate: vectors with the
//! coordinatewise order, lattice norms, band projections and partitions.

mod band;
mod norm;
mod vector;

pub use band::{refine, BandProjection, Partition};
pub(crate) use band::{lex_cmp_masks, mask_indices};
pub use norm::{vector_norm, NormSpec};
pub use vector::{componentwise_min, lattice_op, LatticeOp, Vector};
