//! Finite models of two function lattices: piecewise-linear functions on
//! `(0, 1]` with a dyadic-weighted sup norm, and convergent sequences under
//! a norm that overweights the limit.

mod elattice;
mod pl;
mod renorm;

pub use elattice::{
    adversarial_phi_search, apply_tn, center_witness_check, e_certificate, e_norm, hat,
    AdversarialOptions, AdversarialReport, ECertificate, Witness,
};
pub use pl::{ELatticeConfig, PLFunction};
pub use renorm::{renorm_certificate, renorm_norm, RenormCertificate, RenormOptions, SeqWithLimit};
