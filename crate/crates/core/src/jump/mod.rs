//! Jump component: Poisson hyperplane atoms and the compensated field they
//! generate.

pub mod atoms;
pub mod campbell;
pub mod cf;
pub mod evaluate;

pub use atoms::{measure_fingerprint, sample_atoms, sample_atoms_replica, AtomSet, Band, HyperplaneAtom};
pub use campbell::{suggest_truncation, truncation_error_std};
pub use cf::{cf_validate, CfReport, CfRow};
pub use evaluate::{compensator_table, evaluate_at, evaluate_jump_field, CompensatorTable};
