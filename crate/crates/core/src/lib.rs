//! Multiparameter field estimation with spin ensembles under local dephasing.
//!
//! States of `N` spins are stored block-diagonally in the Dicke basis
//! `|j, m⟩`, one block per total spin `j`. Each block entry holds the total
//! weight over the degenerate copies of that sector, so block traces sum to
//! one and collective observables act blockwise.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dicke;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod linalg;
pub mod noise;
pub mod propagation;

pub use dicke::{
    coherent_state, collective_operator, ghz_state, simultaneous_probe, Axis, BlockOperator,
    CollectiveKind, DensityOperator, DickeSpace, StateVector,
};
pub use error::{Error, Result};
pub use noise::{build_dephasing_superoperator, DephasingSuperoperator, NoiseKind, NoiseSpec};
pub use propagation::{evolve, EvolutionResult, FieldParams, Propagator};
