//! Wire cutting by quasi-probability decomposition.
//!
//! A cut replaces the identity channel on one wire with a signed sum of
//! measure-and-prepare channels. Cutting the GHZ ladder at two wires leaves
//! three independent two-qubit fragments per combination of terms; the
//! estimator recombines their outcome distributions into `<ZZZZ>` of the
//! uncut circuit.

mod decomposition;
mod estimator;
mod instances;

use alloc::vec::Vec;

use thiserror::Error;

pub use decomposition::{canonical_wire_cut, reconstruct_density, DensityMatrix, QpdTerm, WireCutDecomposition};
pub use estimator::{
    estimate_chain, estimate_zzzz, importance_sampled_estimate, mean_std, parity_sign, sign_function, EstimateMode,
    FragmentData, InstanceResult, QpdEstimate,
};
pub use instances::{
    build_fragment, build_ghz_qpd_instances, fragment_keys, index_tuples, unique_fragments, Ancilla, Fragment,
    FragmentKey, QpdInstance,
};

use crate::circuit::CircuitError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpdError {
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(&'static str),
    #[error("decomposition does not reproduce the identity channel (error {error:e})")]
    NotIdentityChannel { error: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(&'static str),
    #[error("{0} cuts are not supported (expected 1 or 2)")]
    UnsupportedCuts(usize),
    #[error("term index {0} out of range")]
    TermOutOfRange(usize),
    #[error("inconsistent fragment key {0:?}")]
    BadFragmentKey(FragmentKey),
    #[error("no result for instance {0:?}")]
    MissingInstance(Vec<usize>),
    #[error("instance {0:?} given twice")]
    DuplicateInstance(Vec<usize>),
    #[error("instance result has the wrong number of cuts or fragments")]
    FragmentCountMismatch,
    #[error("fragment data does not match the requested estimate mode")]
    ModeMismatch,
    #[error("histogram with zero shots")]
    EmptyHistogram,
    #[error("outcome key does not have {expected_width} bits")]
    BadOutcomeKey { expected_width: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
