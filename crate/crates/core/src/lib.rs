//! Allocation-only core of the qiris hybrid runtime.
//!
//! Everything here is pure computation: the circuit IR, the textual QIR
//! subset front end, the dense statevector simulator and the wire-cut
//! (quasi-probability) estimators. IO, threads and file formats live in the
//! `qiris` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod circuit;
pub mod qir;
pub mod qpd;
pub mod rng;
pub mod sim;

pub use circuit::{
    basis_change, compose, prep_circuit, BasisChange, Circuit, CircuitError, Gate, GateKind, Pauli, PauliString,
    PrepLabel,
};
pub use qir::{emit_qir, lower_to_circuit, parse_qir, IntrinsicCall, LoweredProgram, QirError, QirProgram};
pub use qpd::{
    build_ghz_qpd_instances, canonical_wire_cut, estimate_chain, estimate_zzzz, importance_sampled_estimate,
    reconstruct_density, DensityMatrix, EstimateMode, FragmentData, InstanceResult, QpdError, QpdEstimate, QpdInstance,
    QpdTerm, WireCutDecomposition,
};
pub use sim::{
    expectation_pauli, run_trajectory, sample_shots, simulate, ProbDist, ShotHistogram, SimError, StateVector,
};
