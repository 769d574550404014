//! Dense statevector execution.
//!
//! [`simulate`] gives exact outcome distributions for circuits whose
//! measurements are all terminal; [`run_trajectory`] evolves shot by shot and
//! handles mid-circuit measurement. Outcome keys are bitstrings with one
//! character per result slot, lowest slot leftmost.

mod dist;
mod pauli;
mod state;

pub use dist::{ProbDist, ShotHistogram};
pub use pauli::expectation_pauli;
pub use state::{StateVector, MAX_QUBITS};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateKind};
use crate::rng::{rng_from_seed, unit_f64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{requested} qubits exceed the dense simulator limit of {limit}")]
    TooManyQubits { requested: usize, limit: usize },
    #[error("measurement passed to unitary application")]
    MeasurementInUnitaryPath,
    #[error("circuit measures a qubit before its last gate; use trajectory sampling")]
    NeedsTrajectory,
    #[error("invalid amplitudes: {0}")]
    BadAmplitudes(&'static str),
    #[error("invalid distribution: {0}")]
    BadDistribution(&'static str),
    #[error("pauli string has {got} factors for {expected} qubits")]
    PauliLengthMismatch { expected: usize, got: usize },
    #[error("result slot {0} is not present")]
    UnknownSlot(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Evolves `circuit` from |0...0> and returns the final (pre-measurement)
/// state with the exact distribution over its measured qubits.
///
/// A circuit without measurements yields the single outcome `""`.
pub fn simulate(circuit: &Circuit) -> Result<(StateVector, ProbDist), SimError> {
    if !circuit.has_terminal_measurements() {
        return Err(SimError::NeedsTrajectory);
    }
    let mut state = StateVector::zero(circuit.num_qubits())?;
    for g in circuit.ops().iter().filter(|g| g.kind() != GateKind::Mz) {
        state.apply_gate(g)?;
    }
    let meas = circuit.measurements();
    let mut probs: BTreeMap<String, f64> = BTreeMap::new();
    for (i, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let key: String = meas.iter().map(|&(_, q)| if i >> q & 1 == 1 { '1' } else { '0' }).collect();
        *probs.entry(key).or_insert(0.0) += p;
    }
    let (slots, qubits): (Vec<usize>, Vec<usize>) = meas.into_iter().unzip();
    let dist = ProbDist::from_parts(qubits, slots, probs);
    Ok((state, dist))
}

/// Draws `shots` outcomes from `dist` with a ChaCha8 stream seeded by `seed`.
pub fn sample_shots(dist: &ProbDist, shots: u64, seed: u64) -> ShotHistogram {
    let mut rng = rng_from_seed(seed);
    let outcomes: Vec<(&String, f64)> = dist.iter().collect();
    let mut cumulative = Vec::with_capacity(outcomes.len());
    let mut acc = 0.0;
    for (_, p) in &outcomes {
        acc += p;
        cumulative.push(acc);
    }
    let mut tallies = alloc::vec![0u64; outcomes.len()];
    if !outcomes.is_empty() {
        for _ in 0..shots {
            let u = unit_f64(&mut rng) * acc;
            let idx = cumulative.partition_point(|&c| c <= u).min(outcomes.len() - 1);
            tallies[idx] += 1;
        }
    }
    let counts = outcomes.iter().zip(tallies).filter(|(_, n)| *n > 0).map(|((k, _), n)| ((*k).clone(), n)).collect();
    ShotHistogram::from_parts(counts, shots, seed, dist.slots().to_vec())
}

/// Shot-by-shot stochastic evolution. Each measurement samples the qubit's
/// marginal, collapses the state and records the bit under its result slot.
pub fn run_trajectory(circuit: &Circuit, shots: u64, seed: u64) -> Result<ShotHistogram, SimError> {
    let ops = circuit.ops();
    let first_mz = ops.iter().position(|g| g.kind() == GateKind::Mz).unwrap_or(ops.len());
    let mut prefix = StateVector::zero(circuit.num_qubits())?;
    for g in &ops[..first_mz] {
        prefix.apply_gate(g)?;
    }
    let slots: Vec<usize> = circuit.result_slots().collect();
    let position = |slot: usize| slots.binary_search(&slot).unwrap_or(0);

    let mut rng = rng_from_seed(seed);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut bits = alloc::vec![b'0'; slots.len()];
    for _ in 0..shots {
        let mut state = prefix.clone();
        bits.fill(b'0');
        for g in &ops[first_mz..] {
            if let Some(slot) = g.result_slot() {
                let q = g.qubits()[0];
                let p1 = state.prob_one(q);
                let one = unit_f64(&mut rng) < p1;
                state.collapse(q, one, if one { p1 } else { 1.0 - p1 });
                bits[position(slot)] = if one { b'1' } else { b'0' };
            } else {
                state.apply_gate(g)?;
            }
        }
        let key = String::from_utf8(bits.clone()).expect("ascii bits");
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(ShotHistogram::from_parts(counts, shots, seed, slots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    fn bell() -> Circuit {
        Circuit::from_gates(2, [Gate::h(0), Gate::cnot(0, 1), Gate::mz(0, 0), Gate::mz(1, 1)]).unwrap()
    }

    fn ghz4() -> Circuit {
        let mut c = Circuit::new(4).unwrap();
        c.push(Gate::h(0)).unwrap();
        for q in 0..3 {
            c.push(Gate::cnot(q, q + 1)).unwrap();
        }
        for q in 0..4 {
            c.push(Gate::mz(q, q)).unwrap();
        }
        c
    }

    #[test]
    fn bell_distribution() {
        let (_, d) = simulate(&bell()).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.probability("00") - 0.5).abs() < 1e-12);
        assert!((d.probability("11") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ghz4_distribution() {
        let (_, d) = simulate(&ghz4()).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.probability("0000") - 0.5).abs() < 1e-12);
        assert!((d.probability("1111") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_measurement_gives_empty_outcome() {
        let c = Circuit::from_gates(1, [Gate::h(0)]).unwrap();
        let (_, d) = simulate(&c).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d.probability("") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rz_changes_phase_only() {
        let base = Circuit::from_gates(1, [Gate::h(0)]).unwrap();
        let rot = base.clone().with(Gate::rz(0, 0.7)).unwrap();
        let with_m = |c: Circuit| c.with(Gate::mz(0, 0)).unwrap();
        let (_, d0) = simulate(&with_m(Circuit::new(1).unwrap())).unwrap();
        let (_, d1) = simulate(&with_m(Circuit::from_gates(1, [Gate::rz(0, 0.7)]).unwrap())).unwrap();
        assert_eq!(d0.probability("0"), 1.0);
        assert!((d1.probability("0") - 1.0).abs() < 1e-12);
        let (_, a) = simulate(&with_m(base)).unwrap();
        let (_, b) = simulate(&with_m(rot)).unwrap();
        for k in ["0", "1"] {
            assert!((a.probability(k) - b.probability(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn mid_circuit_measurement_needs_trajectory() {
        let c = Circuit::from_gates(1, [Gate::h(0), Gate::mz(0, 0), Gate::x(0)]).unwrap();
        assert_eq!(simulate(&c).unwrap_err(), SimError::NeedsTrajectory);
        assert!(run_trajectory(&c, 10, 1).is_ok());
    }

    #[test]
    fn sampling_edge_cases() {
        let point = ProbDist::from_map([("0".into(), 1.0)].into_iter().collect()).unwrap();
        let h = sample_shots(&point, 100, 3);
        assert_eq!(h.count("0"), 100);
        assert_eq!(h.shots(), 100);

        let empty = sample_shots(&point, 0, 3);
        assert_eq!(empty.shots(), 0);
        assert!(empty.counts().is_empty());
    }

    #[test]
    fn bell_sampling_within_five_sigma() {
        let (_, d) = simulate(&bell()).unwrap();
        let h = sample_shots(&d, 1024, 42);
        assert_eq!(h.counts().keys().cloned().collect::<Vec<_>>(), ["00", "11"]);
        for k in ["00", "11"] {
            assert!((432..=592).contains(&h.count(k)), "{k}: {}", h.count(k));
        }
        assert_eq!(h, sample_shots(&d, 1024, 42));
    }

    #[test]
    fn trajectory_x_then_measure() {
        let c = Circuit::from_gates(1, [Gate::x(0), Gate::mz(0, 0)]).unwrap();
        let h = run_trajectory(&c, 50, 9).unwrap();
        assert_eq!(h.count("1"), 50);
        assert_eq!(h.counts().len(), 1);
    }

    #[test]
    fn trajectory_mid_circuit_reset_pattern() {
        // measure, flip, measure again on another slot: outcomes are complementary
        let c = Circuit::from_gates(1, [Gate::h(0), Gate::mz(0, 0), Gate::x(0), Gate::mz(0, 1)]).unwrap();
        let h = run_trajectory(&c, 500, 5).unwrap();
        assert!(h.counts().keys().all(|k| k == "01" || k == "10"));
        assert_eq!(h.count("01") + h.count("10"), 500);
    }
}
