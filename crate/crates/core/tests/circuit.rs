use proptest::prelude::*;
use qiris_core::{basis_change, compose, prep_circuit, simulate, Circuit, CircuitError, Gate, GateKind, PrepLabel};

fn gate_strategy(num_qubits: usize, max_slot: usize) -> impl Strategy<Value = Gate> {
    (0..GateKind::ALL.len(), 0..num_qubits, 0..num_qubits, -6.3f64..6.3, 0..max_slot).prop_filter_map(
        "two-qubit gates need distinct qubits",
        |(k, a, b, angle, slot)| {
            let kind = GateKind::ALL[k];
            let qubits: &[usize] = if kind.arity() == 2 { &[a, b] } else { &[a] };
            let angle = kind.is_rotation().then_some(angle);
            let slot = (kind == GateKind::Mz).then_some(slot);
            Gate::new(kind, qubits, angle, slot).ok()
        },
    )
}

fn circuit_strategy(num_qubits: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(gate_strategy(num_qubits, 16), 0..=max_gates).prop_map(move |gates| {
        let mut c = Circuit::new(num_qubits).unwrap();
        for g in gates {
            let _ = c.push(g);
        }
        c
    })
}

/// Ops with result slots replaced by their rank, so circuits that differ only
/// in slot numbering compare equal.
fn canonical(c: &Circuit) -> Vec<String> {
    let slots: Vec<usize> = c.result_slots().collect();
    c.ops()
        .iter()
        .map(|g| {
            let rank = g.result_slot().map(|s| slots.binary_search(&s).unwrap());
            format!("{:?} {:?} {:?} {:?}", g.kind(), g.qubits(), g.angle(), rank)
        })
        .collect()
}

proptest! {
    #[test]
    fn invariants_hold_after_appends(n in 1usize..5, gates in prop::collection::vec(gate_strategy(6, 8), 0..40)) {
        let mut c = Circuit::new(n).unwrap();
        let mut measured = std::collections::BTreeSet::new();
        for g in gates {
            let before = c.ops().len();
            match c.push(g) {
                Ok(()) => {
                    prop_assert_eq!(c.ops().len(), before + 1);
                    if let Some(s) = g.result_slot() {
                        prop_assert!(measured.insert(s));
                    }
                }
                Err(e) => {
                    prop_assert_eq!(c.ops().len(), before);
                    let out_of_range = g.qubits().iter().any(|&q| q >= n);
                    let reused = g.result_slot().is_some_and(|s| measured.contains(&s));
                    prop_assert!(out_of_range || reused, "unexpected rejection {e}");
                }
            }
            for op in c.ops() {
                prop_assert!(op.validate(n).is_ok());
            }
            prop_assert_eq!(c.result_count(), measured.len());
            prop_assert_eq!(c.result_slots().collect::<Vec<_>>(), measured.iter().copied().collect::<Vec<_>>());
        }
    }

    #[test]
    fn compose_is_associative(a in circuit_strategy(3, 8), b in circuit_strategy(3, 8), c in circuit_strategy(3, 8)) {
        let id = [0, 1, 2];
        let left = compose(&compose(&a, &b, &id).unwrap(), &c, &id).unwrap();
        let right = compose(&a, &compose(&b, &c, &id).unwrap(), &id).unwrap();
        prop_assert_eq!(canonical(&left), canonical(&right));
        prop_assert_eq!(left.result_count(), a.result_count() + b.result_count() + c.result_count());
    }
}

#[test]
fn compose_examples() {
    let bell = Circuit::from_gates(2, [Gate::h(0), Gate::cnot(0, 1)]).unwrap();
    let meas = Circuit::from_gates(2, [Gate::mz(0, 0), Gate::mz(1, 1)]).unwrap();
    let c = compose(&bell, &meas, &[0, 1]).unwrap();
    assert_eq!(c.ops(), &[Gate::h(0), Gate::cnot(0, 1), Gate::mz(0, 0), Gate::mz(1, 1)]);

    let empty = Circuit::new(2).unwrap();
    assert_eq!(compose(&empty, &c, &[0, 1]).unwrap(), c);

    let x = Circuit::from_gates(1, [Gate::x(0)]).unwrap();
    let remapped = compose(&x, &Circuit::new(2).unwrap(), &[1]).unwrap();
    assert_eq!(remapped.ops(), &[Gate::x(1)]);
    assert_eq!(remapped.num_qubits(), 2);

    assert_eq!(compose(&x, &empty, &[0, 1]), Err(CircuitError::MapLengthMismatch { expected: 1, got: 2 }));
    let pair = Circuit::from_gates(2, [Gate::cnot(0, 1)]).unwrap();
    assert_eq!(compose(&pair, &empty, &[1, 1]), Err(CircuitError::DuplicateQubit(1)));
}

#[test]
fn append_errors() {
    let mut c = Circuit::new(2).unwrap();
    assert_eq!(Gate::new(GateKind::Cnot, &[0, 0], None, None), Err(CircuitError::DuplicateQubit(0)));
    c.push(Gate::mz(1, 0)).unwrap();
    assert_eq!(c.push(Gate::mz(1, 0)), Err(CircuitError::DuplicateResultSlot(0)));
    assert!(matches!(c.push(Gate::h(2)), Err(CircuitError::QubitOutOfRange { qubit: 2, .. })));
    assert!(Circuit::new(0).is_err());
}

#[test]
fn prep_then_basis_change_measures_eigenvalue() {
    for label in PrepLabel::ALL {
        let (pauli, eigen) = label.eigenbasis();
        let bc = basis_change(pauli);
        assert!(bc.measure);
        let mut c = compose(&prep_circuit(label), &bc.circuit, &[0]).unwrap();
        c.push(Gate::mz(0, 0)).unwrap();
        let (_, dist) = simulate(&c).unwrap();
        let expected = if eigen == 1 { "0" } else { "1" };
        assert!((dist.probability(expected) - 1.0).abs() <= 1e-12, "{label}");
    }
}

#[test]
fn identity_observable_needs_no_measurement() {
    let bc = basis_change(qiris_core::Pauli::I);
    assert!(!bc.measure);
    assert!(bc.circuit.is_empty());
}
