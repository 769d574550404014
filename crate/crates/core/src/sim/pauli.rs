use num_complex::Complex64;

use super::{SimError, StateVector};
use crate::circuit::{Pauli, PauliString};

/// `<psi|P|psi>` for a Pauli string whose factor `i` acts on qubit `i`.
pub fn expectation_pauli(state: &StateVector, paulis: &PauliString) -> Result<f64, SimError> {
    if paulis.len() != state.num_qubits() {
        return Err(SimError::PauliLengthMismatch { expected: state.num_qubits(), got: paulis.len() });
    }
    // P|i> = phase(i) |i ^ flip>
    let mut flip = 0usize;
    let mut zmask = 0usize;
    let mut ycount = 0u32;
    for (q, p) in paulis.0.iter().enumerate() {
        match p {
            Pauli::I => {}
            Pauli::X => flip |= 1 << q,
            Pauli::Z => zmask |= 1 << q,
            Pauli::Y => {
                flip |= 1 << q;
                zmask |= 1 << q;
                ycount += 1;
            }
        }
    }
    let y_phase = match ycount % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let amps = state.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        let sign = if (i & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        acc += amps[i ^ flip].conj() * a * sign;
    }
    Ok((acc * y_phase).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Gate};
    use crate::sim::simulate;

    fn ghz4_state() -> StateVector {
        let mut c = Circuit::new(4).unwrap();
        c.push(Gate::h(0)).unwrap();
        for q in 0..3 {
            c.push(Gate::cnot(q, q + 1)).unwrap();
        }
        simulate(&c).unwrap().0
    }

    #[test]
    fn ghz4_expectations() {
        let s = ghz4_state();
        let e = |p: &str| expectation_pauli(&s, &p.parse().unwrap()).unwrap();
        assert!((e("ZZZZ") - 1.0).abs() < 1e-12);
        assert!(e("ZIII").abs() < 1e-12);
        assert!((e("IIII") - 1.0).abs() < 1e-12);
        assert!((e("XXXX") - 1.0).abs() < 1e-12);
        assert!((e("YYXX") + 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_eigenstates() {
        let plus_i =
            simulate(&Circuit::from_gates(1, [Gate::h(0), Gate::single(crate::GateKind::S, 0)]).unwrap()).unwrap().0;
        assert!((expectation_pauli(&plus_i, &"Y".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!(expectation_pauli(&plus_i, &"X".parse().unwrap()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let s = ghz4_state();
        assert_eq!(
            expectation_pauli(&s, &"ZZ".parse().unwrap()),
            Err(SimError::PauliLengthMismatch { expected: 4, got: 2 })
        );
    }
}
