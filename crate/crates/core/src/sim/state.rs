use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::SimError;
use crate::circuit::{Gate, GateKind};

/// Largest register the dense simulator will allocate.
pub const MAX_QUBITS: usize = 24;

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense state of `num_qubits` qubits.
///
/// Basis index `i` stores qubit `q` in bit `q` of `i`, so qubit 0 is the
/// least significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0> on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self, SimError> {
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits { requested: num_qubits, limit: MAX_QUBITS });
        }
        let mut amps = vec![ZERO; 1usize << num_qubits];
        amps[0] = ONE;
        Ok(StateVector { num_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the vector
    /// normalized to within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let n = amps.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(SimError::BadAmplitudes("length is not a power of two"));
        }
        let num_qubits = n.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits { requested: num_qubits, limit: MAX_QUBITS });
        }
        let s = StateVector { num_qubits, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(SimError::BadAmplitudes("state is not normalized"));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies a unitary gate in place. Measurements are rejected; they go
    /// through [`super::simulate`] or [`super::run_trajectory`].
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.validate(self.num_qubits)?;
        let q = gate.qubits();
        match gate.kind() {
            GateKind::Mz => return Err(SimError::MeasurementInUnitaryPath),
            GateKind::Cnot => self.apply_cnot(q[0], q[1]),
            GateKind::Cz => self.apply_cz(q[0], q[1]),
            GateKind::X => self.apply_x(q[0]),
            GateKind::Z => self.apply_phase(q[0], -ONE),
            GateKind::S => self.apply_phase(q[0], I),
            GateKind::Sdg => self.apply_phase(q[0], -I),
            GateKind::T => self.apply_phase(q[0], Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
            GateKind::Tdg => self.apply_phase(q[0], Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)),
            kind => {
                let m = single_qubit_matrix(kind, gate.angle().unwrap_or(0.0));
                self.apply_matrix(q[0], &m);
            }
        }
        Ok(())
    }

    fn apply_matrix(&mut self, q: usize, m: &Mat2) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_x(&mut self, q: usize) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                self.amps.swap(i, i | mask);
            }
        }
    }

    /// diag(1, phase) on qubit `q`.
    fn apply_phase(&mut self, q: usize, phase: Complex64) {
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a *= phase;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let m = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & m == m {
                *amp = -*amp;
            }
        }
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amps.iter().enumerate().filter(|(i, _)| i & mask != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projects qubit `q` onto `outcome` and renormalizes. `prob` is the
    /// probability of that outcome and must be positive.
    pub(crate) fn collapse(&mut self, q: usize, outcome: bool, prob: f64) {
        let mask = 1usize << q;
        let scale = 1.0 / libm::sqrt(prob);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & mask) != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
    }
}

fn single_qubit_matrix(kind: GateKind, angle: f64) -> Mat2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let (c, s) = (libm::cos(angle / 2.0), libm::sin(angle / 2.0));
    match kind {
        GateKind::H => [[h, h], [h, -h]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Rx => {
            [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]]
        }
        GateKind::Ry => {
            [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
        }
        GateKind::Rz => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
        // the remaining kinds have dedicated kernels in `apply_gate`
        _ => unreachable!("{kind} has no generic matrix path"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_gate(&Gate::h(0)).unwrap();
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert!(close(s.amplitudes()[0], r) && close(s.amplitudes()[1], r));
    }

    #[test]
    fn cnot_makes_bell() {
        // (|00> + |01>)/sqrt2 with qubit 0 in the low bit: indices 0 and 1
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mut s = StateVector::from_amplitudes(vec![r, r, ZERO, ZERO]).unwrap();
        s.apply_gate(&Gate::cnot(0, 1)).unwrap();
        let a = s.amplitudes();
        assert!(close(a[0], r) && close(a[3], r));
        assert!(close(a[1], ZERO) && close(a[2], ZERO));
    }

    #[test]
    fn rejects_measurement_and_oversize() {
        let mut s = StateVector::zero(1).unwrap();
        assert_eq!(s.apply_gate(&Gate::mz(0, 0)), Err(SimError::MeasurementInUnitaryPath));
        assert!(matches!(StateVector::zero(25), Err(SimError::TooManyQubits { .. })));
        assert!(s.apply_gate(&Gate::h(1)).is_err());
    }

    #[test]
    fn collapse_renormalizes() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_gate(&Gate::h(0)).unwrap();
        let p = s.prob_one(0);
        s.collapse(0, true, p);
        assert!(close(s.amplitudes()[1], ONE));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
