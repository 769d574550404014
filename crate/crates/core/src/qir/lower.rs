use alloc::vec::Vec;

use super::{QirError, QirProgram};
use crate::circuit::{Circuit, Gate, GateKind};

/// A lowered kernel: the circuit plus the order in which results are
/// recorded, which fixes the key order of reported histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredProgram {
    pub circuit: Circuit,
    pub output_order: Vec<usize>,
}

pub fn lower_to_circuit(prog: &QirProgram) -> Result<LoweredProgram, QirError> {
    let mut circuit = Circuit::new(prog.required_qubits.max(1))?;
    for call in &prog.calls {
        let kind = match call.gate_name() {
            "h" => GateKind::H,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "s" => GateKind::S,
            "s__adj" => GateKind::Sdg,
            "t" => GateKind::T,
            "t__adj" => GateKind::Tdg,
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "cnot" | "cx" => GateKind::Cnot,
            "cz" => GateKind::Cz,
            "mz" => GateKind::Mz,
            _ => return Err(QirError::UnsupportedIntrinsic { line: 0, name: call.name.clone() }),
        };
        let gate =
            Gate::new(kind, &call.qubit_args, call.double_args.first().copied(), call.result_args.first().copied())?;
        circuit.push(gate)?;
    }
    let measured: Vec<usize> = circuit.result_slots().collect();
    if let Some(&r) = prog.output_order.iter().find(|r| measured.binary_search(r).is_err()) {
        return Err(QirError::UnmeasuredResult(r));
    }
    Ok(LoweredProgram { circuit, output_order: prog.output_order.clone() })
}
