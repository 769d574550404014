//! Textual QIR subset.
//!
//! Supports the straight-line, static-qubit fragment of QIR: a single entry
//! block of `__quantum__qis__*` gate calls, `mz` measurements and
//! `__quantum__rt__result_record_output` calls. Qubit and result operands are
//! the constant pointers `null` and `inttoptr (i64 N to %Qubit*)`.

mod emit;
mod lower;
mod parse;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use emit::emit_qir;
pub use lower::{lower_to_circuit, LoweredProgram};
pub use parse::parse_qir;

use crate::circuit::CircuitError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QirError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no entry point function definition found")]
    NoEntryPoint,
    #[error("line {line}: unsupported intrinsic {name}")]
    UnsupportedIntrinsic { line: usize, name: String },
    #[error("line {line}: quantum call outside the entry block (control flow is not supported)")]
    UnsupportedControlFlow { line: usize },
    #[error("result {0} is recorded but never measured")]
    UnmeasuredResult(usize),
    #[error("lowering failed: {0}")]
    Lowering(#[from] CircuitError),
}

impl QirError {
    /// Line of the offending input, when known.
    pub fn line(&self) -> Option<usize> {
        match self {
            QirError::Parse { line, .. }
            | QirError::UnsupportedIntrinsic { line, .. }
            | QirError::UnsupportedControlFlow { line } => Some(*line),
            _ => None,
        }
    }
}

/// One `__quantum__qis__` call with its decoded operands.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicCall {
    pub name: String,
    pub qubit_args: Vec<usize>,
    pub result_args: Vec<usize>,
    pub double_args: Vec<f64>,
}

impl IntrinsicCall {
    /// Short gate name, e.g. `h` for `__quantum__qis__h__body` and `s__adj`
    /// for `__quantum__qis__s__adj`.
    pub fn gate_name(&self) -> &str {
        let rest = self.name.strip_prefix(QIS_PREFIX).unwrap_or(&self.name);
        rest.strip_suffix("__body").unwrap_or(rest)
    }
}

/// The entry function of a QIR module, reduced to its quantum content.
#[derive(Debug, Clone, PartialEq)]
pub struct QirProgram {
    pub entry_name: String,
    /// From the `required_num_qubits` attribute when present, else one past
    /// the largest qubit operand.
    pub required_qubits: usize,
    pub calls: Vec<IntrinsicCall>,
    /// Result indices in `result_record_output` order.
    pub output_order: Vec<usize>,
}

pub(crate) const QIS_PREFIX: &str = "__quantum__qis__";

/// Operand shape of a supported gate intrinsic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Signature {
    pub doubles: usize,
    pub qubits: usize,
    pub results: usize,
}

/// Known gate intrinsics by short name: (short name, signature).
pub(crate) fn gate_signature(short: &str) -> Option<Signature> {
    let sig = |doubles, qubits, results| Some(Signature { doubles, qubits, results });
    match short {
        "h" | "x" | "y" | "z" | "s" | "s__adj" | "t" | "t__adj" => sig(0, 1, 0),
        "rx" | "ry" | "rz" => sig(1, 1, 0),
        "cnot" | "cx" | "cz" => sig(0, 2, 0),
        "mz" => sig(0, 1, 1),
        _ => None,
    }
}
