//! Device-agnostic circuit representation.
//!
//! A [`Circuit`] is the resolved form of a quantum kernel: a qubit count and
//! an ordered list of gates drawn from a small fixed vocabulary. Measurement
//! results are named by integer slots, not by qubit, so that composition and
//! QIR `%Result*` operands map onto them without ambiguity.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Errors raised while building or combining circuits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} used twice in one gate")]
    DuplicateQubit(usize),
    #[error("result slot {0} already written")]
    DuplicateResultSlot(usize),
    #[error("qubit map has {got} entries, expected {expected}")]
    MapLengthMismatch { expected: usize, got: usize },
    #[error("malformed {kind} gate: {reason}")]
    MalformedGate { kind: GateKind, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
    Mz,
}

impl GateKind {
    pub const ALL: [GateKind; 14] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Mz,
    ];

    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
            GateKind::Mz => "mz",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .or(match s {
                "cx" | "CX" => Some(GateKind::Cnot),
                _ => None,
            })
            .ok_or(())
    }
}

/// A single circuit operation.
///
/// `angle` is present iff the kind is a rotation and `result_slot` iff the
/// kind is `Mz`; the constructors enforce both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: [usize; 2],
    angle: Option<f64>,
    result_slot: Option<usize>,
}

impl Gate {
    /// Generic constructor checking the shape invariants (not qubit range,
    /// which needs the owning circuit).
    pub fn new(
        kind: GateKind,
        qubits: &[usize],
        angle: Option<f64>,
        result_slot: Option<usize>,
    ) -> Result<Self, CircuitError> {
        if qubits.len() != kind.arity() {
            return Err(CircuitError::MalformedGate { kind, reason: "wrong number of qubits" });
        }
        if kind.is_rotation() != angle.is_some() {
            return Err(CircuitError::MalformedGate { kind, reason: "angle must be given for rotations only" });
        }
        if matches!(angle, Some(a) if !a.is_finite()) {
            return Err(CircuitError::MalformedGate { kind, reason: "angle is not finite" });
        }
        if (kind == GateKind::Mz) != result_slot.is_some() {
            return Err(CircuitError::MalformedGate {
                kind,
                reason: "result slot must be given for measurements only",
            });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(CircuitError::DuplicateQubit(qubits[0]));
        }
        let mut targets = [0; 2];
        targets[..qubits.len()].copy_from_slice(qubits);
        Ok(Gate { kind, targets, angle, result_slot })
    }

    /// A fixed single-qubit gate (H, X, Y, Z, S, Sdg, T, Tdg).
    ///
    /// # Panics
    /// If `kind` is a rotation, a two-qubit gate or a measurement.
    pub fn single(kind: GateKind, qubit: usize) -> Self {
        assert!(
            kind.arity() == 1 && !kind.is_rotation() && kind != GateKind::Mz,
            "{kind} is not a fixed single-qubit gate"
        );
        Gate { kind, targets: [qubit, 0], angle: None, result_slot: None }
    }

    pub fn h(q: usize) -> Self {
        Self::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Self {
        Self::single(GateKind::X, q)
    }

    pub fn rotation(kind: GateKind, qubit: usize, angle: f64) -> Result<Self, CircuitError> {
        Self::new(kind, &[qubit], Some(angle), None)
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Gate { kind: GateKind::Rz, targets: [q, 0], angle: Some(angle), result_slot: None }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate { kind: GateKind::Cnot, targets: [control, target], angle: None, result_slot: None }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Gate { kind: GateKind::Cz, targets: [a, b], angle: None, result_slot: None }
    }

    pub fn mz(qubit: usize, slot: usize) -> Self {
        Gate { kind: GateKind::Mz, targets: [qubit, 0], angle: None, result_slot: Some(slot) }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.targets[..self.kind.arity()]
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }

    pub fn result_slot(&self) -> Option<usize> {
        self.result_slot
    }

    /// Checks the gate against a circuit width.
    pub fn validate(&self, num_qubits: usize) -> Result<(), CircuitError> {
        for &q in self.qubits() {
            if q >= num_qubits {
                return Err(CircuitError::QubitOutOfRange { qubit: q, num_qubits });
            }
        }
        if self.kind.arity() == 2 && self.targets[0] == self.targets[1] {
            return Err(CircuitError::DuplicateQubit(self.targets[0]));
        }
        Ok(())
    }

    fn remapped(&self, map: &[usize], slot_offset: usize) -> Result<Gate, CircuitError> {
        let mut targets = self.targets;
        for t in targets.iter_mut().take(self.kind.arity()) {
            *t = *map.get(*t).ok_or(CircuitError::QubitOutOfRange { qubit: *t, num_qubits: map.len() })?;
        }
        if self.kind.arity() == 2 && targets[0] == targets[1] {
            return Err(CircuitError::DuplicateQubit(targets[0]));
        }
        Ok(Gate { targets, result_slot: self.result_slot.map(|s| s + slot_offset), ..*self })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(a) = self.angle {
            write!(f, "({a})")?;
        }
        for q in self.qubits() {
            write!(f, " q{q}")?;
        }
        if let Some(s) = self.result_slot {
            write!(f, " -> r{s}")?;
        }
        Ok(())
    }
}

/// An ordered gate list over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<Gate>,
    slots: BTreeSet<usize>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self, CircuitError> {
        if num_qubits == 0 {
            return Err(CircuitError::InvalidArgument("circuit needs at least one qubit"));
        }
        Ok(Circuit { num_qubits, ops: Vec::new(), slots: BTreeSet::new() })
    }

    /// Builds a circuit from a gate list, validating every gate.
    pub fn from_gates(num_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self, CircuitError> {
        let mut c = Circuit::new(num_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// Appends a gate. On error the circuit is left unchanged.
    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.validate(self.num_qubits)?;
        if let Some(slot) = gate.result_slot {
            if !self.slots.insert(slot) {
                return Err(CircuitError::DuplicateResultSlot(slot));
            }
        }
        self.ops.push(gate);
        Ok(())
    }

    /// Builder-style [`Circuit::push`].
    pub fn with(mut self, gate: Gate) -> Result<Self, CircuitError> {
        self.push(gate)?;
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Number of distinct measurement result slots.
    pub fn result_count(&self) -> usize {
        self.slots.len()
    }

    /// Result slots in ascending order.
    pub fn result_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().copied()
    }

    /// `(slot, qubit)` for every measurement, ordered by slot.
    pub fn measurements(&self) -> Vec<(usize, usize)> {
        let mut m: Vec<(usize, usize)> =
            self.ops.iter().filter_map(|g| g.result_slot.map(|s| (s, g.targets[0]))).collect();
        m.sort_unstable();
        m
    }

    /// True when no gate touches a qubit after it has been measured.
    pub fn has_terminal_measurements(&self) -> bool {
        let mut measured = BTreeSet::new();
        for g in &self.ops {
            if g.qubits().iter().any(|q| measured.contains(q)) {
                return false;
            }
            if g.kind == GateKind::Mz {
                measured.insert(g.targets[0]);
            }
        }
        true
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "circuit[{}q]", self.num_qubits)?;
        for (i, g) in self.ops.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { "; " })?;
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Places `front` before `back`, mapping front qubit `i` to `qubit_map[i]`.
///
/// The result has `back`'s width. Front result slots keep their numbers and
/// back slots are shifted past the largest front slot so that every slot
/// stays distinct.
pub fn compose(front: &Circuit, back: &Circuit, qubit_map: &[usize]) -> Result<Circuit, CircuitError> {
    if qubit_map.len() != front.num_qubits {
        return Err(CircuitError::MapLengthMismatch { expected: front.num_qubits, got: qubit_map.len() });
    }
    if let Some(&q) = qubit_map.iter().find(|&&q| q >= back.num_qubits) {
        return Err(CircuitError::QubitOutOfRange { qubit: q, num_qubits: back.num_qubits });
    }
    let offset = front.slots.iter().next_back().map_or(0, |m| m + 1);
    let mut out = Circuit::new(back.num_qubits)?;
    for g in &front.ops {
        out.push(g.remapped(qubit_map, 0)?)?;
    }
    for g in &back.ops {
        out.push(Gate { result_slot: g.result_slot.map(|s| s + offset), ..*g })?;
    }
    Ok(out)
}

/// Single-qubit Pauli observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Tensor product of single-qubit Paulis; position `i` acts on qubit `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for PauliString {
    type Err = CircuitError;

    /// Parses e.g. `"ZZZZ"`; the leftmost character acts on qubit 0.
    fn from_str(s: &str) -> Result<Self, CircuitError> {
        s.chars()
            .map(|c| Pauli::from_symbol(c).ok_or(CircuitError::InvalidArgument("unknown Pauli symbol")))
            .collect::<Result<Vec<_>, _>>()
            .map(PauliString)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{p}"))
    }
}

/// Single-qubit states used as fresh inputs after a wire cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrepLabel {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl PrepLabel {
    pub const ALL: [PrepLabel; 6] =
        [PrepLabel::Zero, PrepLabel::One, PrepLabel::Plus, PrepLabel::Minus, PrepLabel::PlusI, PrepLabel::MinusI];

    /// Text form: `0`, `1`, `+`, `-`, `+i`, `-i`.
    pub fn symbol(self) -> &'static str {
        match self {
            PrepLabel::Zero => "0",
            PrepLabel::One => "1",
            PrepLabel::Plus => "+",
            PrepLabel::Minus => "-",
            PrepLabel::PlusI => "+i",
            PrepLabel::MinusI => "-i",
        }
    }

    /// The Pauli this state is an eigenstate of, with its eigenvalue.
    pub fn eigenbasis(self) -> (Pauli, i8) {
        match self {
            PrepLabel::Zero => (Pauli::Z, 1),
            PrepLabel::One => (Pauli::Z, -1),
            PrepLabel::Plus => (Pauli::X, 1),
            PrepLabel::Minus => (Pauli::X, -1),
            PrepLabel::PlusI => (Pauli::Y, 1),
            PrepLabel::MinusI => (Pauli::Y, -1),
        }
    }
}

impl FromStr for PrepLabel {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, CircuitError> {
        PrepLabel::ALL
            .iter()
            .copied()
            .find(|p| p.symbol() == s)
            .ok_or(CircuitError::InvalidArgument("unknown preparation label"))
    }
}

impl fmt::Display for PrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}>", self.symbol())
    }
}

/// One-qubit circuit preparing `label` from |0>.
pub fn prep_circuit(label: PrepLabel) -> Circuit {
    let gates: &[GateKind] = match label {
        PrepLabel::Zero => &[],
        PrepLabel::One => &[GateKind::X],
        PrepLabel::Plus => &[GateKind::H],
        PrepLabel::Minus => &[GateKind::X, GateKind::H],
        PrepLabel::PlusI => &[GateKind::H, GateKind::S],
        PrepLabel::MinusI => &[GateKind::H, GateKind::Sdg],
    };
    one_qubit(gates)
}

/// Rotation taking an observable's eigenbasis onto the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisChange {
    pub circuit: Circuit,
    /// False for the identity observable: its outcome is always +1 and the
    /// qubit need not be measured.
    pub measure: bool,
}

pub fn basis_change(obs: Pauli) -> BasisChange {
    let (gates, measure): (&[GateKind], bool) = match obs {
        Pauli::I => (&[], false),
        Pauli::X => (&[GateKind::H], true),
        Pauli::Y => (&[GateKind::Sdg, GateKind::H], true),
        Pauli::Z => (&[], true),
    };
    BasisChange { circuit: one_qubit(gates), measure }
}

fn one_qubit(kinds: &[GateKind]) -> Circuit {
    Circuit { num_qubits: 1, ops: kinds.iter().map(|&k| Gate::single(k, 0)).collect(), slots: BTreeSet::new() }
}
