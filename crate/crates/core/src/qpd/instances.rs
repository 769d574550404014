use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{QpdError, WireCutDecomposition};
use crate::circuit::{basis_change, compose, prep_circuit, Circuit, Gate, Pauli};

/// Identifies a fragment independently of the instance it belongs to.
///
/// Fragment `position` sits between cut `position - 1` (whose term index
/// fixes the prepared state) and cut `position` (whose term index fixes the
/// measured observable). Fragments with equal keys are the same circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FragmentKey {
    pub position: usize,
    /// Term index (0-based) of the incoming cut.
    pub prep_term: Option<usize>,
    /// Term index (0-based) of the outgoing cut.
    pub obs_term: Option<usize>,
}

/// How the cut ancilla of a fragment is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ancilla {
    /// Last fragment in the chain: both qubits carry data.
    None,
    /// Identity observable: outcome is +1 with no measurement.
    Fixed,
    /// Measured after a basis change; bit 0 decodes to +1, bit 1 to -1.
    Measured(Pauli),
}

/// A two-qubit fragment circuit.
///
/// Result slots: data bits first (`0..data_bits`), then the ancilla bit when
/// it is measured.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub key: FragmentKey,
    pub circuit: Circuit,
    pub data_bits: usize,
    pub ancilla: Ancilla,
}

impl Fragment {
    /// Number of characters in this fragment's outcome keys.
    pub fn width(&self) -> usize {
        self.data_bits + usize::from(matches!(self.ancilla, Ancilla::Measured(_)))
    }
}

/// One combination of term indices, one per cut, with its fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct QpdInstance {
    /// 0-based term index per cut; for two cuts this is `(k, s)`.
    pub indices: Vec<usize>,
    pub fragments: Vec<Fragment>,
}

/// Builds fragment `position` of an `n_cuts` chain cutting a GHZ ladder
/// `H q0; CNOT(0,1); CNOT(1,2); ...`.
///
/// Each fragment is two qubits: qubit 0 carries the incoming wire (|0> then H
/// for the first fragment, the prepared term state otherwise), a CNOT entangles
/// it with qubit 1, qubit 0 is measured as data, and qubit 1 is either the next
/// cut (measured in the term observable's basis) or, for the last fragment,
/// measured as data.
pub fn build_fragment(decomp: &WireCutDecomposition, n_cuts: usize, key: FragmentKey) -> Result<Fragment, QpdError> {
    let terms = decomp.terms();
    let term = |i: usize| terms.get(i).ok_or(QpdError::TermOutOfRange(i));
    let last = key.position == n_cuts;
    if key.position > n_cuts || key.prep_term.is_some() != (key.position > 0) || key.obs_term.is_some() == last {
        return Err(QpdError::BadFragmentKey(key));
    }

    let mut c = Circuit::new(2)?;
    match key.prep_term {
        None => c.push(Gate::h(0))?,
        Some(k) => c = compose(&prep_circuit(term(k)?.prep), &c, &[0])?,
    }
    c.push(Gate::cnot(0, 1))?;
    c.push(Gate::mz(0, 0))?;

    let ancilla = match key.obs_term {
        None => {
            c.push(Gate::mz(1, 1))?;
            Ancilla::None
        }
        Some(s) => {
            let obs = term(s)?.observable;
            let bc = basis_change(obs);
            for g in bc.circuit.ops() {
                c.push(Gate::single(g.kind(), 1))?;
            }
            if bc.measure {
                c.push(Gate::mz(1, 1))?;
                Ancilla::Measured(obs)
            } else {
                Ancilla::Fixed
            }
        }
    };
    Ok(Fragment { key, circuit: c, data_bits: if last { 2 } else { 1 }, ancilla })
}

/// Enumerates every instance of a one- or two-cut GHZ chain.
///
/// Two cuts split the four-qubit GHZ circuit into three fragments and give
/// `terms^2` instances (64 for the canonical table) in `(k, s)` row-major
/// order. One cut splits a three-qubit GHZ circuit into two fragments.
pub fn build_ghz_qpd_instances(decomp: &WireCutDecomposition, n_cuts: usize) -> Result<Vec<QpdInstance>, QpdError> {
    if !(1..=2).contains(&n_cuts) {
        return Err(QpdError::UnsupportedCuts(n_cuts));
    }
    let cache = unique_fragments(decomp, n_cuts)?;
    Ok(index_tuples(decomp.len(), n_cuts)
        .into_iter()
        .map(|indices| {
            let fragments = fragment_keys(&indices).into_iter().map(|k| cache[&k].clone()).collect();
            QpdInstance { indices, fragments }
        })
        .collect())
}

/// Every distinct fragment of the chain, keyed for reuse across instances.
pub fn unique_fragments(
    decomp: &WireCutDecomposition,
    n_cuts: usize,
) -> Result<BTreeMap<FragmentKey, Fragment>, QpdError> {
    let mut out = BTreeMap::new();
    for indices in index_tuples(decomp.len(), n_cuts) {
        for key in fragment_keys(&indices) {
            if let Entry::Vacant(slot) = out.entry(key) {
                slot.insert(build_fragment(decomp, n_cuts, key)?);
            }
        }
    }
    Ok(out)
}

/// Keys of the `indices.len() + 1` fragments of one instance.
pub fn fragment_keys(indices: &[usize]) -> Vec<FragmentKey> {
    (0..=indices.len())
        .map(|position| FragmentKey {
            position,
            prep_term: position.checked_sub(1).map(|p| indices[p]),
            obs_term: indices.get(position).copied(),
        })
        .collect()
}

/// All index tuples of length `n` over `0..terms`, row-major.
pub fn index_tuples(terms: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = alloc::vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..terms).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}
