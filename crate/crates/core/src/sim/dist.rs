use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::SimError;

/// Exact outcome distribution over measured result slots.
///
/// Keys carry one character per slot in `slots` order. Outcomes with zero
/// probability are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    qubits: Vec<usize>,
    slots: Vec<usize>,
    probs: BTreeMap<String, f64>,
}

impl ProbDist {
    pub(crate) fn from_parts(qubits: Vec<usize>, slots: Vec<usize>, probs: BTreeMap<String, f64>) -> Self {
        ProbDist { qubits, slots, probs }
    }

    /// Builds a distribution from bitstring probabilities. Slots and qubits
    /// are numbered by key position.
    pub fn from_map(probs: BTreeMap<String, f64>) -> Result<Self, SimError> {
        let width = check_keys(probs.keys())?;
        if probs.values().any(|&p| !(p >= 0.0)) {
            return Err(SimError::BadDistribution("negative or NaN probability"));
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(SimError::BadDistribution("probabilities do not sum to one"));
        }
        let probs = probs.into_iter().filter(|(_, p)| *p > 0.0).collect();
        Ok(ProbDist { qubits: (0..width).collect(), slots: (0..width).collect(), probs })
    }

    pub fn measured_qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn probability(&self, key: &str) -> f64 {
        self.probs.get(key).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, f64)> {
        self.probs.iter().map(|(k, p)| (k, *p))
    }

    /// Number of outcomes with nonzero probability.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Marginal over `order`, with key characters rearranged to follow it.
    pub fn select_slots(&self, order: &[usize]) -> Result<ProbDist, SimError> {
        let idx = slot_positions(&self.slots, order)?;
        let mut probs = BTreeMap::new();
        for (k, p) in &self.probs {
            *probs.entry(pick(k, &idx)).or_insert(0.0) += p;
        }
        Ok(ProbDist { qubits: idx.iter().map(|&i| self.qubits[i]).collect(), slots: order.to_vec(), probs })
    }
}

/// Sampled outcome counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotHistogram {
    counts: BTreeMap<String, u64>,
    shots: u64,
    seed: u64,
    slots: Vec<usize>,
}

impl ShotHistogram {
    pub(crate) fn from_parts(counts: BTreeMap<String, u64>, shots: u64, seed: u64, slots: Vec<usize>) -> Self {
        debug_assert_eq!(counts.values().sum::<u64>(), shots);
        ShotHistogram { counts, shots, seed, slots }
    }

    /// Builds a histogram from raw counts; `shots` is their sum.
    pub fn from_counts(counts: BTreeMap<String, u64>, seed: u64) -> Result<Self, SimError> {
        let width = check_keys(counts.keys())?;
        let shots = counts.values().sum();
        let counts = counts.into_iter().filter(|(_, n)| *n > 0).collect();
        Ok(ShotHistogram { counts, shots, seed, slots: (0..width).collect() })
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    /// Empirical frequencies; `None` when no shots were taken.
    pub fn frequencies(&self) -> Option<BTreeMap<String, f64>> {
        if self.shots == 0 {
            return None;
        }
        let n = self.shots as f64;
        Some(self.counts.iter().map(|(k, c)| (k.clone(), *c as f64 / n)).collect())
    }

    pub fn select_slots(&self, order: &[usize]) -> Result<ShotHistogram, SimError> {
        let idx = slot_positions(&self.slots, order)?;
        let mut counts = BTreeMap::new();
        for (k, c) in &self.counts {
            *counts.entry(pick(k, &idx)).or_insert(0) += c;
        }
        Ok(ShotHistogram { counts, shots: self.shots, seed: self.seed, slots: order.to_vec() })
    }
}

/// Text form: one `<bitstring> <count>` line per outcome in lexicographic
/// order, then `shots <N>`.
impl fmt::Display for ShotHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in &self.counts {
            writeln!(f, "{k} {c}")?;
        }
        writeln!(f, "shots {}", self.shots)
    }
}

fn check_keys<'a>(mut keys: impl Iterator<Item = &'a String>) -> Result<usize, SimError> {
    let Some(first) = keys.next() else {
        return Err(SimError::BadDistribution("no outcomes"));
    };
    let width = first.len();
    for k in core::iter::once(first).chain(keys) {
        if k.len() != width || !k.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(SimError::BadDistribution("keys must be equal-length bitstrings"));
        }
    }
    Ok(width)
}

fn slot_positions(slots: &[usize], order: &[usize]) -> Result<Vec<usize>, SimError> {
    order.iter().map(|s| slots.iter().position(|x| x == s).ok_or(SimError::UnknownSlot(*s))).collect()
}

fn pick(key: &str, idx: &[usize]) -> String {
    let b = key.as_bytes();
    idx.iter().map(|&i| b[i] as char).collect()
}
