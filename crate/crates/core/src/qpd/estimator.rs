use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::instances::{index_tuples, unique_fragments, Ancilla, FragmentKey};
use super::{QpdError, WireCutDecomposition};
use crate::rng::{rng_from_seed, unit_f64};
use crate::sim::{simulate, ProbDist, ShotHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimateMode {
    /// Fragment distributions computed exactly.
    Exact,
    /// Fragment distributions estimated from shot counts.
    Sampled,
}

/// Outcome data of one fragment execution.
#[derive(Debug, Clone, PartialEq)]
pub enum FragmentData {
    Exact(ProbDist),
    Sampled(ShotHistogram),
}

impl FragmentData {
    pub fn mode(&self) -> EstimateMode {
        match self {
            FragmentData::Exact(_) => EstimateMode::Exact,
            FragmentData::Sampled(_) => EstimateMode::Sampled,
        }
    }

    /// `(key, probability)` pairs: exact probabilities or empirical
    /// frequencies.
    fn weights(&self) -> Result<Vec<(&str, f64)>, QpdError> {
        match self {
            FragmentData::Exact(d) => Ok(d.iter().map(|(k, p)| (k.as_str(), p)).collect()),
            FragmentData::Sampled(h) => {
                if h.shots() == 0 {
                    return Err(QpdError::EmptyHistogram);
                }
                let n = h.shots() as f64;
                Ok(h.counts().iter().map(|(k, c)| (k.as_str(), *c as f64 / n)).collect())
            }
        }
    }
}

/// Fragment outcomes of one instance, aligned with `QpdInstance::fragments`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub indices: Vec<usize>,
    pub fragments: Vec<FragmentData>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpdEstimate {
    pub value: f64,
    pub mode: EstimateMode,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    /// Number of repetitions summarized by `mean` and `std`.
    pub reps: usize,
    pub mean: f64,
    /// Sample standard deviation over repetitions (0 for a single one).
    pub std: f64,
    /// Per-repetition values, in repetition order.
    pub values: Vec<f64>,
}

impl QpdEstimate {
    pub fn single(value: f64, mode: EstimateMode, shots: Option<u64>, seed: Option<u64>) -> Self {
        QpdEstimate { value, mode, shots, seed, reps: 1, mean: value, std: 0.0, values: alloc::vec![value] }
    }

    /// Summarizes repeated estimates; `value` is their mean.
    pub fn from_reps(values: Vec<f64>, mode: EstimateMode, shots: Option<u64>, seed: Option<u64>) -> Self {
        let (mean, std) = mean_std(&values);
        QpdEstimate { value: mean, mode, shots, seed, reps: values.len(), mean, std, values }
    }
}

/// Mean and sample (n - 1) standard deviation; the deviation of fewer than
/// two values is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// `f(y1, y2, y3, y4) = (2y1 - 1)(2y2 - 1)(2y3 - 1)(2y4 - 1)`.
pub fn sign_function(y: [u8; 4]) -> i32 {
    y.iter().map(|&b| 2 * i32::from(b) - 1).product()
}

/// Z-eigenvalue product `prod (1 - 2y)` of data bits. Equals
/// [`sign_function`] for four bits and stays a parity for any count.
pub fn parity_sign(bits: impl IntoIterator<Item = u8>) -> f64 {
    if bits.into_iter().filter(|&b| b == 1).count() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reconstructs `<Z...Z>` of the uncut GHZ chain:
///
/// `sum over index tuples of prod(c) * sum over joint outcomes of
/// prod(o) * f(data bits) * prod(P_fragment)`.
///
/// Every index tuple must be present exactly once.
pub fn estimate_chain(
    decomp: &WireCutDecomposition,
    n_cuts: usize,
    results: &[InstanceResult],
    mode: EstimateMode,
) -> Result<QpdEstimate, QpdError> {
    let terms = decomp.terms();
    let mut by_index: BTreeMap<&[usize], &InstanceResult> = BTreeMap::new();
    for r in results {
        if r.indices.len() != n_cuts || r.fragments.len() != n_cuts + 1 {
            return Err(QpdError::FragmentCountMismatch);
        }
        if by_index.insert(&r.indices, r).is_some() {
            return Err(QpdError::DuplicateInstance(r.indices.clone()));
        }
    }

    let mut total = 0.0;
    for indices in index_tuples(terms.len(), n_cuts) {
        let inst = by_index.get(indices.as_slice()).ok_or_else(|| QpdError::MissingInstance(indices.clone()))?;
        let weight: f64 = indices.iter().map(|&i| terms[i].coefficient).product();

        // joint distribution over all fragments' outcomes, carried as
        // (probability, o-product times data sign) pairs
        let mut joint: Vec<(f64, f64)> = alloc::vec![(1.0, 1.0)];
        for (position, data) in inst.fragments.iter().enumerate() {
            if data.mode() != mode {
                return Err(QpdError::ModeMismatch);
            }
            let ancilla = match indices.get(position) {
                None => Ancilla::None,
                Some(&i) if terms[i].observable == crate::circuit::Pauli::I => Ancilla::Fixed,
                Some(&i) => Ancilla::Measured(terms[i].observable),
            };
            let data_bits = if position == n_cuts { 2 } else { 1 };
            let outcomes = data
                .weights()?
                .into_iter()
                .map(|(key, p)| Ok((p, outcome_sign(key, data_bits, ancilla)?)))
                .collect::<Result<Vec<_>, QpdError>>()?;
            joint = joint.iter().flat_map(|&(p, s)| outcomes.iter().map(move |&(q, t)| (p * q, s * t))).collect();
        }
        total += weight * joint.iter().map(|(p, s)| p * s).sum::<f64>();
    }
    Ok(QpdEstimate::single(total, mode, None, None))
}

/// Two-cut estimate of `<ZZZZ>` from results keyed by 0-based `(k, s)`.
pub fn estimate_zzzz(
    results: &BTreeMap<(usize, usize), InstanceResult>,
    decomp: &WireCutDecomposition,
    mode: EstimateMode,
) -> Result<QpdEstimate, QpdError> {
    for (&(k, s), r) in results {
        if r.indices != [k, s] {
            return Err(QpdError::MissingInstance(alloc::vec![k, s]));
        }
    }
    let flat: Vec<InstanceResult> = results.values().cloned().collect();
    estimate_chain(decomp, 2, &flat, mode)
}

/// Sign contribution of one fragment outcome: `o` times the data parity.
fn outcome_sign(key: &str, data_bits: usize, ancilla: Ancilla) -> Result<f64, QpdError> {
    let bytes = key.as_bytes();
    let width = data_bits + usize::from(matches!(ancilla, Ancilla::Measured(_)));
    if bytes.len() != width || !bytes.iter().all(|b| *b == b'0' || *b == b'1') {
        return Err(QpdError::BadOutcomeKey { expected_width: width });
    }
    let mut sign = parity_sign(bytes[..data_bits].iter().map(|b| b - b'0'));
    if matches!(ancilla, Ancilla::Measured(_)) && bytes[data_bits] == b'1' {
        sign = -sign;
    }
    Ok(sign)
}

/// Monte Carlo version of the two-cut estimator: draws `(k, s)` with
/// probability `|c_k| |c_s| / gamma^2`, runs each fragment for `shots` shots
/// and averages `gamma^2 sgn(c_k) sgn(c_s) o_k o_s f(y)` over shots and
/// samples. Unbiased for the enumerated value.
///
/// `std` of the result is the sample deviation of the per-sample terms.
pub fn importance_sampled_estimate(
    decomp: &WireCutDecomposition,
    n_samples: usize,
    shots: u64,
    seed: u64,
) -> Result<QpdEstimate, QpdError> {
    if n_samples == 0 || shots == 0 {
        return Err(QpdError::InvalidArgument("samples and shots must be positive"));
    }
    let terms = decomp.terms();
    let gamma = decomp.gamma();

    // per fragment: cumulative probabilities with the matching outcome sign
    let mut tables: BTreeMap<FragmentKey, Vec<(f64, f64)>> = BTreeMap::new();
    for (key, frag) in unique_fragments(decomp, 2)? {
        let (_, dist) = simulate(&frag.circuit)?;
        let mut acc = 0.0;
        let mut table = Vec::with_capacity(dist.len());
        for (k, p) in dist.iter() {
            acc += p;
            table.push((acc, outcome_sign(k, frag.data_bits, frag.ancilla)?));
        }
        tables.insert(key, table);
    }
    let term_cdf: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t.coefficient.abs() / gamma;
            Some(*acc)
        })
        .collect();

    let mut rng = rng_from_seed(seed);
    let draw_term = |rng: &mut crate::rng::SimRng| {
        let u = unit_f64(rng) * term_cdf[term_cdf.len() - 1];
        term_cdf.partition_point(|&c| c <= u).min(terms.len() - 1)
    };
    let draw_outcome = |rng: &mut crate::rng::SimRng, table: &[(f64, f64)]| {
        let u = unit_f64(rng) * table[table.len() - 1].0;
        table[table.partition_point(|&(c, _)| c <= u).min(table.len() - 1)].1
    };

    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let k = draw_term(&mut rng);
        let s = draw_term(&mut rng);
        let keys = super::instances::fragment_keys(&[k, s]);
        let frags: Vec<&[(f64, f64)]> = keys.iter().map(|key| tables[key].as_slice()).collect();
        let mut shot_sum = 0.0;
        for _ in 0..shots {
            shot_sum += frags.iter().map(|t| draw_outcome(&mut rng, t)).product::<f64>();
        }
        let sign = terms[k].coefficient.signum() * terms[s].coefficient.signum();
        samples.push(gamma * gamma * sign * shot_sum / shots as f64);
    }
    let (mean, std) = mean_std(&samples);
    Ok(QpdEstimate {
        value: mean,
        mode: EstimateMode::Sampled,
        shots: Some(shots),
        seed: Some(seed),
        reps: 1,
        mean,
        std,
        values: alloc::vec![mean],
    })
}
