use std::collections::BTreeMap;

use num_complex::Complex64 as C;
use qiris_core::qpd::{fragment_keys, index_tuples, mean_std, unique_fragments, Ancilla, FragmentKey, InstanceResult};
use qiris_core::rng::{rng_from_seed, unit_f64};
use qiris_core::{
    build_ghz_qpd_instances, canonical_wire_cut, estimate_chain, estimate_zzzz, expectation_pauli,
    importance_sampled_estimate, prep_circuit, reconstruct_density, sample_shots, simulate, Circuit, DensityMatrix,
    EstimateMode, FragmentData, Gate, Pauli, PauliString, ProbDist, QpdError, StateVector, WireCutDecomposition,
};

fn exact_results(decomp: &WireCutDecomposition, n_cuts: usize) -> Vec<InstanceResult> {
    let dists: BTreeMap<FragmentKey, ProbDist> = unique_fragments(decomp, n_cuts)
        .unwrap()
        .into_iter()
        .map(|(k, f)| (k, simulate(&f.circuit).unwrap().1))
        .collect();
    index_tuples(decomp.len(), n_cuts)
        .into_iter()
        .map(|indices| {
            let fragments = fragment_keys(&indices).iter().map(|k| FragmentData::Exact(dists[k].clone())).collect();
            InstanceResult { indices, fragments }
        })
        .collect()
}

fn keyed(results: Vec<InstanceResult>) -> BTreeMap<(usize, usize), InstanceResult> {
    results.into_iter().map(|r| ((r.indices[0], r.indices[1]), r)).collect()
}

/// Independent value of the cut estimator: the outcome sum factorizes into a
/// product of per-fragment Pauli expectations `<Z_data (x) O>` taken on the
/// fragment's unmeasured state, built here gate by gate.
fn factorized_oracle(decomp: &WireCutDecomposition, n_cuts: usize) -> f64 {
    let terms = decomp.terms();
    let fragment_expectation = |prep: Option<usize>, obs: Option<usize>| {
        let mut c = match prep {
            None => Circuit::from_gates(2, [Gate::h(0)]).unwrap(),
            Some(k) => {
                let p = prep_circuit(terms[k].prep);
                let mut c = Circuit::new(2).unwrap();
                for g in p.ops() {
                    c.push(*g).unwrap();
                }
                c
            }
        };
        c.push(Gate::cnot(0, 1)).unwrap();
        let (state, _) = simulate(&c).unwrap();
        let second = obs.map_or(Pauli::Z, |s| terms[s].observable);
        expectation_pauli(&state, &PauliString(vec![Pauli::Z, second])).unwrap()
    };
    index_tuples(terms.len(), n_cuts)
        .iter()
        .map(|idx| {
            let weight: f64 = idx.iter().map(|&i| terms[i].coefficient).product();
            let parts: f64 = fragment_keys(idx).iter().map(|k| fragment_expectation(k.prep_term, k.obs_term)).product();
            weight * parts
        })
        .sum()
}

fn ghz_zzzz() -> f64 {
    let c = Circuit::from_gates(4, [Gate::h(0), Gate::cnot(0, 1), Gate::cnot(1, 2), Gate::cnot(2, 3)]).unwrap();
    let (state, _) = simulate(&c).unwrap();
    expectation_pauli(&state, &"ZZZZ".parse().unwrap()).unwrap()
}

#[test]
fn random_densities_pass_through_the_channel() {
    let d = canonical_wire_cut();
    let mut rng = rng_from_seed(3);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let rho = if i % 2 == 0 {
            let a = C::new(unit_f64(&mut rng) - 0.5, unit_f64(&mut rng) - 0.5);
            let b = C::new(unit_f64(&mut rng) - 0.5, unit_f64(&mut rng) - 0.5);
            let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
            DensityMatrix::pure([a / n, b / n])
        } else {
            let v = [unit_f64(&mut rng) - 0.5, unit_f64(&mut rng) - 0.5, unit_f64(&mut rng) - 0.5];
            let r = unit_f64(&mut rng) / (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            DensityMatrix::from_bloch(v[0] * r, v[1] * r, v[2] * r).unwrap()
        };
        worst = worst.max(reconstruct_density(&d, &rho).unwrap().max_abs_diff(&rho));
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn overhead_and_pair_normalization() {
    let d = canonical_wire_cut();
    assert_eq!(d.gamma(), 4.0);
    let pairs: f64 =
        index_tuples(8, 2).iter().map(|ks| (d.terms()[ks[0]].coefficient * d.terms()[ks[1]].coefficient).abs()).sum();
    assert_eq!(pairs, 16.0);
}

#[test]
fn exact_two_cut_estimate_is_one() {
    let d = canonical_wire_cut();
    let est = estimate_zzzz(&keyed(exact_results(&d, 2)), &d, EstimateMode::Exact).unwrap();
    let oracle = factorized_oracle(&d, 2);
    assert!((est.value - 1.0).abs() <= 1e-9, "{}", est.value);
    assert!((est.value - oracle).abs() <= 1e-9);
    assert!((est.value - ghz_zzzz()).abs() <= 1e-9);
    assert_eq!(est.std, 0.0);
}

#[test]
fn exact_one_cut_estimate_matches_uncut_ghz3() {
    let d = canonical_wire_cut();
    let est = estimate_chain(&d, 1, &exact_results(&d, 1), EstimateMode::Exact).unwrap();
    let c = Circuit::from_gates(3, [Gate::h(0), Gate::cnot(0, 1), Gate::cnot(1, 2)]).unwrap();
    let (state, _) = simulate(&c).unwrap();
    // odd parity: |000> and |111> contribute +1 and -1
    let direct = expectation_pauli(&state, &"ZZZ".parse().unwrap()).unwrap();
    assert!(direct.abs() <= 1e-12);
    assert!((est.value - direct).abs() <= 1e-9, "{}", est.value);
    assert!((est.value - factorized_oracle(&d, 1)).abs() <= 1e-9);
}

#[test]
fn identity_instance_measures_only_data() {
    let inst = build_ghz_qpd_instances(&canonical_wire_cut(), 2).unwrap();
    let first = &inst[0].fragments[0];
    assert_eq!(first.ancilla, Ancilla::Fixed);
    assert_eq!(first.circuit.result_count(), 1);
    assert_eq!(StateVector::zero(2).unwrap().num_qubits(), first.circuit.num_qubits());
}

fn replace_fragment(results: &mut [InstanceResult], position: usize, data: &FragmentData) {
    for r in results {
        r.fragments[position] = data.clone();
    }
}

#[test]
fn signed_mass_free_middle_fragment_gives_zero() {
    // uniform outcomes carry no signed mass, the normalized analogue of P2 = 0
    let uniform = |width: usize| {
        let keys: Vec<String> = (0..1usize << width).map(|i| format!("{i:0width$b}")).collect();
        let p = 1.0 / keys.len() as f64;
        FragmentData::Exact(ProbDist::from_map(keys.into_iter().map(|k| (k, p)).collect()).unwrap())
    };
    let d = canonical_wire_cut();
    let mut results = exact_results(&d, 2);
    for r in &mut results {
        let width = match &r.fragments[1] {
            FragmentData::Exact(p) => p.slots().len(),
            FragmentData::Sampled(_) => unreachable!(),
        };
        r.fragments[1] = uniform(width);
    }
    let est = estimate_chain(&d, 2, &results, EstimateMode::Exact).unwrap();
    assert!(est.value.abs() <= 1e-12, "{}", est.value);
}

#[test]
fn estimate_is_affine_in_last_fragment() {
    let d = canonical_wire_cut();
    let base = exact_results(&d, 2);
    let dist = |p00: f64, p11: f64, p01: f64| {
        let m: BTreeMap<String, f64> =
            [("00".to_string(), p00), ("11".to_string(), p11), ("01".to_string(), p01)].into();
        FragmentData::Exact(ProbDist::from_map(m).unwrap())
    };
    let value = |data: &FragmentData| {
        let mut r = base.clone();
        replace_fragment(&mut r, 2, data);
        estimate_chain(&d, 2, &r, EstimateMode::Exact).unwrap().value
    };
    let (a, b) = (dist(0.7, 0.2, 0.1), dist(0.1, 0.3, 0.6));
    let lambda = 0.35;
    let mix = dist(
        lambda * 0.7 + (1.0 - lambda) * 0.1,
        lambda * 0.2 + (1.0 - lambda) * 0.3,
        lambda * 0.1 + (1.0 - lambda) * 0.6,
    );
    assert!((value(&mix) - (lambda * value(&a) + (1.0 - lambda) * value(&b))).abs() <= 1e-12);
}

#[test]
fn missing_or_mismatched_results_are_errors() {
    let d = canonical_wire_cut();
    let mut results = exact_results(&d, 2);
    let last = results.pop().unwrap();
    assert_eq!(
        estimate_chain(&d, 2, &results, EstimateMode::Exact).unwrap_err(),
        QpdError::MissingInstance(vec![7, 7])
    );
    results.push(last);
    assert_eq!(estimate_chain(&d, 2, &results, EstimateMode::Sampled).unwrap_err(), QpdError::ModeMismatch);

    let empty = qiris_core::ShotHistogram::from_counts(BTreeMap::from([("00".to_string(), 0)]), 0).unwrap();
    replace_fragment(&mut results, 2, &FragmentData::Sampled(empty));
    for r in &mut results {
        for f in &mut r.fragments[..2] {
            if let FragmentData::Exact(p) = f {
                *f = FragmentData::Sampled(sample_shots(p, 16, 0));
            }
        }
    }
    assert_eq!(estimate_chain(&d, 2, &results, EstimateMode::Sampled).unwrap_err(), QpdError::EmptyHistogram);
}

#[test]
fn sampled_estimate_is_close_to_one() {
    let d = canonical_wire_cut();
    let dists: BTreeMap<_, _> =
        unique_fragments(&d, 2).unwrap().into_iter().map(|(k, f)| (k, simulate(&f.circuit).unwrap().1)).collect();
    let results: Vec<InstanceResult> = index_tuples(8, 2)
        .into_iter()
        .map(|indices| {
            let fragments = fragment_keys(&indices)
                .iter()
                .map(|k| {
                    FragmentData::Sampled(sample_shots(
                        &dists[k],
                        1024,
                        k.position as u64 * 100 + k.prep_term.unwrap_or(0) as u64 * 10 + k.obs_term.unwrap_or(0) as u64,
                    ))
                })
                .collect();
            InstanceResult { indices, fragments }
        })
        .collect();
    let v = estimate_chain(&d, 2, &results, EstimateMode::Sampled).unwrap().value;
    assert!((0.7..=1.3).contains(&v), "{v}");
}

#[test]
fn importance_sampling_is_unbiased() {
    let d = canonical_wire_cut();
    let runs: Vec<f64> = (0..200).map(|seed| importance_sampled_estimate(&d, 200, 1, seed).unwrap().value).collect();
    let (mean, std) = mean_std(&runs);
    let se = std / (runs.len() as f64).sqrt();
    assert!((mean - 1.0).abs() <= 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn single_importance_sample_is_bounded() {
    let d = canonical_wire_cut();
    for seed in 0..50 {
        let one_shot = importance_sampled_estimate(&d, 1, 1, seed).unwrap().value;
        assert!(one_shot == 16.0 || one_shot == -16.0, "{one_shot}");
        let many = importance_sampled_estimate(&d, 1, 64, seed).unwrap().value;
        assert!(many.abs() <= 16.0);
    }
    assert_eq!(importance_sampled_estimate(&d, 30, 8, 5), importance_sampled_estimate(&d, 30, 8, 5));
    assert!(importance_sampled_estimate(&d, 0, 8, 5).is_err());
}
