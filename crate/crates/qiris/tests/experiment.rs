use qiris::experiment::{instances_to_graph, run_once, validate_run, ExperimentConfig, ExperimentError};
use qiris::runtime::{DeviceClass, DeviceReq, ExecMode, KernelSpec, RuntimeBuilder, RuntimeError};
use qiris_core::{canonical_wire_cut, expectation_pauli, simulate, Circuit, EstimateMode, Gate, PauliString};

fn exact() -> ExperimentConfig {
    ExperimentConfig { mode: EstimateMode::Exact, ..ExperimentConfig::default() }
}

fn sampled(seed: u64) -> ExperimentConfig {
    ExperimentConfig { mode: EstimateMode::Sampled, seed, ..ExperimentConfig::default() }
}

#[test]
fn default_graph_shape() {
    let rt = RuntimeBuilder::with_devices(2, 1).build();
    let built = instances_to_graph(&rt, &canonical_wire_cut(), &exact()).unwrap();
    assert_eq!(built.fragment_tasks, 80);
    assert_eq!(built.graph.len(), 81);
    let reduce = built.graph.task(built.reduce).unwrap();
    assert_eq!(reduce.deps.len(), 80);
    assert_eq!(reduce.device, DeviceReq::Class(DeviceClass::Host));
    for t in &built.graph.tasks()[..80] {
        assert!(t.deps.is_empty());
        match &t.kernel {
            KernelSpec::Circuit { circuit, mode, seed, .. } => {
                assert_eq!(circuit.num_qubits(), 2);
                assert_eq!(*mode, ExecMode::Exact);
                assert_eq!(*seed, None);
            }
            other => panic!("{other:?}"),
        }
    }
    let firsts = built.graph.tasks().iter().filter(|t| t.name.starts_with("f1")).count();
    let lasts = built.graph.tasks().iter().filter(|t| t.name.starts_with("f3")).count();
    assert_eq!((firsts, lasts), (8, 8));
}

#[test]
fn literal_layout_has_three_circuits_per_instance() {
    let rt = RuntimeBuilder::with_devices(1, 1).build();
    let cfg = ExperimentConfig { dedup: false, ..exact() };
    let built = instances_to_graph(&rt, &canonical_wire_cut(), &cfg).unwrap();
    assert_eq!(built.fragment_tasks, 192);
    assert_eq!(built.graph.task(built.reduce).unwrap().deps.len(), 192);
    let a = run_once(&rt, &canonical_wire_cut(), &cfg).unwrap().value;
    let b = run_once(&rt, &canonical_wire_cut(), &exact()).unwrap().value;
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn needs_a_qpu() {
    let rt = RuntimeBuilder::with_devices(0, 1).build();
    let err = instances_to_graph(&rt, &canonical_wire_cut(), &exact()).unwrap_err();
    assert!(matches!(err, ExperimentError::Runtime(RuntimeError::NoQpuDevice)));
}

#[test]
fn exact_run_reproduces_ghz_expectation() {
    let est = validate_run(&canonical_wire_cut(), &exact(), 1, 4).unwrap();
    assert!((est.mean - 1.0).abs() < 1e-9, "{}", est.mean);
    assert_eq!(est.std, 0.0);
    assert_eq!(est.reps, 1);
    assert_eq!(est.shots, None);
}

#[test]
fn single_cut_matches_direct_simulation() {
    let cfg = ExperimentConfig { n_cuts: 1, ..exact() };
    let est = validate_run(&canonical_wire_cut(), &cfg, 1, 2).unwrap();
    let ghz3 = Circuit::from_gates(3, [Gate::h(0), Gate::cnot(0, 1), Gate::cnot(1, 2)]).unwrap();
    let (state, _) = simulate(&ghz3).unwrap();
    let direct = expectation_pauli(&state, &"ZZZ".parse::<PauliString>().unwrap()).unwrap();
    assert!((est.value - direct).abs() < 1e-9, "{} vs {direct}", est.value);
}

#[test]
fn sampled_values_do_not_depend_on_placement() {
    let d = canonical_wire_cut();
    let one = validate_run(&d, &sampled(9), 3, 1).unwrap();
    let many = validate_run(&d, &sampled(9), 3, 6).unwrap();
    assert_eq!(one.values, many.values);
    assert!(one.values.iter().all(|v| (0.7..=1.3).contains(v)), "{:?}", one.values);
    assert_ne!(one.values[0], one.values[1]);
    assert_eq!(one.shots, Some(1024));
}

#[test]
fn argument_checks() {
    let d = canonical_wire_cut();
    assert!(matches!(validate_run(&d, &exact(), 0, 1), Err(ExperimentError::InvalidArgument(_))));
    assert!(matches!(validate_run(&d, &exact(), 1, 0), Err(ExperimentError::InvalidArgument(_))));
    let cfg = ExperimentConfig { n_cuts: 3, ..exact() };
    assert!(matches!(validate_run(&d, &cfg, 1, 1), Err(ExperimentError::Qpd(_))));
}
