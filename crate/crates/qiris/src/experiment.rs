//! The GHZ wire-cut experiment on the task runtime.
//!
//! Every fragment circuit becomes one qpu task; a single host task reduces
//! their distributions with the chain estimator.

use std::collections::BTreeMap;

use thiserror::Error;

use qiris_core::qpd::{fragment_keys, unique_fragments, FragmentKey};
use qiris_core::rng::derive_seed;
use qiris_core::{
    build_ghz_qpd_instances, estimate_chain, EstimateMode, FragmentData, InstanceResult, QpdError, QpdEstimate,
    WireCutDecomposition,
};

use crate::runtime::{
    DeviceClass, DeviceReq, ExecMode, HostCall, KernelSpec, Opaque, Payload, Policy, Runtime, RuntimeBuilder,
    RuntimeError, TaskGraph, TaskId, TaskState,
};

/// Name of the host kernel that runs the estimator.
pub const REDUCE_KERNEL: &str = "qpd_reduce";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub shots: u64,
    pub mode: EstimateMode,
    pub seed: u64,
    /// Share fragments between instances (80 tasks) instead of building
    /// three per instance (192 tasks).
    pub dedup: bool,
    pub n_cuts: usize,
    pub policy: Policy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shots: 1024,
            mode: EstimateMode::Exact,
            seed: 0,
            dedup: true,
            n_cuts: 2,
            policy: Policy::Default,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Qpd(#[from] QpdError),
    #[error("{0}")]
    InvalidArgument(&'static str),
    #[error("task `{task}` failed: {error}")]
    TaskFailed { task: String, error: String },
}

/// A built experiment graph and the id of its reduce task.
#[derive(Debug)]
pub struct ExperimentGraph {
    pub graph: TaskGraph,
    pub reduce: TaskId,
    pub fragment_tasks: usize,
}

/// Params of the reduce task: which dependency feeds which fragment.
#[derive(Debug)]
struct ReducePlan {
    decomp: WireCutDecomposition,
    n_cuts: usize,
    mode: EstimateMode,
    shots: Option<u64>,
    seed: u64,
    instances: Vec<(Vec<usize>, Vec<TaskId>)>,
}

/// Builds the task graph of one experiment run. Registers the reduce kernel
/// on `rt` the first time.
pub fn instances_to_graph(
    rt: &Runtime,
    decomp: &WireCutDecomposition,
    cfg: &ExperimentConfig,
) -> Result<ExperimentGraph, ExperimentError> {
    if !rt.has_class(DeviceClass::Qpu) {
        return Err(RuntimeError::NoQpuDevice.into());
    }
    match rt.register_host_kernel(REDUCE_KERNEL, reduce) {
        Ok(()) | Err(RuntimeError::DuplicateKernel(_)) => {}
        Err(e) => return Err(e.into()),
    }

    let exec = match cfg.mode {
        EstimateMode::Exact => ExecMode::Exact,
        EstimateMode::Sampled => ExecMode::Sampled,
    };
    let mut graph = TaskGraph::new(cfg.seed);
    let add = |graph: &mut TaskGraph, name: String, circuit| {
        let kernel = KernelSpec::Circuit { circuit, output_order: None, shots: cfg.shots, seed: None, mode: exec };
        graph.create_task(name, kernel, &[], DeviceReq::Class(DeviceClass::Qpu))
    };

    let instances = build_ghz_qpd_instances(decomp, cfg.n_cuts)?;
    let mut plan_instances = Vec::with_capacity(instances.len());
    if cfg.dedup {
        let mut ids: BTreeMap<FragmentKey, TaskId> = BTreeMap::new();
        for (key, frag) in unique_fragments(decomp, cfg.n_cuts)? {
            ids.insert(key, add(&mut graph, fragment_name(key), frag.circuit)?);
        }
        for inst in &instances {
            let tasks = fragment_keys(&inst.indices).iter().map(|k| ids[k]).collect();
            plan_instances.push((inst.indices.clone(), tasks));
        }
    } else {
        for inst in instances {
            let mut tasks = Vec::with_capacity(inst.fragments.len());
            for frag in inst.fragments {
                let label: Vec<String> = inst.indices.iter().map(|i| (i + 1).to_string()).collect();
                let name = format!("inst{}_f{}", label.join("_"), frag.key.position + 1);
                tasks.push(add(&mut graph, name, frag.circuit)?);
            }
            plan_instances.push((inst.indices, tasks));
        }
    }

    let fragment_tasks = graph.len();
    let plan = ReducePlan {
        decomp: decomp.clone(),
        n_cuts: cfg.n_cuts,
        mode: cfg.mode,
        shots: (cfg.mode == EstimateMode::Sampled).then_some(cfg.shots),
        seed: cfg.seed,
        instances: plan_instances,
    };
    let deps: Vec<TaskId> = (0..fragment_tasks).collect();
    let kernel = KernelSpec::Host { name: REDUCE_KERNEL.into(), params: Some(Opaque::new(plan)) };
    let reduce = graph.create_task("estimate", kernel, &deps, DeviceReq::Class(DeviceClass::Host))?;
    Ok(ExperimentGraph { graph, reduce, fragment_tasks })
}

fn fragment_name(key: FragmentKey) -> String {
    let mut name = format!("f{}", key.position + 1);
    if let Some(k) = key.prep_term {
        name.push_str(&format!("_prep{}", k + 1));
    }
    if let Some(s) = key.obs_term {
        name.push_str(&format!("_obs{}", s + 1));
    }
    name
}

fn reduce(call: &mut HostCall) -> Result<Opaque, String> {
    let plan =
        call.params.as_ref().and_then(|p| p.downcast_ref::<ReducePlan>()).ok_or("qpd_reduce needs a reduce plan")?;
    let data = |id: TaskId| match call.deps.get(&id) {
        Some(Payload::Distribution(d)) => Ok(FragmentData::Exact(d.clone())),
        Some(Payload::Histogram(h)) => Ok(FragmentData::Sampled(h.clone())),
        _ => Err(format!("task {id} did not produce a distribution")),
    };
    let results = plan
        .instances
        .iter()
        .map(|(indices, tasks)| {
            Ok(InstanceResult {
                indices: indices.clone(),
                fragments: tasks.iter().map(|&t| data(t)).collect::<Result<_, String>>()?,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let est = estimate_chain(&plan.decomp, plan.n_cuts, &results, plan.mode).map_err(|e| e.to_string())?;
    Ok(Opaque::new(QpdEstimate::single(est.value, plan.mode, plan.shots, Some(plan.seed))))
}

/// Runs one built graph to completion and returns its estimate.
pub fn run_once(
    rt: &Runtime,
    decomp: &WireCutDecomposition,
    cfg: &ExperimentConfig,
) -> Result<QpdEstimate, ExperimentError> {
    let built = instances_to_graph(rt, decomp, cfg)?;
    let handle = rt.submit(built.graph, cfg.policy, true)?;
    let results = handle.wait();
    let graph = handle.graph();
    if let Some((id, r)) = results.iter().find(|(_, r)| r.state == TaskState::Failed) {
        return Err(ExperimentError::TaskFailed {
            task: graph.tasks()[*id].name.clone(),
            error: r.error.clone().unwrap_or_default(),
        });
    }
    results[&built.reduce]
        .payload
        .as_ref()
        .and_then(|p| p.host::<QpdEstimate>())
        .cloned()
        .ok_or(ExperimentError::InvalidArgument("reduce task returned no estimate"))
}

/// Repeats the experiment `reps` times on `devices` qpu devices plus one
/// host device. Repetition `r` uses graph seed `derive_seed(cfg.seed, r)`.
pub fn validate_run(
    decomp: &WireCutDecomposition,
    cfg: &ExperimentConfig,
    reps: usize,
    devices: usize,
) -> Result<QpdEstimate, ExperimentError> {
    if reps == 0 {
        return Err(ExperimentError::InvalidArgument("reps must be at least 1"));
    }
    if devices == 0 {
        return Err(ExperimentError::InvalidArgument("devices must be at least 1"));
    }
    let rt = RuntimeBuilder::with_devices(devices, 1).build();
    let mut values = Vec::with_capacity(reps);
    for rep in 0..reps {
        let run = ExperimentConfig { seed: derive_seed(cfg.seed, rep as u64), ..cfg.clone() };
        values.push(run_once(&rt, decomp, &run)?.value);
    }
    let shots = (cfg.mode == EstimateMode::Sampled).then_some(cfg.shots);
    Ok(QpdEstimate::from_reps(values, cfg.mode, shots, Some(cfg.seed)))
}
