use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::Deserialize;
use serde_json::Value;

use qiris_core::{Circuit, Gate, GateKind};

use super::FormatError;
use crate::runtime::{
    DeviceClass, DeviceReq, ExecMode, HostCall, KernelSpec, Opaque, Payload, Policy, QirSource, RuntimeBuilder,
    RuntimeError, TaskGraph,
};

const DEFAULT_SHOTS: u64 = 1024;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    policy: Option<String>,
    #[serde(default)]
    devices: DeviceCounts,
    #[serde(default)]
    accelerator: Option<String>,
    tasks: Vec<TaskEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceCounts {
    #[serde(default = "one")]
    qpu: usize,
    #[serde(default = "one")]
    host: usize,
}

fn one() -> usize {
    1
}

impl Default for DeviceCounts {
    fn default() -> Self {
        DeviceCounts { qpu: 1, host: 1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    name: String,
    kernel: KernelEntry,
    #[serde(default)]
    shots: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    depends: Vec<String>,
    #[serde(default)]
    device: DeviceEntry,
}

#[derive(Debug)]
enum KernelEntry {
    Named(String),
    Object(KernelObject),
}

// A bare string is a late-bound kernel name; objects are tagged by `type`.
// Going through `Value` keeps serde's field-level error messages, which an
// untagged enum would replace with a generic one.
impl<'de> Deserialize<'de> for KernelEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) => Ok(KernelEntry::Named(s)),
            v @ Value::Object(_) => serde_json::from_value(v).map(KernelEntry::Object).map_err(de::Error::custom),
            other => Err(de::Error::custom(format!("kernel must be a name or an object, found {other}"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum KernelObject {
    Qir {
        #[serde(default)]
        file: Option<String>,
        #[serde(default)]
        source: Option<String>,
        #[serde(default)]
        mode: Option<String>,
    },
    Host {
        name: String,
        #[serde(default)]
        params: Option<Value>,
    },
    Circuit {
        qubits: usize,
        gates: Vec<GateEntry>,
        #[serde(default)]
        output: Option<Vec<usize>>,
        #[serde(default)]
        mode: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateEntry {
    gate: String,
    qubits: Vec<usize>,
    #[serde(default)]
    angle: Option<f64>,
    #[serde(default)]
    slot: Option<usize>,
}

#[derive(Debug, Default)]
enum DeviceEntry {
    #[default]
    Any,
    Class(DeviceClass),
    Id(usize),
}

impl<'de> Deserialize<'de> for DeviceEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "any" => Ok(DeviceEntry::Any),
            Value::String(s) if s == "qpu" => Ok(DeviceEntry::Class(DeviceClass::Qpu)),
            Value::String(s) if s == "host" => Ok(DeviceEntry::Class(DeviceClass::Host)),
            Value::Number(n) if n.as_u64().is_some() => Ok(DeviceEntry::Id(n.as_u64().unwrap_or(0) as usize)),
            other => Err(de::Error::custom(format!(
                "device must be \"any\", \"qpu\", \"host\" or a device id, found {other}"
            ))),
        }
    }
}

/// A parsed graph file, ready to run.
#[derive(Debug)]
pub struct GraphConfig {
    pub graph: TaskGraph,
    pub policy: Policy,
    pub qpu_devices: usize,
    pub host_devices: usize,
}

/// Parses graph JSON. Relative `.ll` paths are resolved against `base_dir`.
pub fn parse_graph(text: &str, base_dir: &Path) -> Result<GraphConfig, FormatError> {
    let file: GraphFile = serde_json::from_str(text)?;
    let policy = match &file.policy {
        Some(p) => p.parse().map_err(FormatError::Invalid)?,
        None => Policy::Default,
    };
    let default_mode = match file.accelerator.as_deref() {
        None | Some("statevector") => ExecMode::Sampled,
        Some("trajectory") => ExecMode::Trajectory,
        Some(other) => {
            return Err(FormatError::Invalid(format!(
                "unknown accelerator `{other}` (expected statevector or trajectory)"
            )))
        }
    };

    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut graph = TaskGraph::new(file.seed);
    for entry in &file.tasks {
        if ids.contains_key(entry.name.as_str()) {
            return Err(FormatError::DuplicateTask(entry.name.clone()));
        }
        let task_err = |message: String| FormatError::Task { task: entry.name.clone(), message };
        let shots = entry.shots.unwrap_or(DEFAULT_SHOTS);
        let kernel = match &entry.kernel {
            KernelEntry::Named(name) => {
                let name = if name.ends_with(".ll") { resolve(base_dir, name) } else { name.clone() };
                KernelSpec::Named { name, shots, mode: default_mode }
            }
            KernelEntry::Object(KernelObject::Qir { file, source, mode }) => {
                let source = match (file, source) {
                    (Some(f), None) => QirSource::Path(resolve(base_dir, f).into()),
                    (None, Some(s)) => QirSource::Text(s.clone()),
                    _ => return Err(task_err("qir kernel needs exactly one of `file` and `source`".into())),
                };
                let mode = parse_mode(mode.as_deref(), default_mode).map_err(task_err)?;
                KernelSpec::Qir { source, shots, seed: entry.seed, mode }
            }
            KernelEntry::Object(KernelObject::Host { name, params }) => {
                KernelSpec::Host { name: name.clone(), params: params.clone().map(Opaque::new) }
            }
            KernelEntry::Object(KernelObject::Circuit { qubits, gates, output, mode }) => {
                let circuit = build_circuit(*qubits, gates).map_err(task_err)?;
                let mode = parse_mode(mode.as_deref(), default_mode).map_err(task_err)?;
                KernelSpec::Circuit { circuit, output_order: output.clone(), shots, seed: entry.seed, mode }
            }
        };
        let device = match entry.device {
            DeviceEntry::Any => DeviceReq::Any,
            DeviceEntry::Class(c) => DeviceReq::Class(c),
            DeviceEntry::Id(id) => DeviceReq::Explicit(id),
        };
        let id = graph.create_task(entry.name.clone(), kernel, &[], device).map_err(|e| task_err(e.to_string()))?;
        ids.insert(&entry.name, id);
    }
    for entry in &file.tasks {
        for dep in &entry.depends {
            let dep_id = ids
                .get(dep.as_str())
                .ok_or_else(|| FormatError::UnknownDependency { task: entry.name.clone(), dep: dep.clone() })?;
            graph.add_dependency(ids[entry.name.as_str()], *dep_id).map_err(|e| FormatError::Invalid(e.to_string()))?;
        }
    }
    Ok(GraphConfig { graph, policy, qpu_devices: file.devices.qpu, host_devices: file.devices.host })
}

fn resolve(base: &Path, file: &str) -> String {
    let p = Path::new(file);
    if p.is_absolute() {
        file.to_string()
    } else {
        base.join(p).to_string_lossy().into_owned()
    }
}

fn parse_mode(mode: Option<&str>, default: ExecMode) -> Result<ExecMode, String> {
    match mode {
        None => Ok(default),
        Some("exact") => Ok(ExecMode::Exact),
        Some("sampled") => Ok(ExecMode::Sampled),
        Some("trajectory") => Ok(ExecMode::Trajectory),
        Some(other) => Err(format!("unknown mode `{other}` (expected exact, sampled or trajectory)")),
    }
}

fn build_circuit(qubits: usize, gates: &[GateEntry]) -> Result<Circuit, String> {
    let mut c = Circuit::new(qubits).map_err(|e| e.to_string())?;
    for (i, g) in gates.iter().enumerate() {
        let kind: GateKind = g.gate.parse().map_err(|_| format!("gate {i}: unknown gate `{}`", g.gate))?;
        let gate = Gate::new(kind, &g.qubits, g.angle, g.slot).map_err(|e| format!("gate {i}: {e}"))?;
        c.push(gate).map_err(|e| format!("gate {i}: {e}"))?;
    }
    Ok(c)
}

/// Host kernels available to graph files.
pub const BUILTIN_KERNELS: [&str; 3] = ["echo", "total_shots", "merge_counts"];

/// Registers the built-in host kernels:
///
/// * `echo` returns its JSON params (or `null`).
/// * `total_shots` sums the shots of its dependencies' histograms.
/// * `merge_counts` adds up its dependencies' histogram counts per outcome.
pub fn register_builtin_kernels(builder: &mut RuntimeBuilder) -> Result<(), RuntimeError> {
    builder.register_host_kernel("echo", |call: &mut HostCall| {
        let params = call.params.as_ref().and_then(|p| p.downcast_ref::<Value>()).cloned();
        Ok(Opaque::new(params.unwrap_or(Value::Null)))
    })?;
    builder.register_host_kernel("total_shots", |call: &mut HostCall| {
        let total: u64 = call.deps.values().filter_map(Payload::histogram).map(|h| h.shots()).sum();
        Ok(Opaque::new(Value::from(total)))
    })?;
    builder.register_host_kernel("merge_counts", |call: &mut HostCall| {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for h in call.deps.values().filter_map(Payload::histogram) {
            for (k, n) in h.counts() {
                *merged.entry(k.clone()).or_insert(0) += n;
            }
        }
        Ok(Opaque::new(Value::from(serde_json::Map::from_iter(merged.into_iter().map(|(k, n)| (k, Value::from(n)))))))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<GraphConfig, FormatError> {
        parse_graph(text, Path::new("/data"))
    }

    #[test]
    fn minimal_graph() {
        let cfg = parse(
            r#"{"seed": 3, "policy": "roundrobin", "devices": {"qpu": 4, "host": 1},
                "tasks": [{"name": "a", "kernel": "bell.ll", "shots": 100},
                          {"name": "b", "kernel": {"type": "host", "name": "total_shots"}, "depends": ["a"]}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.policy, Policy::RoundRobin);
        assert_eq!((cfg.qpu_devices, cfg.host_devices), (4, 1));
        assert_eq!(cfg.graph.seed(), 3);
        let a = &cfg.graph.tasks()[0];
        assert!(matches!(&a.kernel, KernelSpec::Named { name, shots: 100, .. } if name == "/data/bell.ll"));
        assert_eq!(cfg.graph.tasks()[1].deps.iter().copied().collect::<Vec<_>>(), [0]);
    }

    #[test]
    fn unknown_fields_are_named() {
        let err = parse(r#"{"gpu": 2, "tasks": []}"#).unwrap_err().to_string();
        assert!(err.contains("unknown field `gpu`"), "{err}");
        let err = parse(r#"{"devices": {"gpu": 2}, "tasks": []}"#).unwrap_err().to_string();
        assert!(err.contains("unknown field `gpu`"), "{err}");
        let err = parse(r#"{"tasks": [{"name": "a", "kernel": {"type": "host", "name": "echo", "extra": 1}}]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown field `extra`"), "{err}");
    }

    #[test]
    fn circuit_kernel() {
        let cfg = parse(
            r#"{"tasks": [{"name": "c", "device": 0, "kernel": {"type": "circuit", "qubits": 2, "mode": "exact",
                "gates": [{"gate": "h", "qubits": [0]}, {"gate": "cx", "qubits": [0, 1]},
                          {"gate": "rz", "qubits": [1], "angle": 0.5},
                          {"gate": "mz", "qubits": [0], "slot": 0}]}}]}"#,
        )
        .unwrap();
        let t = &cfg.graph.tasks()[0];
        assert_eq!(t.device, DeviceReq::Explicit(0));
        match &t.kernel {
            KernelSpec::Circuit { circuit, mode, .. } => {
                assert_eq!(circuit.ops().len(), 4);
                assert_eq!(*mode, ExecMode::Exact);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_errors() {
        let dup = r#"{"tasks": [{"name": "a", "kernel": "x"}, {"name": "a", "kernel": "y"}]}"#;
        assert!(matches!(parse(dup), Err(FormatError::DuplicateTask(_))));
        let dangling = r#"{"tasks": [{"name": "a", "kernel": "x", "depends": ["zz"]}]}"#;
        assert!(matches!(parse(dangling), Err(FormatError::UnknownDependency { .. })));
        let bad_gate = r#"{"tasks": [{"name": "a", "kernel": {"type": "circuit", "qubits": 1,
            "gates": [{"gate": "cnot", "qubits": [0]}]}}]}"#;
        assert!(matches!(parse(bad_gate), Err(FormatError::Task { .. })));
        assert!(parse(r#"{"policy": "fastest", "tasks": []}"#).is_err());
    }

    #[test]
    fn cycles_parse_and_are_left_to_submit() {
        let cyc = r#"{"tasks": [{"name": "a", "kernel": "x", "depends": ["b"]},
                                {"name": "b", "kernel": "x", "depends": ["a"]}]}"#;
        let cfg = parse(cyc).unwrap();
        assert!(cfg.graph.topological_order().is_err());
    }
}
