use std::any::Any;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use qiris_core::{Circuit, ProbDist, ShotHistogram};

pub type TaskId = usize;

/// Shared, type-erased value passed to and returned from host kernels.
#[derive(Clone)]
pub struct Opaque(Arc<dyn Any + Send + Sync>);

impl Opaque {
    pub fn new<T: Any + Send + Sync>(value: T) -> Self {
        Opaque(Arc::new(value))
    }

    pub fn downcast_ref<T: Any>(&self) -> Option<&T> {
        self.0.downcast_ref()
    }
}

impl fmt::Debug for Opaque {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Opaque(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceClass {
    Host,
    Qpu,
}

impl DeviceClass {
    pub fn name(self) -> &'static str {
        match self {
            DeviceClass::Host => "host",
            DeviceClass::Qpu => "qpu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceReq {
    Any,
    Class(DeviceClass),
    Explicit(usize),
}

/// How a quantum kernel turns its circuit into a payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Exact outcome distribution; shots are ignored.
    Exact,
    /// Multinomial sample of the exact distribution, or shot-by-shot
    /// trajectories when a measurement is not terminal.
    Sampled,
    /// Always shot-by-shot trajectories.
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QirSource {
    Text(String),
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Host,
    Qir,
    Circuit,
}

impl KernelKind {
    pub fn class(self) -> DeviceClass {
        match self {
            KernelKind::Host => DeviceClass::Host,
            KernelKind::Qir | KernelKind::Circuit => DeviceClass::Qpu,
        }
    }
}

#[derive(Debug, Clone)]
pub enum KernelSpec {
    Host {
        name: String,
        params: Option<Opaque>,
    },
    Qir {
        source: QirSource,
        shots: u64,
        seed: Option<u64>,
        mode: ExecMode,
    },
    Circuit {
        circuit: Circuit,
        output_order: Option<Vec<usize>>,
        shots: u64,
        seed: Option<u64>,
        mode: ExecMode,
    },
    /// Bound when the task is dispatched: names ending in `.ll` are QIR
    /// files run with `shots` and `mode`, anything else a registered host
    /// kernel.
    Named {
        name: String,
        shots: u64,
        mode: ExecMode,
    },
}

impl KernelSpec {
    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Host { .. } => KernelKind::Host,
            KernelSpec::Qir { .. } => KernelKind::Qir,
            KernelSpec::Circuit { .. } => KernelKind::Circuit,
            KernelSpec::Named { name, .. } if name.ends_with(".ll") => KernelKind::Qir,
            KernelSpec::Named { .. } => KernelKind::Host,
        }
    }

    /// Seed fixed by the kernel itself, overriding the derived task seed.
    pub fn seed(&self) -> Option<u64> {
        match self {
            KernelSpec::Qir { seed, .. } | KernelSpec::Circuit { seed, .. } => *seed,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskState {
    Created,
    Submitted,
    Ready,
    Running,
    Completed,
    Failed,
}

impl TaskState {
    pub fn is_terminal(self) -> bool {
        matches!(self, TaskState::Completed | TaskState::Failed)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskState::Created => "created",
            TaskState::Submitted => "submitted",
            TaskState::Ready => "ready",
            TaskState::Running => "running",
            TaskState::Completed => "completed",
            TaskState::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    Histogram(ShotHistogram),
    Distribution(ProbDist),
    Host(Opaque),
}

impl Payload {
    pub fn histogram(&self) -> Option<&ShotHistogram> {
        match self {
            Payload::Histogram(h) => Some(h),
            _ => None,
        }
    }

    pub fn distribution(&self) -> Option<&ProbDist> {
        match self {
            Payload::Distribution(d) => Some(d),
            _ => None,
        }
    }

    pub fn host<T: Any>(&self) -> Option<&T> {
        match self {
            Payload::Host(v) => v.downcast_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskResult {
    /// `Completed` or `Failed`.
    pub state: TaskState,
    pub payload: Option<Payload>,
    pub error: Option<String>,
    /// Device that ran the task; `None` if it never ran.
    pub device: Option<usize>,
    /// Memory transfers performed for this task's reads.
    pub transfer_count: u64,
    pub seed: u64,
    /// Runtime-wide logical clock readings.
    pub started_at: Option<u64>,
    pub completed_at: Option<u64>,
}

impl TaskResult {
    pub(crate) fn failed(error: impl Into<String>, seed: u64) -> Self {
        TaskResult {
            state: TaskState::Failed,
            payload: None,
            error: Some(error.into()),
            device: None,
            transfer_count: 0,
            seed,
            started_at: None,
            completed_at: None,
        }
    }
}
