//! Task runtime: dependency graphs of classical and quantum tasks executed
//! on in-process devices.
//!
//! A single coordinator thread owns every state transition. Each device runs
//! its own worker thread and executes one task at a time; completions flow
//! back to the coordinator, which promotes dependents and dispatches work
//! through the [`schedule_next`] policy function.

mod dmem;
mod executor;
mod graph;
mod scheduler;
mod task;

use thiserror::Error;

pub use dmem::{Dmem, DmemError, Location, MemId};
pub(crate) use executor::run_circuit;
pub use executor::{Device, GraphHandle, HostCall, HostFn, Runtime, RuntimeBuilder, RuntimeStats, Snapshot};
pub use graph::{TaskDef, TaskGraph};
pub use scheduler::{schedule_next, Decision, DeviceSlot, Policy, ReadyTask, RrCursor};
pub use task::{
    DeviceClass, DeviceReq, ExecMode, KernelKind, KernelSpec, Opaque, Payload, QirSource, TaskId, TaskResult, TaskState,
};

/// Error of a task that did not run because a dependency failed.
pub const DEPENDENCY_FAILED: &str = "dependency-failed";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("device id {0} is already registered")]
    DuplicateDevice(usize),
    #[error("host kernel `{0}` is already registered")]
    DuplicateKernel(String),
    #[error("task {task} depends on unknown task {dep}")]
    UnknownDependency { task: TaskId, dep: TaskId },
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("dependency cycle through task `{0}`")]
    Cycle(String),
    #[error("no qpu device is registered")]
    NoQpuDevice,
    #[error(transparent)]
    Dmem(#[from] DmemError),
}
