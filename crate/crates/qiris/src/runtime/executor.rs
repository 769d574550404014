use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex, MutexGuard, RwLock};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use qiris_core::rng::derive_seed;
use qiris_core::{lower_to_circuit, parse_qir, run_trajectory, sample_shots, simulate, Circuit};

use super::{
    schedule_next, Decision, DeviceClass, DeviceSlot, Dmem, DmemError, ExecMode, KernelKind, KernelSpec, Location,
    MemId, Opaque, Payload, Policy, QirSource, ReadyTask, RrCursor, RuntimeError, TaskGraph, TaskId, TaskResult,
    TaskState, DEPENDENCY_FAILED,
};

/// Host kernel callback. Returning `Err` fails the task with that message.
pub type HostFn = Arc<dyn Fn(&mut HostCall) -> Result<Opaque, String> + Send + Sync>;

/// Everything a host kernel sees of its task.
#[derive(Debug)]
pub struct HostCall {
    pub task: TaskId,
    pub name: String,
    pub params: Option<Opaque>,
    pub seed: u64,
    /// Payloads of the task's dependencies.
    pub deps: BTreeMap<TaskId, Payload>,
    /// Contents of the task's read objects, in declaration order.
    pub inputs: Vec<Vec<u8>>,
    /// Zeroed buffers for the task's write objects; committed to memory when
    /// the kernel succeeds.
    pub outputs: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Device {
    pub id: usize,
    pub class: DeviceClass,
}

impl Device {
    pub fn qpu(id: usize) -> Self {
        Device { id, class: DeviceClass::Qpu }
    }

    pub fn host(id: usize) -> Self {
        Device { id, class: DeviceClass::Host }
    }

    pub fn supports(&self, kind: KernelKind) -> bool {
        kind.class() == self.class
    }
}

#[derive(Default)]
pub struct RuntimeBuilder {
    devices: Vec<Device>,
    kernels: HashMap<String, HostFn>,
}

impl RuntimeBuilder {
    pub fn new() -> Self {
        RuntimeBuilder::default()
    }

    /// `qpu` simulated QPUs with ids `0..qpu`, then `host` host devices.
    pub fn with_devices(qpu: usize, host: usize) -> Self {
        let mut b = RuntimeBuilder::new();
        b.devices.extend((0..qpu).map(Device::qpu));
        b.devices.extend((qpu..qpu + host).map(Device::host));
        b
    }

    pub fn register_device(&mut self, device: Device) -> Result<usize, RuntimeError> {
        if self.devices.iter().any(|d| d.id == device.id) {
            return Err(RuntimeError::DuplicateDevice(device.id));
        }
        self.devices.push(device);
        Ok(device.id)
    }

    pub fn register_host_kernel<F>(&mut self, name: impl Into<String>, f: F) -> Result<(), RuntimeError>
    where
        F: Fn(&mut HostCall) -> Result<Opaque, String> + Send + Sync + 'static,
    {
        insert_kernel(&mut self.kernels, name.into(), Arc::new(f))
    }

    pub fn build(self) -> Runtime {
        let mut devices = self.devices;
        devices.sort_by_key(|d| d.id);
        let shared = Arc::new(Shared {
            running: devices.iter().map(|_| AtomicUsize::new(0)).collect(),
            devices,
            kernels: RwLock::new(self.kernels),
            dmem: Mutex::new(Dmem::new()),
            clock: AtomicU64::new(0),
            double_occupancy: AtomicU64::new(0),
        });

        let (tx, rx) = channel();
        let mut threads = Vec::new();
        let mut workers = Vec::new();
        for pos in 0..shared.devices.len() {
            let (wtx, wrx) = channel();
            workers.push(wtx);
            let (shared, done) = (Arc::clone(&shared), tx.clone());
            threads.push(
                thread::Builder::new()
                    .name(format!("qiris-device-{}", shared.devices[pos].id))
                    .spawn(move || worker(&shared, pos, wrx, done))
                    .expect("spawn device worker"),
            );
        }
        let coordinator = Coordinator {
            busy: vec![false; workers.len()],
            shared: Arc::clone(&shared),
            workers,
            active: Vec::new(),
            dispatched: 0,
            applied: 0,
            held: BTreeMap::new(),
        };
        let coordinator = thread::Builder::new()
            .name("qiris-coordinator".into())
            .spawn(move || coordinator.run(rx))
            .expect("spawn coordinator");
        threads.insert(0, coordinator);
        Runtime { shared, tx, threads }
    }
}

fn insert_kernel(map: &mut HashMap<String, HostFn>, name: String, f: HostFn) -> Result<(), RuntimeError> {
    if map.contains_key(&name) {
        return Err(RuntimeError::DuplicateKernel(name));
    }
    map.insert(name, f);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RuntimeStats {
    pub transfers: u64,
    pub dirty_reads: u64,
    /// Times a device started a task while another was running on it.
    pub double_occupancy: u64,
}

struct Shared {
    devices: Vec<Device>,
    kernels: RwLock<HashMap<String, HostFn>>,
    dmem: Mutex<Dmem>,
    clock: AtomicU64,
    running: Vec<AtomicUsize>,
    double_occupancy: AtomicU64,
}

impl Shared {
    fn dmem(&self) -> MutexGuard<'_, Dmem> {
        self.dmem.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn tick(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::SeqCst)
    }
}

pub struct Runtime {
    shared: Arc<Shared>,
    tx: Sender<Msg>,
    threads: Vec<JoinHandle<()>>,
}

impl Runtime {
    pub fn devices(&self) -> &[Device] {
        &self.shared.devices
    }

    pub fn has_class(&self, class: DeviceClass) -> bool {
        self.shared.devices.iter().any(|d| d.class == class)
    }

    pub fn register_host_kernel<F>(&self, name: impl Into<String>, f: F) -> Result<(), RuntimeError>
    where
        F: Fn(&mut HostCall) -> Result<Opaque, String> + Send + Sync + 'static,
    {
        let mut kernels = self.shared.kernels.write().unwrap_or_else(|e| e.into_inner());
        insert_kernel(&mut kernels, name.into(), Arc::new(f))
    }

    /// Validates `graph` and hands it to the coordinator. A cyclic graph is
    /// rejected before any task changes state. With `sync` the call returns
    /// once every task is terminal.
    pub fn submit(&self, graph: TaskGraph, policy: Policy, sync: bool) -> Result<GraphHandle, RuntimeError> {
        graph.topological_order()?;
        let n = graph.len();
        let run = Arc::new(Run {
            graph: Arc::new(graph),
            state: Mutex::new(RunState { states: vec![TaskState::Submitted; n], results: vec![None; n], remaining: n }),
            done: Condvar::new(),
        });
        if n > 0 {
            self.tx.send(Msg::Submit(Arc::clone(&run), policy)).expect("coordinator is running");
        }
        let handle = GraphHandle { run };
        if sync {
            handle.wait();
        }
        Ok(handle)
    }

    pub fn dmem_create(&self, size: usize) -> MemId {
        self.shared.dmem().create(size)
    }

    pub fn dmem_write_host(&self, id: MemId, data: &[u8]) -> Result<(), DmemError> {
        self.shared.dmem().write_host(id, data)
    }

    pub fn dmem_read_host(&self, id: MemId) -> Result<Vec<u8>, DmemError> {
        self.shared.dmem().read_host(id)
    }

    pub fn dmem_free(&self, id: MemId) -> Result<(), DmemError> {
        self.shared.dmem().free(id)
    }

    pub fn dmem_is_clean(&self, id: MemId, loc: Location) -> Result<bool, DmemError> {
        self.shared.dmem().is_clean(id, loc)
    }

    pub fn stats(&self) -> RuntimeStats {
        let dmem = self.shared.dmem();
        RuntimeStats {
            transfers: dmem.transfers(),
            dirty_reads: dmem.dirty_reads(),
            double_occupancy: self.shared.double_occupancy.load(Ordering::SeqCst),
        }
    }
}

impl Drop for Runtime {
    fn drop(&mut self) {
        let _ = self.tx.send(Msg::Shutdown);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

struct Run {
    graph: Arc<TaskGraph>,
    state: Mutex<RunState>,
    done: Condvar,
}

impl Run {
    fn lock(&self) -> MutexGuard<'_, RunState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

struct RunState {
    states: Vec<TaskState>,
    results: Vec<Option<TaskResult>>,
    remaining: usize,
}

impl RunState {
    fn finished(&self) -> BTreeMap<TaskId, TaskResult> {
        self.results.iter().enumerate().filter_map(|(i, r)| r.clone().map(|r| (i, r))).collect()
    }
}

/// Task states and the results of tasks that are already terminal.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub states: Vec<TaskState>,
    pub results: BTreeMap<TaskId, TaskResult>,
}

/// Submission handle of one graph.
#[derive(Clone)]
pub struct GraphHandle {
    run: Arc<Run>,
}

impl GraphHandle {
    pub fn graph(&self) -> &TaskGraph {
        &self.run.graph
    }

    /// Blocks until every task is terminal and returns all results.
    pub fn wait(&self) -> BTreeMap<TaskId, TaskResult> {
        let mut st = self.run.lock();
        while st.remaining > 0 {
            st = self.run.done.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        st.finished()
    }

    /// Like [`Self::wait`], but gives up after `timeout` and returns what is
    /// known so far.
    pub fn wait_timeout(&self, timeout: Duration) -> Result<BTreeMap<TaskId, TaskResult>, Snapshot> {
        let deadline = Instant::now() + timeout;
        let mut st = self.run.lock();
        while st.remaining > 0 {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(Snapshot { states: st.states.clone(), results: st.finished() });
            }
            st = self.run.done.wait_timeout(st, left).unwrap_or_else(|e| e.into_inner()).0;
        }
        Ok(st.finished())
    }

    pub fn snapshot(&self) -> Snapshot {
        let st = self.run.lock();
        Snapshot { states: st.states.clone(), results: st.finished() }
    }

    pub fn is_done(&self) -> bool {
        self.run.lock().remaining == 0
    }
}

enum Msg {
    Submit(Arc<Run>, Policy),
    Done { seq: u64, run: Arc<Run>, task: TaskId, device_pos: usize, result: TaskResult },
    Shutdown,
}

struct Job {
    seq: u64,
    run: Arc<Run>,
    task: TaskId,
    seed: u64,
    deps: BTreeMap<TaskId, Payload>,
}

/// Scheduling state of one submitted graph.
struct Active {
    run: Arc<Run>,
    policy: Policy,
    pending: Vec<usize>,
    dependents: Vec<Vec<TaskId>>,
    ready: VecDeque<TaskId>,
    cursor: RrCursor,
}

/// Completions are applied in dispatch order, holding back any that arrive
/// early. Every scheduling decision then depends only on the graphs and
/// policies, never on thread timing.
struct Coordinator {
    shared: Arc<Shared>,
    workers: Vec<Sender<Job>>,
    busy: Vec<bool>,
    active: Vec<Active>,
    dispatched: u64,
    applied: u64,
    held: BTreeMap<u64, Completion>,
}

struct Completion {
    run: Arc<Run>,
    task: TaskId,
    device_pos: usize,
    result: TaskResult,
}

impl Coordinator {
    fn run(mut self, rx: Receiver<Msg>) {
        while let Ok(msg) = rx.recv() {
            match msg {
                Msg::Submit(run, policy) => {
                    self.admit(run, policy);
                    self.dispatch();
                }
                Msg::Done { seq, run, task, device_pos, result } => {
                    self.held.insert(seq, Completion { run, task, device_pos, result });
                    while let Some(c) = self.held.remove(&self.applied) {
                        self.applied += 1;
                        self.busy[c.device_pos] = false;
                        self.finish(&c.run, c.task, c.result);
                        self.dispatch();
                    }
                }
                Msg::Shutdown => break,
            }
        }
        for a in std::mem::take(&mut self.active) {
            let mut st = a.run.lock();
            for id in 0..st.states.len() {
                if !st.states[id].is_terminal() {
                    st.states[id] = TaskState::Failed;
                    st.results[id] = Some(TaskResult::failed("runtime shut down", 0));
                }
            }
            st.remaining = 0;
            a.run.done.notify_all();
        }
    }

    fn admit(&mut self, run: Arc<Run>, policy: Policy) {
        let graph = &run.graph;
        let pending: Vec<usize> = graph.tasks().iter().map(|t| t.deps.len()).collect();
        let ready: VecDeque<TaskId> = (0..graph.len()).filter(|&i| pending[i] == 0).collect();
        {
            let mut st = run.lock();
            for &id in &ready {
                st.states[id] = TaskState::Ready;
            }
        }
        self.active.push(Active {
            dependents: graph.dependents(),
            run: Arc::clone(&run),
            policy,
            pending,
            ready,
            cursor: RrCursor::default(),
        });
    }

    fn finish(&mut self, run: &Arc<Run>, task: TaskId, result: TaskResult) {
        let Some(pos) = self.active.iter().position(|a| Arc::ptr_eq(&a.run, run)) else {
            return;
        };
        let a = &mut self.active[pos];
        let mut st = a.run.lock();
        let ok = result.state == TaskState::Completed;
        st.states[task] = result.state;
        st.results[task] = Some(result);
        st.remaining -= 1;

        if ok {
            for &next in &a.dependents[task] {
                a.pending[next] -= 1;
                if a.pending[next] == 0 && st.states[next] == TaskState::Submitted {
                    st.states[next] = TaskState::Ready;
                    a.ready.push_back(next);
                }
            }
        } else {
            let mut stack = a.dependents[task].clone();
            while let Some(next) = stack.pop() {
                if st.states[next].is_terminal() {
                    continue;
                }
                st.states[next] = TaskState::Failed;
                st.results[next] = Some(TaskResult::failed(DEPENDENCY_FAILED, task_seed(&a.run.graph, next)));
                st.remaining -= 1;
                stack.extend(&a.dependents[next]);
            }
        }

        if st.remaining == 0 {
            a.run.done.notify_all();
            drop(st);
            self.active.remove(pos);
        }
    }

    fn dispatch(&mut self) {
        let mut failures = Vec::new();
        for a in &mut self.active {
            if a.ready.is_empty() {
                continue;
            }
            let graph = &a.run.graph;
            let ready: Vec<ReadyTask> = a
                .ready
                .iter()
                .map(|&id| {
                    let t = &graph.tasks()[id];
                    ReadyTask { id, class: t.kernel.kind().class(), req: t.device }
                })
                .collect();
            let slots: Vec<DeviceSlot> = self
                .shared
                .devices
                .iter()
                .zip(&self.busy)
                .map(|(d, &busy)| DeviceSlot { id: d.id, class: d.class, idle: !busy })
                .collect();

            for decision in schedule_next(&ready, &slots, a.policy, &mut a.cursor) {
                match decision {
                    Decision::Assign { task, device } => {
                        a.ready.retain(|&t| t != task);
                        let pos = self.shared.devices.iter().position(|d| d.id == device).expect("known device");
                        self.busy[pos] = true;
                        let deps = {
                            let st = a.run.lock();
                            graph.tasks()[task]
                                .deps
                                .iter()
                                .filter_map(|&d| st.results[d].as_ref().and_then(|r| r.payload.clone()).map(|p| (d, p)))
                                .collect()
                        };
                        let seq = self.dispatched;
                        self.dispatched += 1;
                        let job = Job { seq, run: Arc::clone(&a.run), task, seed: task_seed(graph, task), deps };
                        self.workers[pos].send(job).expect("device worker is running");
                    }
                    Decision::Fail { task, reason } => {
                        a.ready.retain(|&t| t != task);
                        failures.push((Arc::clone(&a.run), task, reason));
                    }
                }
            }
        }
        for (run, task, reason) in failures {
            let seed = task_seed(&run.graph, task);
            self.finish(&run, task, TaskResult::failed(reason, seed));
        }
    }
}

fn task_seed(graph: &TaskGraph, task: TaskId) -> u64 {
    graph.tasks()[task].kernel.seed().unwrap_or_else(|| derive_seed(graph.seed(), task as u64))
}

fn worker(shared: &Shared, pos: usize, jobs: Receiver<Job>, done: Sender<Msg>) {
    let device = shared.devices[pos];
    for job in jobs {
        if shared.running[pos].fetch_add(1, Ordering::SeqCst) > 0 {
            shared.double_occupancy.fetch_add(1, Ordering::SeqCst);
        }
        let started = shared.tick();
        job.run.lock().states[job.task] = TaskState::Running;

        let mut transfers = 0;
        let outcome = execute(shared, device, &job, &mut transfers);

        shared.running[pos].fetch_sub(1, Ordering::SeqCst);
        let completed = shared.tick();
        let (state, payload, error) = match outcome {
            Ok(p) => (TaskState::Completed, Some(p), None),
            Err(e) => (TaskState::Failed, None, Some(e)),
        };
        let result = TaskResult {
            state,
            payload,
            error,
            device: Some(device.id),
            transfer_count: transfers,
            seed: job.seed,
            started_at: Some(started),
            completed_at: Some(completed),
        };
        if done.send(Msg::Done { seq: job.seq, run: job.run, task: job.task, device_pos: pos, result }).is_err() {
            break;
        }
    }
}

fn execute(shared: &Shared, device: Device, job: &Job, transfers: &mut u64) -> Result<Payload, String> {
    let task = &job.run.graph.tasks()[job.task];
    let loc = Location::Device(device.id);
    let (inputs, outputs) = {
        let mut dmem = shared.dmem();
        let mut inputs = Vec::with_capacity(task.reads.len());
        for &m in &task.reads {
            let (data, moved) = dmem.read(m, loc).map_err(|e| e.to_string())?;
            *transfers += u64::from(moved);
            inputs.push(data);
        }
        let mut outputs = Vec::with_capacity(task.writes.len());
        for &m in &task.writes {
            outputs.push(vec![0; dmem.size(m).map_err(|e| e.to_string())?]);
        }
        (inputs, outputs)
    };

    let host = |name: &str, params: &Option<Opaque>| {
        let mut call = HostCall {
            task: job.task,
            name: task.name.clone(),
            params: params.clone(),
            seed: job.seed,
            deps: job.deps.clone(),
            inputs: inputs.clone(),
            outputs: outputs.clone(),
        };
        let value = run_host(shared, name, &mut call)?;
        let mut dmem = shared.dmem();
        for (&m, data) in task.writes.iter().zip(&call.outputs) {
            dmem.write(m, loc, data).map_err(|e| e.to_string())?;
        }
        Ok(Payload::Host(value))
    };

    match &task.kernel {
        KernelSpec::Host { name, params } => host(name, params),
        KernelSpec::Named { name, shots, mode } if task.kernel.kind() == KernelKind::Qir => {
            run_qir(&QirSource::Path(name.into()), *shots, job.seed, *mode)
        }
        KernelSpec::Named { name, .. } => host(name, &None),
        KernelSpec::Qir { source, shots, mode, .. } => run_qir(source, *shots, job.seed, *mode),
        KernelSpec::Circuit { circuit, output_order, shots, mode, .. } => {
            run_circuit(circuit, output_order.as_deref(), *shots, job.seed, *mode)
        }
    }
}

fn run_host(shared: &Shared, name: &str, call: &mut HostCall) -> Result<Opaque, String> {
    let f = {
        let kernels = shared.kernels.read().unwrap_or_else(|e| e.into_inner());
        kernels.get(name).cloned().ok_or_else(|| format!("unknown-kernel: no host kernel named `{name}`"))?
    };
    catch_unwind(AssertUnwindSafe(|| f(call))).unwrap_or_else(|_| Err(format!("host kernel `{name}` panicked")))
}

fn run_qir(source: &QirSource, shots: u64, seed: u64, mode: ExecMode) -> Result<Payload, String> {
    let text = match source {
        QirSource::Text(t) => t.clone(),
        QirSource::Path(p) => fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?,
    };
    let prog = parse_qir(&text).map_err(|e| e.to_string())?;
    let lowered = lower_to_circuit(&prog).map_err(|e| e.to_string())?;
    run_circuit(&lowered.circuit, Some(&lowered.output_order), shots, seed, mode)
}

/// Runs a circuit on the statevector simulator. A non-empty `order` selects
/// and orders the reported result slots.
pub(crate) fn run_circuit(
    circuit: &Circuit,
    order: Option<&[usize]>,
    shots: u64,
    seed: u64,
    mode: ExecMode,
) -> Result<Payload, String> {
    let order = order.filter(|o| !o.is_empty());
    let err = |e: qiris_core::SimError| e.to_string();
    let trajectory = mode == ExecMode::Trajectory || !circuit.has_terminal_measurements();
    if mode != ExecMode::Exact && trajectory {
        let hist = run_trajectory(circuit, shots, seed).map_err(err)?;
        let hist = match order {
            Some(o) => hist.select_slots(o).map_err(err)?,
            None => hist,
        };
        return Ok(Payload::Histogram(hist));
    }
    let (_, dist) = simulate(circuit).map_err(err)?;
    let dist = match order {
        Some(o) => dist.select_slots(o).map_err(err)?,
        None => dist,
    };
    Ok(match mode {
        ExecMode::Exact => Payload::Distribution(dist),
        _ => Payload::Histogram(sample_shots(&dist, shots, seed)),
    })
}
