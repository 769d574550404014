use std::collections::{BTreeSet, VecDeque};

use super::{DeviceReq, KernelSpec, MemId, RuntimeError, TaskId};

#[derive(Debug, Clone)]
pub struct TaskDef {
    pub name: String,
    pub kernel: KernelSpec,
    pub deps: BTreeSet<TaskId>,
    pub device: DeviceReq,
    /// Memory objects copied to the executing device before the task runs.
    pub reads: Vec<MemId>,
    /// Memory objects the task overwrites; host kernels fill them in.
    pub writes: Vec<MemId>,
}

/// Tasks and their dependency edges. Ids are dense, in creation order.
#[derive(Debug, Clone, Default)]
pub struct TaskGraph {
    seed: u64,
    tasks: Vec<TaskDef>,
}

impl TaskGraph {
    pub fn new(seed: u64) -> Self {
        TaskGraph { seed, tasks: Vec::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn create_task(
        &mut self,
        name: impl Into<String>,
        kernel: KernelSpec,
        deps: &[TaskId],
        device: DeviceReq,
    ) -> Result<TaskId, RuntimeError> {
        let id = self.tasks.len();
        if let Some(&dep) = deps.iter().find(|&&d| d >= id) {
            return Err(RuntimeError::UnknownDependency { task: id, dep });
        }
        self.tasks.push(TaskDef {
            name: name.into(),
            kernel,
            deps: deps.iter().copied().collect(),
            device,
            reads: Vec::new(),
            writes: Vec::new(),
        });
        Ok(id)
    }

    /// Adds the edge `dep -> task` between existing tasks. Cycles are
    /// accepted here and rejected by [`Self::topological_order`].
    pub fn add_dependency(&mut self, task: TaskId, dep: TaskId) -> Result<(), RuntimeError> {
        if dep >= self.tasks.len() {
            return Err(RuntimeError::UnknownDependency { task, dep });
        }
        self.task_mut(task)?.deps.insert(dep);
        Ok(())
    }

    pub fn set_memory(&mut self, task: TaskId, reads: Vec<MemId>, writes: Vec<MemId>) -> Result<(), RuntimeError> {
        let t = self.task_mut(task)?;
        t.reads = reads;
        t.writes = writes;
        Ok(())
    }

    pub fn tasks(&self) -> &[TaskDef] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> Option<&TaskDef> {
        self.tasks.get(id)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<TaskId> {
        self.tasks.iter().position(|t| t.name == name)
    }

    /// Direct dependents of every task.
    pub fn dependents(&self) -> Vec<Vec<TaskId>> {
        let mut out = vec![Vec::new(); self.tasks.len()];
        for (id, t) in self.tasks.iter().enumerate() {
            for &d in &t.deps {
                out[d].push(id);
            }
        }
        out
    }

    /// Kahn order, lowest id first among ready tasks.
    pub fn topological_order(&self) -> Result<Vec<TaskId>, RuntimeError> {
        let dependents = self.dependents();
        let mut pending: Vec<usize> = self.tasks.iter().map(|t| t.deps.len()).collect();
        let mut queue: VecDeque<TaskId> = (0..self.tasks.len()).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(id) = queue.pop_front() {
            order.push(id);
            for &next in &dependents[id] {
                pending[next] -= 1;
                if pending[next] == 0 {
                    queue.push_back(next);
                }
            }
        }
        let Some(mut at) = pending.iter().position(|&p| p > 0) else {
            return Ok(order);
        };
        // every unresolved task waits on another unresolved one; walking
        // those edges must revisit a task on the cycle
        let mut seen = BTreeSet::new();
        while seen.insert(at) {
            at = *self.tasks[at].deps.iter().find(|&&d| pending[d] > 0).expect("unresolved dependency");
        }
        Err(RuntimeError::Cycle(self.tasks[at].name.clone()))
    }

    fn task_mut(&mut self, id: TaskId) -> Result<&mut TaskDef, RuntimeError> {
        self.tasks.get_mut(id).ok_or(RuntimeError::UnknownTask(id))
    }
}
