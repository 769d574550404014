use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::{DeviceClass, DeviceReq, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Lowest-id capable idle device.
    #[default]
    Default,
    /// Capable devices in turn, one cursor per device class. A task whose
    /// turn device is busy waits for it, which keeps the rotation exact.
    RoundRobin,
    /// Like `Default`; exists so graphs can state that their `Explicit`
    /// placements are intentional.
    Explicit,
}

impl Policy {
    pub const NAMES: [&'static str; 3] = ["default", "roundrobin", "explicit"];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Default => "default",
            Policy::RoundRobin => "roundrobin",
            Policy::Explicit => "explicit",
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(Policy::Default),
            "roundrobin" => Ok(Policy::RoundRobin),
            "explicit" => Ok(Policy::Explicit),
            _ => Err(format!("unknown policy `{s}` (expected one of: {})", Policy::NAMES.join(", "))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadyTask {
    pub id: TaskId,
    /// Class the task's kernel runs on.
    pub class: DeviceClass,
    pub req: DeviceReq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceSlot {
    pub id: usize,
    pub class: DeviceClass,
    pub idle: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Assign { task: TaskId, device: usize },
    Fail { task: TaskId, reason: String },
}

/// Round-robin position per device class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RrCursor {
    next: BTreeMap<DeviceClass, usize>,
}

impl RrCursor {
    pub fn position(&self, class: DeviceClass) -> usize {
        self.next.get(&class).copied().unwrap_or(0)
    }
}

/// Places ready tasks, in the given order, onto idle devices.
///
/// Tasks that cannot be placed now stay queued (they are absent from the
/// result). A task no registered device could ever run is failed with a
/// `no-capable-device` reason. `Explicit(id)` requirements are honored under
/// every policy.
pub fn schedule_next(
    ready: &[ReadyTask],
    devices: &[DeviceSlot],
    policy: Policy,
    cursor: &mut RrCursor,
) -> Vec<Decision> {
    let mut devices: Vec<DeviceSlot> = devices.to_vec();
    devices.sort_by_key(|d| d.id);
    let mut waiting: BTreeSet<DeviceClass> = BTreeSet::new();
    let mut out = Vec::new();

    for task in ready {
        let capable: Vec<usize> = devices
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                d.class == task.class
                    && match task.req {
                        DeviceReq::Any => true,
                        DeviceReq::Class(c) => c == d.class,
                        DeviceReq::Explicit(id) => id == d.id,
                    }
            })
            .map(|(i, _)| i)
            .collect();
        if capable.is_empty() {
            out.push(Decision::Fail { task: task.id, reason: no_capable_device(task) });
            continue;
        }

        let pick = match (policy, task.req) {
            (Policy::RoundRobin, DeviceReq::Any | DeviceReq::Class(_)) => {
                if waiting.contains(&task.class) {
                    None
                } else {
                    let turn = capable[cursor.position(task.class) % capable.len()];
                    if devices[turn].idle {
                        *cursor.next.entry(task.class).or_insert(0) += 1;
                        Some(turn)
                    } else {
                        waiting.insert(task.class);
                        None
                    }
                }
            }
            _ => capable.iter().copied().find(|&i| devices[i].idle),
        };
        if let Some(i) = pick {
            devices[i].idle = false;
            out.push(Decision::Assign { task: task.id, device: devices[i].id });
        }
    }
    out
}

fn no_capable_device(task: &ReadyTask) -> String {
    match task.req {
        DeviceReq::Explicit(id) => format!("no-capable-device: device {id} cannot run {} kernels", task.class.name()),
        DeviceReq::Class(c) if c != task.class => {
            format!("no-capable-device: {} kernel requested on a {} device", task.class.name(), c.name())
        }
        _ => format!("no-capable-device: no {} device registered", task.class.name()),
    }
}
