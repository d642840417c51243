use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ProtocolError, RuntimeError};
use crate::roleswitch::{converse, Leg, Outcome, ProtocolConfig, Simulation, MAIN, OFFLOADEE};
use crate::time::{SimDuration, SimTime};
use crate::transfer::assemble;
use crate::workloads::{CostModel, Task};

use super::{energy_of_trace, DeviceProfile, Interval, PowerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionMode {
    Local,
    Offloaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub result: Vec<u8>,
    pub wall_time: SimDuration,
    /// Millijoules.
    pub main_device_energy: f64,
    /// Millijoules; zero for local runs.
    pub offloadee_energy: f64,
    pub mode: ExecutionMode,
    pub trace: Vec<Interval>,
    pub switch_count: u32,
}

impl TaskOutcome {
    pub fn wall_time_ms(&self) -> f64 {
        self.wall_time.as_millis_f64()
    }
}

fn compute_time(task: &Task, device: &DeviceProfile) -> SimDuration {
    SimDuration::from_millis_f64(task.base_cost.as_millis_f64() / device.speed_factor)
}

fn run_local(device: &DeviceProfile, task: &Task, chunks: Vec<Vec<u8>>) -> Result<TaskOutcome, RuntimeError> {
    device.validate()?;
    task.workload.verify(&chunks)?;
    let wall_time = compute_time(task, device);
    let trace: Vec<Interval> = (wall_time > SimDuration::ZERO)
        .then(|| Interval {
            device: MAIN,
            state: PowerState::Compute,
            start: SimTime::ZERO,
            end: SimTime::ZERO + wall_time,
        })
        .into_iter()
        .collect();
    Ok(TaskOutcome {
        result: assemble(&chunks),
        wall_time,
        main_device_energy: energy_of_trace(&trace, device)?,
        offloadee_energy: 0.0,
        mode: ExecutionMode::Local,
        trace,
        switch_count: 0,
    })
}

/// Runs `task` on `device` alone.
pub fn execute_local(device: &DeviceProfile, task: &Task) -> Result<TaskOutcome, RuntimeError> {
    let chunks = task.workload.execute()?;
    run_local(device, task, chunks)
}

/// Like [`execute_local`], with the workload result computed beforehand.
pub fn execute_local_with(device: &DeviceProfile, task: &Task, result: Vec<Vec<u8>>) -> Result<TaskOutcome, RuntimeError> {
    run_local(device, task, result)
}

fn run_offload(
    main: &DeviceProfile,
    offloadee: &DeviceProfile,
    task: &Task,
    protocol: &ProtocolConfig,
    sim: &Simulation,
    precomputed: Option<Vec<Vec<u8>>>,
) -> Result<TaskOutcome, RuntimeError> {
    main.validate()?;
    offloadee.validate()?;
    let work = compute_time(task, offloadee);
    let mut precomputed = precomputed;
    let mut result = None;
    let input = Leg::message(task.workload.serialize(), SimDuration::ZERO, false);
    let conversation = converse(protocol, sim, input, |leg, chunks| {
        if leg == 0 {
            let workload = crate::workloads::Workload::deserialize(&assemble(&chunks))?;
            let out = match precomputed.take() {
                Some(out) => out,
                None => workload.execute()?,
            };
            Ok(Some(Leg::chunks(out, work, true)))
        } else {
            result = Some(chunks);
            Ok(None)
        }
    })?;
    if let Outcome::FailedAtSwitch(k) = conversation.outcome {
        return Err(RuntimeError::FailedAtSwitch(k));
    }
    let chunks = result.ok_or(RuntimeError::Protocol(ProtocolError::EmptyPayload))?;
    task.workload.verify(&chunks)?;
    Ok(TaskOutcome {
        result: assemble(&chunks),
        wall_time: conversation.end.since(SimTime::ZERO),
        main_device_energy: energy_of_trace(&conversation.intervals_of(MAIN), main)?,
        offloadee_energy: energy_of_trace(&conversation.intervals_of(OFFLOADEE), offloadee)?,
        mode: ExecutionMode::Offloaded,
        trace: conversation.intervals,
        switch_count: conversation.switch_count,
    })
}

/// Sends `task` to `offloadee`, which computes it and returns the result over
/// the configured role-switching protocol.
pub fn offload_task(
    main: &DeviceProfile,
    offloadee: &DeviceProfile,
    task: &Task,
    protocol: &ProtocolConfig,
    sim: &Simulation,
) -> Result<TaskOutcome, RuntimeError> {
    run_offload(main, offloadee, task, protocol, sim, None)
}

/// Like [`offload_task`], with the offloadee's result computed beforehand.
pub fn offload_task_with(
    main: &DeviceProfile,
    offloadee: &DeviceProfile,
    task: &Task,
    protocol: &ProtocolConfig,
    sim: &Simulation,
    result: Vec<Vec<u8>>,
) -> Result<TaskOutcome, RuntimeError> {
    run_offload(main, offloadee, task, protocol, sim, Some(result))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub size: u32,
    pub local_time_ms: f64,
    pub offloadee_local_time_ms: f64,
    pub offload_time_ms: f64,
    pub local_energy_mj: f64,
    pub offload_energy_mj: f64,
    /// Local energy over offloaded main-device energy.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverTable {
    pub rows: Vec<CrossoverRow>,
    /// Smallest size at which offloading costs the main device less energy.
    pub crossover: Option<u32>,
}

/// N Queens tasks for each board size.
pub fn nqueens_family(sizes: impl IntoIterator<Item = u8>, cost: &CostModel) -> Result<Vec<(u32, Task)>, RuntimeError> {
    sizes
        .into_iter()
        .map(|n| Ok((n as u32, Task::nqueens(n, cost)?)))
        .collect()
}

/// Local-versus-offloaded time and energy for every `(size, task)`. Sizes are
/// evaluated independently and in parallel; rows keep the input order.
pub fn crossover_analysis(
    main: &DeviceProfile,
    offloadee: &DeviceProfile,
    family: &[(u32, Task)],
    protocol: &ProtocolConfig,
    sim: &Simulation,
) -> Result<CrossoverTable, RuntimeError> {
    let rows = family
        .par_iter()
        .map(|(size, task)| {
            let chunks = task.workload.execute()?;
            let local = run_local(main, task, chunks.clone())?;
            let remote_local = run_local(offloadee, task, chunks.clone())?;
            let offloaded = run_offload(main, offloadee, task, protocol, sim, Some(chunks))?;
            let ratio = if offloaded.main_device_energy > 0.0 {
                local.main_device_energy / offloaded.main_device_energy
            } else {
                f64::INFINITY
            };
            Ok(CrossoverRow {
                size: *size,
                local_time_ms: local.wall_time_ms(),
                offloadee_local_time_ms: remote_local.wall_time_ms(),
                offload_time_ms: offloaded.wall_time_ms(),
                local_energy_mj: local.main_device_energy,
                offload_energy_mj: offloaded.main_device_energy,
                ratio,
            })
        })
        .collect::<Result<Vec<_>, RuntimeError>>()?;
    let crossover = rows
        .iter()
        .filter(|r| r.offload_energy_mj < r.local_energy_mj)
        .map(|r| r.size)
        .min();
    Ok(CrossoverTable { rows, crossover })
}
