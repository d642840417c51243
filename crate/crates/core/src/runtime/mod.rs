//! Device models, local and offloaded task execution, and the timing and
//! energy accounting around them.

mod device;
mod energy;
mod metrics;
mod offload;
mod timing;

pub use device::DeviceProfile;
pub use energy::{energy_of_trace, Interval, PowerState};
pub use metrics::{bandwidth_kbps, t_round_trip, t_switching_avg};
pub use offload::{
    crossover_analysis, execute_local, execute_local_with, nqueens_family, offload_task, offload_task_with, CrossoverRow,
    CrossoverTable, ExecutionMode, TaskOutcome,
};
pub use timing::TimingModel;
