//! Discrete-event simulation of NFC computation offloading.
//!
//! Two phones exchange data over host card emulation: one acts as a card
//! reader, the other as an emulated card, and they swap roles to send data
//! both ways. The crate models the APDU link, the role-switching protocols,
//! chunked message transfer, the offloaded workloads and the time and
//! energy they cost.

pub mod error;
pub mod rng;
pub mod roleswitch;
pub mod runtime;
pub mod sim;
pub mod time;
pub mod transfer;
pub mod workloads;

pub use error::{ApduError, LinkError, ProtocolError, RuntimeError, SimError, StorageError, WorkloadError};
pub use roleswitch::{
    Outcome, ProtocolConfig, ProtocolVariant, ReadinessModel, Simulation, SwitchHardware, TransferReport,
};
pub use runtime::{DeviceProfile, Interval, PowerState, TaskOutcome, TimingModel};
pub use sim::{ApduCommand, ApduResponse, DeviceId, LinkConfig, LinkSim, SimClock};
pub use time::{SimDuration, SimTime};
pub use transfer::{ChunkIndex, MessageStorage};
pub use workloads::{CostModel, Task, Workload};
