use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;
use crate::sim::LinkConfig;
use crate::time::SimDuration;

use super::ReadinessModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolVariant {
    TwoTap,
    HceOneTap,
    DisablingEnabling,
    EnablingDisabling,
}

impl ProtocolVariant {
    pub const ALL: [ProtocolVariant; 4] = [
        ProtocolVariant::TwoTap,
        ProtocolVariant::HceOneTap,
        ProtocolVariant::DisablingEnabling,
        ProtocolVariant::EnablingDisabling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolVariant::TwoTap => "two-tap",
            ProtocolVariant::HceOneTap => "hce-one-tap",
            ProtocolVariant::DisablingEnabling => "disabling-enabling",
            ProtocolVariant::EnablingDisabling => "enabling-disabling",
        }
    }

    /// Whether the devices keep swapping roles, allowing any number of
    /// round trips.
    pub fn is_role_switching(self) -> bool {
        matches!(self, ProtocolVariant::DisablingEnabling | ProtocolVariant::EnablingDisabling)
    }
}

impl fmt::Display for ProtocolVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolVariant {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| ProtocolError::InvalidConfig(format!("unknown protocol variant `{s}`")))
    }
}

/// Protocol selector plus its delay parameters, all in milliseconds. Only the
/// delays relevant to `variant` are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub variant: ProtocolVariant,
    /// Disabling-enabling: wait after deactivation before enabling the reader.
    pub t_ms: u32,
    /// Enabling-disabling: wait after the last command before enabling the reader.
    pub t1_ms: u32,
    /// Enabling-disabling: wait before the old reader disables itself.
    pub t2_ms: u32,
    /// User reaction time for each tap in the tap-driven variants.
    pub tap_latency_ms: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            variant: ProtocolVariant::EnablingDisabling,
            t_ms: 700,
            t1_ms: 310,
            t2_ms: 100,
            tap_latency_ms: 1000,
        }
    }
}

impl ProtocolConfig {
    pub fn disabling_enabling(t_ms: u32) -> Self {
        ProtocolConfig {
            variant: ProtocolVariant::DisablingEnabling,
            t_ms,
            ..Self::default()
        }
    }

    pub fn enabling_disabling(t1_ms: u32, t2_ms: u32) -> Self {
        ProtocolConfig {
            variant: ProtocolVariant::EnablingDisabling,
            t1_ms,
            t2_ms,
            ..Self::default()
        }
    }

    pub fn two_tap(tap_latency_ms: u32) -> Self {
        ProtocolConfig {
            variant: ProtocolVariant::TwoTap,
            tap_latency_ms,
            ..Self::default()
        }
    }

    pub fn hce_one_tap(tap_latency_ms: u32) -> Self {
        ProtocolConfig {
            variant: ProtocolVariant::HceOneTap,
            tap_latency_ms,
            ..Self::default()
        }
    }

    pub fn with_variant(self, variant: ProtocolVariant) -> Self {
        ProtocolConfig { variant, ..self }
    }

    pub fn t(&self) -> SimDuration {
        SimDuration::from_millis(self.t_ms as u64)
    }

    pub fn t1(&self) -> SimDuration {
        SimDuration::from_millis(self.t1_ms as u64)
    }

    pub fn t2(&self) -> SimDuration {
        SimDuration::from_millis(self.t2_ms as u64)
    }

    pub fn tap_latency(&self) -> SimDuration {
        SimDuration::from_millis(self.tap_latency_ms as u64)
    }
}

/// Radio reconfiguration costs and the hard limits below which a role
/// switch never succeeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchHardware {
    /// From the enable call until the device polls as a reader.
    pub reader_enable: SimDuration,
    /// From the disable call until the field is off and card emulation is
    /// reachable.
    pub reader_disable: SimDuration,
    /// Smallest `t` at which a deactivated card can rearm as a reader.
    pub rearm_min: SimDuration,
    /// Smallest `t2` that leaves the new reader time to take over the field.
    pub handover_min: SimDuration,
}

impl Default for SwitchHardware {
    fn default() -> Self {
        SwitchHardware {
            reader_enable: SimDuration::from_millis(776),
            reader_disable: SimDuration::from_millis(1179),
            rearm_min: SimDuration::from_millis(675),
            handover_min: SimDuration::from_millis(95),
        }
    }
}

impl SwitchHardware {
    pub fn instantaneous() -> Self {
        SwitchHardware {
            reader_enable: SimDuration::ZERO,
            reader_disable: SimDuration::ZERO,
            rearm_min: SimDuration::ZERO,
            handover_min: SimDuration::ZERO,
        }
    }
}

/// Everything besides the protocol that shapes a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub link: LinkConfig,
    pub hardware: SwitchHardware,
    /// `None` runs deterministically: fixed T_APDU and every switch that
    /// clears the hardware limits succeeds.
    pub readiness: Option<ReadinessModel>,
    pub seed: u64,
    /// Repeat index, selecting the random substreams of this run.
    pub repeat: u64,
    pub trace: bool,
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation::deterministic()
    }
}

impl Simulation {
    pub fn deterministic() -> Self {
        Simulation {
            link: LinkConfig::default(),
            hardware: SwitchHardware::default(),
            readiness: None,
            seed: 0,
            repeat: 0,
            trace: false,
        }
    }

    pub fn stochastic(readiness: ReadinessModel, seed: u64) -> Self {
        Simulation {
            readiness: Some(readiness),
            seed,
            ..Simulation::deterministic()
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.readiness.is_some()
    }

    pub fn with_repeat(&self, repeat: u64) -> Self {
        Simulation { repeat, ..self.clone() }
    }

    pub fn with_trace(self) -> Self {
        Simulation { trace: true, ..self }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        self.link.validate().map_err(ProtocolError::InvalidConfig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    /// The k-th role switch (1-based) failed and the run was abandoned.
    FailedAtSwitch(u32),
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub variant: ProtocolVariant,
    pub n_round_trips: u32,
    pub chunk_bytes: usize,
    /// From the start of the run, including the initial detection.
    pub total_time: SimDuration,
    /// From the first command sent to the last response received.
    pub latency: SimDuration,
    /// Payload bytes delivered in both directions.
    pub bytes_transferred: u64,
    pub bandwidth_kbps: f64,
    pub switch_count: u32,
    pub outcome: Outcome,
    /// A delay fell outside the calibrated range of the readiness model.
    pub out_of_calibration: bool,
}

impl TransferReport {
    pub fn total_time_ms(&self) -> f64 {
        self.total_time.as_millis_f64()
    }

    pub fn latency_ms(&self) -> f64 {
        self.latency.as_millis_f64()
    }
}
