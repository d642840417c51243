//! Role-switching communication protocols between two NFC devices, the
//! stochastic switch-readiness model and its calibration.

mod calibrate;
mod config;
pub mod engine;
mod experiments;
mod readiness;

pub use calibrate::{
    calibrate, isotonic_fit, per_switch_from_rate, reference_tables, Calibration, CalibrationTable, CalibrationTables,
    CurveFit, DelayParameter, HeldDelay, TableRow, DEFAULT_THRESHOLD, TABLES_SCHEMA,
};
pub use config::{Outcome, ProtocolConfig, ProtocolVariant, Simulation, SwitchHardware, TransferReport};
pub use engine::{converse, Conversation, Leg, LegRecord, Payload, MAIN, OFFLOADEE};
pub use experiments::{
    report, run_disabling_enabling, run_enabling_disabling, run_hce_one_tap, run_protocol, run_round_trips,
    run_two_tap, success_rate, transfer_message,
};
pub use readiness::{per_switch_probability, CurvePoint, ReadinessCurve, ReadinessModel, SwitchProbability};
