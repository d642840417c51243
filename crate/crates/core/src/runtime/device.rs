use serde::{Deserialize, Serialize};

use crate::error::RuntimeError;

use super::PowerState;

/// Compute speed and power draw of one device. Powers are in milliwatts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    /// Relative to a reference device of speed 1.0.
    pub speed_factor: f64,
    pub power_compute: f64,
    /// Drawn while transferring over NFC and while reconfiguring the radio.
    pub power_nfc: f64,
    pub power_idle: f64,
}

impl DeviceProfile {
    pub fn main_default() -> Self {
        DeviceProfile {
            name: "main".into(),
            speed_factor: 1.0,
            power_compute: 2000.0,
            power_nfc: 1200.0,
            power_idle: 330.0,
        }
    }

    pub fn offloadee_default() -> Self {
        DeviceProfile {
            name: "offloadee".into(),
            speed_factor: 2.5,
            ..Self::main_default()
        }
    }

    pub fn validate(&self) -> Result<(), RuntimeError> {
        let bad = |m: &str| Err(RuntimeError::InvalidParameter(format!("device `{}`: {m}", self.name)));
        if !(self.speed_factor.is_finite() && self.speed_factor > 0.0) {
            return bad("speed_factor must be positive");
        }
        let powers = [self.power_compute, self.power_nfc, self.power_idle];
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("powers must be non-negative");
        }
        if self.power_nfc >= self.power_compute {
            return bad("NFC power must be below compute power");
        }
        Ok(())
    }

    pub fn power(&self, state: PowerState) -> f64 {
        match state {
            PowerState::Compute => self.power_compute,
            PowerState::NfcTransfer | PowerState::Switching => self.power_nfc,
            PowerState::Idle => self.power_idle,
        }
    }
}
