use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::RuntimeError;
use crate::sim::DeviceId;
use crate::time::{SimDuration, SimTime};

use super::DeviceProfile;

/// What a device is doing during an interval, for power accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerState {
    Compute,
    /// An APDU or NDEF transfer is on the air.
    NfcTransfer,
    /// Radio reconfiguration: reader enable/disable, polling, detection.
    Switching,
    Idle,
}

impl PowerState {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerState::Compute => "compute",
            PowerState::NfcTransfer => "nfc_transfer",
            PowerState::Switching => "switching",
            PowerState::Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub device: DeviceId,
    pub state: PowerState,
    pub start: SimTime,
    pub end: SimTime,
}

impl Interval {
    pub fn duration(&self) -> SimDuration {
        self.end.since(self.start)
    }
}

/// Energy in millijoules: the sum of `power(state) * duration` over the
/// given intervals. Intervals must not overlap on any one device.
pub fn energy_of_trace(trace: &[Interval], profile: &DeviceProfile) -> Result<f64, RuntimeError> {
    let mut by_device: BTreeMap<DeviceId, Vec<&Interval>> = BTreeMap::new();
    for iv in trace {
        by_device.entry(iv.device).or_default().push(iv);
    }
    for (device, ivs) in by_device.iter_mut() {
        ivs.sort_by_key(|iv| (iv.start, iv.end));
        for pair in ivs.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(RuntimeError::OverlappingIntervals(device.to_string()));
            }
        }
    }
    Ok(trace
        .iter()
        .map(|iv| profile.power(iv.state) * iv.duration().as_secs_f64())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(state: PowerState, start_ms: u64, end_ms: u64) -> Interval {
        Interval {
            device: DeviceId(0),
            state,
            start: SimTime::from_micros(start_ms * 1000),
            end: SimTime::from_micros(end_ms * 1000),
        }
    }

    fn profile() -> DeviceProfile {
        DeviceProfile {
            power_compute: 1000.0,
            ..DeviceProfile::main_default()
        }
    }

    #[test]
    fn one_second_at_one_watt() {
        let e = energy_of_trace(&[iv(PowerState::Compute, 0, 1000)], &profile()).unwrap();
        assert!((e - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn empty_trace_is_free() {
        assert_eq!(energy_of_trace(&[], &profile()).unwrap(), 0.0);
    }

    #[test]
    fn split_equals_unsplit() {
        let p = profile();
        let whole = energy_of_trace(&[iv(PowerState::Idle, 0, 900)], &p).unwrap();
        let split = energy_of_trace(
            &[iv(PowerState::Idle, 0, 300), iv(PowerState::Idle, 300, 900)],
            &p,
        )
        .unwrap();
        assert!((whole - split).abs() < 1e-9);
    }

    #[test]
    fn overlap_is_rejected() {
        let r = energy_of_trace(
            &[iv(PowerState::Idle, 0, 300), iv(PowerState::Compute, 299, 400)],
            &profile(),
        );
        assert!(matches!(r, Err(RuntimeError::OverlappingIntervals(_))));
    }
}
