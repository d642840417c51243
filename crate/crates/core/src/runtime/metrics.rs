use crate::error::RuntimeError;

/// `2n * t_apdu + (2n - 1) * t_switching_avg`.
pub fn t_round_trip(n: u32, t_apdu: f64, t_switching_avg: f64) -> f64 {
    let n = n as f64;
    2.0 * n * t_apdu + (2.0 * n - 1.0) * t_switching_avg
}

/// Average switching time recovered from a measured n-round-trip total.
pub fn t_switching_avg(total: f64, n: u32, t_apdu: f64) -> Result<f64, RuntimeError> {
    let transfer = 2.0 * n as f64 * t_apdu;
    if n == 0 || total <= transfer {
        return Err(RuntimeError::NonPositiveSwitchTime { total_ms: total, n });
    }
    Ok((total - transfer) / (2.0 * n as f64 - 1.0))
}

/// Kilobits per second for `bytes` moved in `duration_ms`.
pub fn bandwidth_kbps(bytes: u64, duration_ms: f64) -> f64 {
    if duration_ms <= 0.0 {
        return 0.0;
    }
    8.0 * bytes as f64 / duration_ms
}
