use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::time::SimDuration;
use crate::transfer::MAX_CHUNK;

/// Duration of one command/response exchange as a function of the response
/// payload size: `overhead + (t_apdu_2k - overhead) * len / 2048`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingModel {
    /// Exchange time for a full 2 KB response.
    pub t_apdu_2k: SimDuration,
    /// Fixed part of every exchange (command, SELECT handling, status word).
    pub overhead: SimDuration,
    /// Half-width of the uniform jitter applied in stochastic runs.
    pub jitter: SimDuration,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            t_apdu_2k: SimDuration::from_millis(329),
            overhead: SimDuration::from_millis(150),
            jitter: SimDuration::ZERO,
        }
    }
}

impl TimingModel {
    /// A zero-cost link, for limit cases only.
    pub fn instantaneous() -> Self {
        TimingModel {
            t_apdu_2k: SimDuration::ZERO,
            overhead: SimDuration::ZERO,
            jitter: SimDuration::ZERO,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.overhead > self.t_apdu_2k {
            return Err(format!(
                "APDU overhead {} exceeds the 2 KB exchange time {}",
                self.overhead, self.t_apdu_2k
            ));
        }
        Ok(())
    }

    pub fn t_apdu(&self, payload_len: usize) -> SimDuration {
        let per_2k = self.t_apdu_2k.saturating_sub(self.overhead).as_micros() as u128;
        let scaled = per_2k * payload_len as u128 / MAX_CHUNK as u128;
        self.overhead + SimDuration::from_micros(scaled as u64)
    }

    /// Exchange time with jitter drawn from `rng`, never below 1 us unless the
    /// model itself is zero-cost.
    pub fn sample<R: Rng + ?Sized>(&self, payload_len: usize, rng: Option<&mut R>) -> SimDuration {
        let base = self.t_apdu(payload_len);
        let (Some(rng), j) = (rng, self.jitter.as_micros() as i64) else {
            return base;
        };
        if j == 0 {
            return base;
        }
        let delta = rng.gen_range(-j..=j);
        let floor = if base == SimDuration::ZERO { 0 } else { 1 };
        SimDuration::from_micros((base.as_micros() as i64 + delta).max(floor) as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_kilobytes_take_329_ms() {
        assert_eq!(TimingModel::default().t_apdu(2048), SimDuration::from_millis(329));
    }

    #[test]
    fn empty_payload_costs_overhead() {
        assert_eq!(TimingModel::default().t_apdu(0), SimDuration::from_millis(150));
    }

    #[test]
    fn monotone_in_payload() {
        let m = TimingModel::default();
        let mut prev = SimDuration::ZERO;
        for len in (0..=2048).step_by(7) {
            let t = m.t_apdu(len);
            assert!(t >= prev && t > SimDuration::ZERO);
            prev = t;
        }
    }

    #[test]
    fn jitter_stays_in_band() {
        let m = TimingModel {
            jitter: SimDuration::from_millis(5),
            ..TimingModel::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = m.sample(2048, Some(&mut rng)).as_micros();
            assert!((324_000..=334_000).contains(&t));
        }
        assert_eq!(m.sample::<ChaCha8Rng>(2048, None), SimDuration::from_millis(329));
    }
}
