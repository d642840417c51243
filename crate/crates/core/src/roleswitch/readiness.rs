use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;

use super::{ProtocolConfig, ProtocolVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delay_ms: f64,
    pub p: f64,
}

/// Piecewise-linear, non-decreasing map from a delay to the probability that
/// one role switch succeeds. Delays outside the points clamp to the nearest
/// end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CurvePoint>", into = "Vec<CurvePoint>")]
pub struct ReadinessCurve {
    points: Vec<CurvePoint>,
}

impl TryFrom<Vec<CurvePoint>> for ReadinessCurve {
    type Error = ProtocolError;

    fn try_from(points: Vec<CurvePoint>) -> Result<Self, Self::Error> {
        ReadinessCurve::new(points)
    }
}

impl From<ReadinessCurve> for Vec<CurvePoint> {
    fn from(c: ReadinessCurve) -> Self {
        c.points
    }
}

impl ReadinessCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self, ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::InvalidConfig(format!("readiness curve: {m}")));
        if points.is_empty() {
            return bad("needs at least one point");
        }
        for p in &points {
            if !(0.0..=1.0).contains(&p.p) {
                return bad("probabilities must lie in [0, 1]");
            }
            if !p.delay_ms.is_finite() || p.delay_ms < 0.0 {
                return bad("delays must be finite and non-negative");
            }
        }
        for w in points.windows(2) {
            if w[1].delay_ms <= w[0].delay_ms {
                return bad("delays must be strictly increasing");
            }
            if w[1].p < w[0].p {
                return bad("probability must not decrease with delay");
            }
        }
        Ok(ReadinessCurve { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, ProtocolError> {
        Self::new(pairs.iter().map(|&(delay_ms, p)| CurvePoint { delay_ms, p }).collect())
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    /// Probability at `delay_ms` and whether it had to be clamped.
    pub fn eval(&self, delay_ms: f64) -> (f64, bool) {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if delay_ms < first.delay_ms {
            return (first.p, true);
        }
        if delay_ms > last.delay_ms {
            return (last.p, true);
        }
        let i = self.points.partition_point(|p| p.delay_ms <= delay_ms);
        if i == self.points.len() {
            return (last.p, false);
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let f = (delay_ms - a.delay_ms) / (b.delay_ms - a.delay_ms);
        (a.p + f * (b.p - a.p), false)
    }
}

/// Per-switch success curves. The enabling-disabling protocol has two
/// independent stages, one governed by `t1` and one by `t2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadinessModel {
    pub disabling_enabling: ReadinessCurve,
    pub enabling_t1: ReadinessCurve,
    pub enabling_t2: ReadinessCurve,
}

impl ReadinessModel {
    /// The model fitted to the reference success-rate tables.
    pub fn calibrated() -> Self {
        super::calibrate(&super::reference_tables(), super::DEFAULT_THRESHOLD)
            .and_then(|c| c.model())
            .expect("reference tables are complete and valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchProbability {
    /// One independent Bernoulli stage per entry.
    pub stages: Vec<f64>,
    pub out_of_range: bool,
}

impl SwitchProbability {
    pub fn p(&self) -> f64 {
        self.stages.iter().product()
    }
}

pub fn per_switch_probability(model: &ReadinessModel, config: &ProtocolConfig) -> SwitchProbability {
    match config.variant {
        ProtocolVariant::DisablingEnabling => {
            let (p, out) = model.disabling_enabling.eval(config.t_ms as f64);
            SwitchProbability {
                stages: vec![p],
                out_of_range: out,
            }
        }
        ProtocolVariant::EnablingDisabling => {
            let (p1, o1) = model.enabling_t1.eval(config.t1_ms as f64);
            let (p2, o2) = model.enabling_t2.eval(config.t2_ms as f64);
            SwitchProbability {
                stages: vec![p1, p2],
                out_of_range: o1 || o2,
            }
        }
        ProtocolVariant::TwoTap | ProtocolVariant::HceOneTap => SwitchProbability {
            stages: Vec::new(),
            out_of_range: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_curves() {
        assert!(ReadinessCurve::from_pairs(&[]).is_err());
        assert!(ReadinessCurve::from_pairs(&[(1.0, 1.2)]).is_err());
        assert!(ReadinessCurve::from_pairs(&[(1.0, 0.5), (1.0, 0.6)]).is_err());
        assert!(ReadinessCurve::from_pairs(&[(1.0, 0.5), (2.0, 0.4)]).is_err());
    }

    #[test]
    fn interpolates_and_clamps() {
        let c = ReadinessCurve::from_pairs(&[(10.0, 0.2), (20.0, 0.6)]).unwrap();
        assert_eq!(c.eval(10.0), (0.2, false));
        assert_eq!(c.eval(20.0), (0.6, false));
        let (mid, out) = c.eval(15.0);
        assert!((mid - 0.4).abs() < 1e-12 && !out);
        assert_eq!(c.eval(5.0), (0.2, true));
        assert_eq!(c.eval(1e9), (0.6, true));
    }
}
