use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;

use super::{CurvePoint, ProtocolVariant, ReadinessCurve, ReadinessModel};

pub const DEFAULT_THRESHOLD: f64 = 0.80;
pub const TABLES_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayParameter {
    T,
    T1,
    T2,
}

impl DelayParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            DelayParameter::T => "t",
            DelayParameter::T1 => "t1",
            DelayParameter::T2 => "t2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub delay_ms: u32,
    /// Fraction of experiments that completed every round trip.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldDelay {
    pub parameter: DelayParameter,
    pub delay_ms: u32,
}

/// Measured experiment success rates for one swept delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub variant: ProtocolVariant,
    pub parameter: DelayParameter,
    /// The other delay, kept fixed while this one was swept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held: Option<HeldDelay>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTables {
    pub schema: u32,
    /// Round trips per experiment.
    pub round_trips: u32,
    #[serde(rename = "table")]
    pub tables: Vec<CalibrationTable>,
}

/// The experiment success-rate tables the default readiness model is fitted
/// to: 50 round trips of 2 KB per experiment.
pub fn reference_tables() -> CalibrationTables {
    let rows = |v: &[(u32, f64)]| {
        v.iter()
            .map(|&(delay_ms, rate)| TableRow { delay_ms, rate })
            .collect()
    };
    CalibrationTables {
        schema: TABLES_SCHEMA,
        round_trips: 50,
        tables: vec![
            CalibrationTable {
                variant: ProtocolVariant::DisablingEnabling,
                parameter: DelayParameter::T,
                held: None,
                rows: rows(&[(680, 0.05), (690, 0.40), (700, 0.82), (710, 0.82)]),
            },
            CalibrationTable {
                variant: ProtocolVariant::EnablingDisabling,
                parameter: DelayParameter::T1,
                held: Some(HeldDelay {
                    parameter: DelayParameter::T2,
                    delay_ms: 1000,
                }),
                rows: rows(&[
                    (250, 0.0),
                    (260, 0.0),
                    (270, 0.30),
                    (280, 0.55),
                    (290, 0.60),
                    (300, 0.65),
                    (310, 0.95),
                ]),
            },
            CalibrationTable {
                variant: ProtocolVariant::EnablingDisabling,
                parameter: DelayParameter::T2,
                held: Some(HeldDelay {
                    parameter: DelayParameter::T1,
                    delay_ms: 310,
                }),
                rows: rows(&[(50, 0.0), (70, 0.0), (90, 0.0), (100, 0.85)]),
            },
        ],
    }
}

/// Least-squares non-decreasing fit (pool adjacent violators).
pub fn isotonic_fit(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// Per-switch probability whose `switches`-th power equals `rate`.
pub fn per_switch_from_rate(rate: f64, switches: u32) -> f64 {
    rate.clamp(0.0, 1.0).powf(1.0 / switches as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    pub variant: ProtocolVariant,
    pub parameter: DelayParameter,
    /// `(delay, monotone experiment rate)` after the isotonic fit.
    pub fitted: Vec<(u32, f64)>,
    /// The input rates decreased somewhere and were pooled.
    pub non_monotone_input: bool,
    pub curve: ReadinessCurve,
    /// Smallest delay whose fitted rate reaches the threshold.
    pub recommended: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub round_trips: u32,
    pub fits: Vec<CurveFit>,
}

impl Calibration {
    pub fn fit(&self, parameter: DelayParameter) -> Option<&CurveFit> {
        self.fits.iter().find(|f| f.parameter == parameter)
    }

    /// The complete model, when all three curves were fitted.
    pub fn model(&self) -> Result<ReadinessModel, ProtocolError> {
        let curve = |p: DelayParameter| {
            self.fit(p)
                .map(|f| f.curve.clone())
                .ok_or_else(|| ProtocolError::InvalidConfig(format!("no table for delay `{}`", p.as_str())))
        };
        Ok(ReadinessModel {
            disabling_enabling: curve(DelayParameter::T)?,
            enabling_t1: curve(DelayParameter::T1)?,
            enabling_t2: curve(DelayParameter::T2)?,
        })
    }
}

fn check_table(table: &CalibrationTable) -> Result<(), ProtocolError> {
    let expected = match table.parameter {
        DelayParameter::T => ProtocolVariant::DisablingEnabling,
        DelayParameter::T1 | DelayParameter::T2 => ProtocolVariant::EnablingDisabling,
    };
    let bad = |m: String| Err(ProtocolError::InvalidConfig(m));
    if table.variant != expected {
        return bad(format!("delay `{}` does not belong to {}", table.parameter.as_str(), table.variant));
    }
    if table.rows.is_empty() {
        return bad(format!("table for `{}` has no rows", table.parameter.as_str()));
    }
    if table.rows.windows(2).any(|w| w[1].delay_ms <= w[0].delay_ms) {
        return bad(format!("table for `{}` must list strictly increasing delays", table.parameter.as_str()));
    }
    if table.rows.iter().any(|r| !(0.0..=1.0).contains(&r.rate)) {
        return bad(format!("table for `{}` has a rate outside [0, 1]", table.parameter.as_str()));
    }
    Ok(())
}

/// Fits per-switch readiness curves to experiment success rates.
///
/// The `t2` table is measured with `t1` held, so its rates are divided by the
/// fitted `t1` stage at that delay before conversion. The `t1` table in turn
/// holds `t2` at a value assumed always safe, which becomes the `t2` curve's
/// upper anchor at probability 1.
pub fn calibrate(tables: &CalibrationTables, threshold: f64) -> Result<Calibration, ProtocolError> {
    if tables.schema != TABLES_SCHEMA {
        return Err(ProtocolError::InvalidConfig(format!(
            "unsupported tables schema {} (expected {TABLES_SCHEMA})",
            tables.schema
        )));
    }
    if tables.round_trips == 0 {
        return Err(ProtocolError::NoRoundTrips);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ProtocolError::InvalidConfig(format!("threshold {threshold} outside [0, 1]")));
    }
    let switches = 2 * tables.round_trips - 1;
    let mut order: Vec<&CalibrationTable> = tables.tables.iter().collect();
    order.sort_by_key(|t| t.parameter as u8);

    let mut fits: Vec<CurveFit> = Vec::new();
    for table in order {
        check_table(table)?;
        if fits.iter().any(|f| f.parameter == table.parameter) {
            return Err(ProtocolError::InvalidConfig(format!(
                "more than one table for `{}`",
                table.parameter.as_str()
            )));
        }
        let raw: Vec<f64> = table.rows.iter().map(|r| r.rate).collect();
        let mono = isotonic_fit(&raw);
        let non_monotone_input = raw.windows(2).any(|w| w[1] < w[0]);
        if non_monotone_input {
            log::warn!(
                "success rates for `{}` decrease with delay; fitted monotonically",
                table.parameter.as_str()
            );
        }
        let fitted: Vec<(u32, f64)> = table.rows.iter().map(|r| r.delay_ms).zip(mono.iter().copied()).collect();

        let mut divisor = 1.0;
        let mut anchor = None;
        if table.parameter == DelayParameter::T2 {
            if let (Some(held), Some(t1)) = (table.held, fits.iter().find(|f| f.parameter == DelayParameter::T1)) {
                let (stage, _) = t1.curve.eval(held.delay_ms as f64);
                let rate = stage.powi(switches as i32);
                if rate > 0.0 {
                    divisor = rate;
                }
            }
            let safe_t2 = tables
                .tables
                .iter()
                .filter(|t| t.parameter == DelayParameter::T1)
                .find_map(|t| t.held.filter(|h| h.parameter == DelayParameter::T2));
            if let Some(h) = safe_t2 {
                if h.delay_ms > fitted.last().map_or(0, |r| r.0) {
                    anchor = Some(CurvePoint {
                        delay_ms: h.delay_ms as f64,
                        p: 1.0,
                    });
                }
            }
        }
        let mut points: Vec<CurvePoint> = fitted
            .iter()
            .map(|&(d, r)| CurvePoint {
                delay_ms: d as f64,
                p: per_switch_from_rate((r / divisor).min(1.0), switches),
            })
            .collect();
        points.extend(anchor);
        let curve = ReadinessCurve::new(points)?;
        let recommended = fitted.iter().find(|&&(_, r)| r >= threshold - 1e-12).map(|&(d, _)| d);
        fits.push(CurveFit {
            variant: table.variant,
            parameter: table.parameter,
            fitted,
            non_monotone_input,
            curve,
            recommended,
        });
    }
    Ok(Calibration {
        threshold,
        round_trips: tables.round_trips,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pava_pools_violators() {
        let close = |a: Vec<f64>, b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(isotonic_fit(&[0.1, 0.5, 0.3, 0.9]), &[0.1, 0.4, 0.4, 0.9]));
        assert!(close(isotonic_fit(&[0.3, 0.2, 0.1]), &[0.2, 0.2, 0.2]));
        assert_eq!(isotonic_fit(&[]), Vec::<f64>::new());
    }

    #[test]
    fn reference_recommendations() {
        let c = calibrate(&reference_tables(), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(c.fit(DelayParameter::T).unwrap().recommended, Some(700));
        assert_eq!(c.fit(DelayParameter::T1).unwrap().recommended, Some(310));
        assert_eq!(c.fit(DelayParameter::T2).unwrap().recommended, Some(100));
    }

    #[test]
    fn non_monotone_is_flagged_and_kept() {
        let mut tables = reference_tables();
        tables.tables[0].rows[3].rate = 0.70;
        let c = calibrate(&tables, DEFAULT_THRESHOLD).unwrap();
        let fit = c.fit(DelayParameter::T).unwrap();
        assert!(fit.non_monotone_input);
        assert_eq!(fit.fitted.len(), 4);
        assert!(fit.fitted.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn wrong_schema_rejected() {
        let mut tables = reference_tables();
        tables.schema = 9;
        assert!(calibrate(&tables, 0.8).is_err());
    }
}
