use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario_id: String,
    pub metric: String,
    pub size: u64,
    pub value: f64,
    /// Sample standard deviation over repeats; absent for single runs.
    pub stddev: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Some experiment ended in a failed role switch.
    pub had_failures: bool,
}

/// Mean and, for more than one sample, the sample standard deviation.
pub fn summarize(samples: &[f64]) -> (f64, Option<f64>) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, None);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

impl Report {
    /// Adds one row from the per-repeat `samples`. `repeats` decides whether
    /// a standard deviation is reported.
    pub fn push(&mut self, scenario_id: &str, metric: impl Into<String>, size: u64, samples: &[f64], repeats: u32) {
        if samples.is_empty() {
            return;
        }
        let (value, sd) = summarize(samples);
        self.rows.push(Row {
            scenario_id: scenario_id.to_string(),
            metric: metric.into(),
            size,
            value,
            stddev: if repeats > 1 { sd.or(Some(0.0)) } else { None },
        });
    }

    pub fn push_value(&mut self, scenario_id: &str, metric: impl Into<String>, size: u64, value: f64) {
        self.push(scenario_id, metric, size, &[value], 1);
    }

    pub fn value(&self, metric: &str, size: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.size == size)
            .map(|r| r.value)
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<(), CliError> {
        let err = |e: &dyn std::fmt::Display| CliError::Output(e.to_string());
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["scenario_id", "metric", "size", "value", "stddev"])
                    .map_err(|e| err(&e))?;
                for r in &self.rows {
                    let size = r.size.to_string();
                    let value = fixed(r.value);
                    let sd = r.stddev.map(fixed).unwrap_or_default();
                    w.write_record([r.scenario_id.as_str(), &r.metric, &size, &value, &sd])
                        .map_err(|e| err(&e))?;
                }
                w.flush().map_err(|e| err(&e))
            }
            Format::Json => {
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, &self.rows).map_err(|e| err(&e))?;
                writeln!(out).map_err(|e| err(&e))
            }
        }
    }

    pub fn to_string(&self, format: Format) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        assert_eq!(summarize(&[3.0]), (3.0, None));
        let (m, sd) = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::default();
        r.push("s", "latency_ms", 2048, &[1.5], 1);
        r.push("s", "success_rate", 700, &[1.0, 0.0], 2);
        let text = r.to_string(Format::Csv).unwrap();
        assert_eq!(
            text,
            "scenario_id,metric,size,value,stddev\n\
             s,latency_ms,2048,1.500000,\n\
             s,success_rate,700,0.500000,0.707107\n"
        );
    }

    #[test]
    fn json_layout() {
        let mut r = Report::default();
        r.push_value("s", "m", 1, 2.0);
        let v: serde_json::Value = serde_json::from_str(&r.to_string(Format::Json).unwrap()).unwrap();
        assert_eq!(v[0]["metric"], "m");
        assert!(v[0]["stddev"].is_null());
    }
}
