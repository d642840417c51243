use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use nfcsim_core::roleswitch::{
    calibrate, reference_tables, run_protocol, CalibrationTables, DelayParameter, ProtocolConfig, ProtocolVariant,
    ReadinessModel, Simulation, TransferReport,
};
use nfcsim_core::runtime::{execute_local_with, offload_task_with, t_switching_avg};
use nfcsim_core::{RuntimeError, TaskOutcome};

use crate::error::CliError;
use crate::report::Report;
use crate::scenario::Scenario;

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub repeats: Option<u32>,
    pub trace: bool,
}

impl Overrides {
    fn apply(&self, scenario: &mut Scenario) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        if let Some(r) = self.repeats {
            if r == 0 {
                return Err(CliError::Invalid("--repeats must be at least 1".into()));
            }
            scenario.repeats = r;
        }
        Ok(())
    }
}

fn with_delay(config: ProtocolConfig, parameter: DelayParameter, value: u32) -> Result<ProtocolConfig, CliError> {
    let expected = match parameter {
        DelayParameter::T => ProtocolVariant::DisablingEnabling,
        DelayParameter::T1 | DelayParameter::T2 => ProtocolVariant::EnablingDisabling,
    };
    if config.variant != expected {
        return Err(CliError::Invalid(format!(
            "sweeping `{}` needs protocol variant {expected}, scenario uses {}",
            parameter.as_str(),
            config.variant
        )));
    }
    Ok(match parameter {
        DelayParameter::T => ProtocolConfig { t_ms: value, ..config },
        DelayParameter::T1 => ProtocolConfig { t1_ms: value, ..config },
        DelayParameter::T2 => ProtocolConfig { t2_ms: value, ..config },
    })
}

/// Runs `trials` experiments for each repeat. The outer vector is indexed by
/// repeat, whatever order the workers finish in.
fn run_trials(
    config: &ProtocolConfig,
    sim: &Simulation,
    repeats: u32,
    trials: u32,
    n: u32,
    chunk: usize,
) -> Result<Vec<Vec<TransferReport>>, CliError> {
    let flat = (0..repeats as u64 * trials as u64)
        .into_par_iter()
        .map(|k| run_protocol(config, &sim.with_repeat(k), n, chunk))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(flat.chunks(trials as usize).map(<[TransferReport]>::to_vec).collect())
}

/// Per-repeat means over the successful runs of each repeat.
fn successful_means(runs: &[Vec<TransferReport>], f: impl Fn(&TransferReport) -> f64) -> Vec<f64> {
    runs.iter()
        .filter_map(|rep| {
            let ok: Vec<f64> = rep.iter().filter(|r| r.outcome.is_success()).map(&f).collect();
            (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
        })
        .collect()
}

fn switching_avg(r: &TransferReport, sim: &Simulation) -> Option<f64> {
    if !r.variant.is_role_switching() {
        return None;
    }
    let t_apdu = sim.link.timing.t_apdu(r.chunk_bytes).as_millis_f64();
    t_switching_avg(r.latency_ms(), r.n_round_trips, t_apdu).ok()
}

fn push_runs(report: &mut Report, id: &str, prefix: &str, size: u64, runs: &[Vec<TransferReport>], sim: &Simulation, repeats: u32) {
    let rates: Vec<f64> = runs
        .iter()
        .map(|rep| rep.iter().filter(|r| r.outcome.is_success()).count() as f64 / rep.len() as f64)
        .collect();
    report.had_failures |= rates.iter().any(|&r| r < 1.0);
    if runs.iter().flatten().any(|r| r.out_of_calibration) {
        log::warn!("{id}: a delay lies outside the calibrated range; readiness was clamped");
    }
    report.push(id, format!("{prefix}success_rate"), size, &rates, repeats);
    report.push(id, format!("{prefix}latency_ms"), size, &successful_means(runs, TransferReport::latency_ms), repeats);
    report.push(id, format!("{prefix}total_time_ms"), size, &successful_means(runs, TransferReport::total_time_ms), repeats);
    report.push(id, format!("{prefix}bandwidth_kbps"), size, &successful_means(runs, |r| r.bandwidth_kbps), repeats);
    report.push(id, format!("{prefix}switch_count"), size, &successful_means(runs, |r| r.switch_count as f64), repeats);
    let sw: Vec<f64> = runs
        .iter()
        .filter_map(|rep| {
            let v: Vec<f64> = rep.iter().filter(|r| r.outcome.is_success()).filter_map(|r| switching_avg(r, sim)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    report.push(id, format!("{prefix}t_switching_avg_ms"), size, &sw, repeats);
}

/// Round-trip experiments for the scenario's protocol, optionally swept over
/// one delay. `size` is the chunk size, or the swept delay in ms.
pub fn simulate(scenario: &Scenario, overrides: Overrides) -> Result<Report, CliError> {
    let mut scenario = scenario.clone();
    overrides.apply(&mut scenario)?;
    let sim = scenario.simulation(overrides.trace)?;
    let config = scenario.protocol();
    let e = &scenario.experiment;
    let points: Vec<(u64, ProtocolConfig)> = match &e.sweep {
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| Ok((v as u64, with_delay(config, sweep.parameter, v)?)))
            .collect::<Result<_, CliError>>()?,
        None => vec![(e.chunk_bytes as u64, config)],
    };
    let mut report = Report::default();
    for (size, cfg) in points {
        log::info!("{}: {} at size {size}", scenario.id, cfg.variant);
        let runs = run_trials(&cfg, &sim, scenario.repeats, e.trials, e.round_trips, e.chunk_bytes)?;
        push_runs(&mut report, &scenario.id, "", size, &runs, &sim, scenario.repeats);
    }
    Ok(report)
}

/// Disabling-enabling against enabling-disabling for each payload size.
pub fn compare_protocols(scenario: &Scenario, overrides: Overrides) -> Result<Report, CliError> {
    let mut scenario = scenario.clone();
    overrides.apply(&mut scenario)?;
    let sim = scenario.simulation(overrides.trace)?;
    let base = scenario.protocol();
    let e = &scenario.experiment;
    if e.payload_bytes.is_empty() {
        return Err(CliError::Invalid("experiment.payload_bytes is empty".into()));
    }
    let variants = [ProtocolVariant::DisablingEnabling, ProtocolVariant::EnablingDisabling];
    let mut report = Report::default();
    for &payload in &e.payload_bytes {
        if payload == 0 || payload % e.chunk_bytes != 0 {
            return Err(CliError::Invalid(format!(
                "payload of {payload} bytes is not a positive multiple of the {}-byte chunk",
                e.chunk_bytes
            )));
        }
        let n = (payload / e.chunk_bytes) as u32;
        let mut means = Vec::new();
        for v in variants {
            let runs = run_trials(&base.with_variant(v), &sim, scenario.repeats, e.trials, n, e.chunk_bytes)?;
            push_runs(&mut report, &scenario.id, &format!("{v}."), payload as u64, &runs, &sim, scenario.repeats);
            let get = |m: &str| report.value(&format!("{v}.{m}"), payload as u64);
            means.push((get("latency_ms"), get("bandwidth_kbps"), get("t_switching_avg_ms")));
        }
        let (de, ed) = (means[0], means[1]);
        for (metric, a, b) in [
            ("ratio.latency", de.0, ed.0),
            ("ratio.bandwidth", de.1, ed.1),
            ("ratio.t_switching_avg", de.2, ed.2),
        ] {
            if let (Some(a), Some(b)) = (a, b) {
                report.push_value(&scenario.id, metric, payload as u64, b / a);
            }
        }
    }
    Ok(report)
}

/// Local execution on each device against offloading, per workload size.
pub fn offload_bench(scenario: &Scenario, overrides: Overrides) -> Result<Report, CliError> {
    let mut scenario = scenario.clone();
    overrides.apply(&mut scenario)?;
    let sim = scenario.simulation(overrides.trace)?;
    let config = scenario.protocol();
    let (main, offloadee) = scenario.devices()?;
    let tasks = scenario.tasks()?;
    let repeats = scenario.repeats;

    type SizeResult = (TaskOutcome, TaskOutcome, Vec<Option<TaskOutcome>>);
    let results: Vec<SizeResult> = tasks
        .par_iter()
        .map(|(_, task)| {
            let result = task.workload.execute().map_err(RuntimeError::from)?;
            let local = execute_local_with(&main, task, result.clone())?;
            let remote = execute_local_with(&offloadee, task, result.clone())?;
            let offloaded = (0..repeats as u64)
                .into_par_iter()
                .map(|r| match offload_task_with(&main, &offloadee, task, &config, &sim.with_repeat(r), result.clone()) {
                    Ok(o) => Ok(Some(o)),
                    Err(RuntimeError::FailedAtSwitch(k)) => {
                        log::info!("repeat {r} failed at switch {k}");
                        Ok(None)
                    }
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>, RuntimeError>>()?;
            Ok((local, remote, offloaded))
        })
        .collect::<Result<_, CliError>>()?;

    let id = scenario.id.as_str();
    let mut report = Report::default();
    let mut crossover = None;
    for ((size, _), (local, remote, offloaded)) in tasks.iter().zip(&results) {
        let size64 = *size as u64;
        let ok: Vec<&TaskOutcome> = offloaded.iter().flatten().collect();
        report.had_failures |= ok.len() < offloaded.len();
        report.push_value(id, "local_main.wall_time_ms", size64, local.wall_time_ms());
        report.push_value(id, "local_main.energy_mj", size64, local.main_device_energy);
        report.push_value(id, "local_offloadee.wall_time_ms", size64, remote.wall_time_ms());
        report.push_value(id, "local_offloadee.energy_mj", size64, remote.main_device_energy);
        let samples = |f: fn(&TaskOutcome) -> f64| ok.iter().map(|o| f(o)).collect::<Vec<f64>>();
        report.push(id, "offloaded.success_rate", size64, &[ok.len() as f64 / offloaded.len() as f64], 1);
        report.push(id, "offloaded.wall_time_ms", size64, &samples(TaskOutcome::wall_time_ms), repeats);
        report.push(id, "offloaded.main_energy_mj", size64, &samples(|o| o.main_device_energy), repeats);
        report.push(id, "offloaded.offloadee_energy_mj", size64, &samples(|o| o.offloadee_energy), repeats);
        if let (Some(t), Some(e)) = (
            report.value("offloaded.wall_time_ms", size64),
            report.value("offloaded.main_energy_mj", size64),
        ) {
            report.push_value(id, "time_ratio", size64, t / local.wall_time_ms());
            report.push_value(id, "energy_ratio", size64, local.main_device_energy / e);
            if e < local.main_device_energy && crossover.is_none_or(|c| *size < c) {
                crossover = Some(*size);
            }
        }
    }
    if let Some(c) = crossover {
        report.push_value(id, "crossover", c as u64, c as f64);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedRate {
    pub delay_ms: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub variant: ProtocolVariant,
    pub parameter: DelayParameter,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<u32>,
    pub non_monotone_input: bool,
    pub fitted: Vec<FittedRate>,
}

/// Contents of a model file written by `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFile {
    pub threshold: f64,
    pub round_trips: u32,
    pub recommendation: Vec<Recommendation>,
    /// Present when tables for all three delays were given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ReadinessModel>,
}

impl ModelFile {
    pub fn recommended(&self, parameter: DelayParameter) -> Option<u32> {
        self.recommendation
            .iter()
            .find(|r| r.parameter == parameter)
            .and_then(|r| r.delay_ms)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Output(e.to_string()))
    }
}

pub fn load_tables(path: &Path) -> Result<CalibrationTables, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Fits readiness curves to success-rate tables, or to the built-in
/// reference tables when no file is given.
pub fn calibrate_tables(tables: Option<&Path>, threshold: f64) -> Result<ModelFile, CliError> {
    let tables = match tables {
        Some(p) => load_tables(p)?,
        None => reference_tables(),
    };
    let c = calibrate(&tables, threshold)?;
    let recommendation = c
        .fits
        .iter()
        .map(|f| Recommendation {
            variant: f.variant,
            parameter: f.parameter,
            delay_ms: f.recommended,
            non_monotone_input: f.non_monotone_input,
            fitted: f.fitted.iter().map(|&(delay_ms, rate)| FittedRate { delay_ms, rate }).collect(),
        })
        .collect();
    Ok(ModelFile {
        threshold,
        round_trips: c.round_trips,
        recommendation,
        model: c.model().ok(),
    })
}
