//! Scenario files: TOML descriptions of one experiment setup.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nfcsim_core::roleswitch::{DelayParameter, ProtocolConfig, ProtocolVariant, ReadinessModel, Simulation, SwitchHardware};
use nfcsim_core::time::SimDuration;
use nfcsim_core::workloads::{CostModel, Task, DEFAULT_KEY_LENGTH};
use nfcsim_core::{DeviceProfile, LinkConfig, TimingModel};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repeats: u32,
    #[serde(default)]
    pub devices: Vec<DeviceSpec>,
    /// Name of the device that offloads; defaults to the first device.
    #[serde(default)]
    pub main: Option<String>,
    /// Name of the device that computes; defaults to the second device.
    #[serde(default)]
    pub offloadee: Option<String>,
    #[serde(default)]
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub timing: TimingSpec,
    #[serde(default)]
    pub link: LinkSpec,
    #[serde(default)]
    pub hardware: HardwareSpec,
    #[serde(default)]
    pub readiness: ReadinessSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub workload: Option<WorkloadSpec>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub name: String,
    pub speed_factor: f64,
    pub power_compute_mw: f64,
    pub power_nfc_mw: f64,
    pub power_idle_mw: f64,
}

impl From<&DeviceSpec> for DeviceProfile {
    fn from(d: &DeviceSpec) -> Self {
        DeviceProfile {
            name: d.name.clone(),
            speed_factor: d.speed_factor,
            power_compute: d.power_compute_mw,
            power_nfc: d.power_nfc_mw,
            power_idle: d.power_idle_mw,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub variant: Option<ProtocolVariant>,
    pub t_ms: Option<u32>,
    pub t1_ms: Option<u32>,
    pub t2_ms: Option<u32>,
    pub tap_latency_ms: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    pub t_apdu_2k_ms: Option<f64>,
    pub overhead_ms: Option<f64>,
    pub jitter_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub detection_ms: Option<f64>,
    pub command_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSpec {
    pub reader_enable_ms: Option<f64>,
    pub reader_disable_ms: Option<f64>,
    pub rearm_min_ms: Option<f64>,
    pub handover_min_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadinessSource {
    /// Every switch within the hardware limits succeeds.
    #[default]
    None,
    /// The built-in model.
    Calibrated,
    /// A model file written by `calibrate`.
    File,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadinessSpec {
    #[serde(default)]
    pub model: ReadinessSource,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: DelayParameter,
    pub values: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub round_trips: u32,
    pub chunk_bytes: usize,
    /// Experiments per repeat; the success rate of a repeat is the fraction
    /// of them that complete.
    pub trials: u32,
    pub sweep: Option<SweepSpec>,
    /// Total bytes each side sends, for protocol comparisons.
    pub payload_bytes: Vec<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            round_trips: 50,
            chunk_bytes: 2048,
            trials: 1,
            sweep: None,
            payload_bytes: (1..=8).map(|k| k * 2048).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub name: String,
    /// Board sizes for N Queens, key lengths for RSA.
    #[serde(default)]
    pub sizes: Vec<u32>,
    pub plaintext: Option<String>,
    pub plaintext_file: Option<PathBuf>,
    pub nqueens_per_node_us: Option<u64>,
    pub rsa_2048_ms: Option<f64>,
}

fn ms(v: Option<f64>, default: SimDuration, what: &str) -> Result<SimDuration, CliError> {
    match v {
        None => Ok(default),
        Some(x) if x.is_finite() && x >= 0.0 => Ok(SimDuration::from_millis_f64(x)),
        Some(x) => Err(CliError::Invalid(format!("{what} must be a non-negative number of ms, got {x}"))),
    }
}

impl Scenario {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.repeats == 0 {
            return Err(CliError::Invalid("repeats must be at least 1".into()));
        }
        if self.experiment.trials == 0 {
            return Err(CliError::Invalid("experiment.trials must be at least 1".into()));
        }
        for (i, d) in self.devices.iter().enumerate() {
            if self.devices[..i].iter().any(|e| e.name == d.name) {
                return Err(CliError::Invalid(format!("device `{}` is declared twice", d.name)));
            }
            DeviceProfile::from(d).validate()?;
        }
        self.devices()?;
        self.simulation(false)?;
        Ok(())
    }

    pub fn protocol(&self) -> ProtocolConfig {
        let d = ProtocolConfig::default();
        let p = &self.protocol;
        ProtocolConfig {
            variant: p.variant.unwrap_or(d.variant),
            t_ms: p.t_ms.unwrap_or(d.t_ms),
            t1_ms: p.t1_ms.unwrap_or(d.t1_ms),
            t2_ms: p.t2_ms.unwrap_or(d.t2_ms),
            tap_latency_ms: p.tap_latency_ms.unwrap_or(d.tap_latency_ms),
        }
    }

    fn readiness_model(&self) -> Result<Option<ReadinessModel>, CliError> {
        match (self.readiness.model, &self.readiness.file) {
            (ReadinessSource::None, None) => Ok(None),
            (ReadinessSource::Calibrated, None) => Ok(Some(ReadinessModel::calibrated())),
            (ReadinessSource::File, Some(file)) => load_model(&self.base_dir.join(file)).map(Some),
            (ReadinessSource::File, None) => Err(CliError::Invalid("readiness.model = \"file\" needs readiness.file".into())),
            (_, Some(_)) => Err(CliError::Invalid("readiness.file requires readiness.model = \"file\"".into())),
        }
    }

    /// Link, hardware and readiness settings for this scenario.
    pub fn simulation(&self, trace: bool) -> Result<Simulation, CliError> {
        let dt = TimingModel::default();
        let timing = TimingModel {
            t_apdu_2k: ms(self.timing.t_apdu_2k_ms, dt.t_apdu_2k, "timing.t_apdu_2k_ms")?,
            overhead: ms(self.timing.overhead_ms, dt.overhead, "timing.overhead_ms")?,
            jitter: ms(self.timing.jitter_ms, dt.jitter, "timing.jitter_ms")?,
        };
        let dl = LinkConfig::default();
        let link = LinkConfig {
            detection_latency: ms(self.link.detection_ms, dl.detection_latency, "link.detection_ms")?,
            command_latency: ms(self.link.command_ms, dl.command_latency, "link.command_ms")?,
            timing,
            ..dl
        };
        let dh = SwitchHardware::default();
        let h = &self.hardware;
        let hardware = SwitchHardware {
            reader_enable: ms(h.reader_enable_ms, dh.reader_enable, "hardware.reader_enable_ms")?,
            reader_disable: ms(h.reader_disable_ms, dh.reader_disable, "hardware.reader_disable_ms")?,
            rearm_min: ms(h.rearm_min_ms, dh.rearm_min, "hardware.rearm_min_ms")?,
            handover_min: ms(h.handover_min_ms, dh.handover_min, "hardware.handover_min_ms")?,
        };
        let sim = Simulation {
            link,
            hardware,
            readiness: self.readiness_model()?,
            seed: self.seed,
            repeat: 0,
            trace,
        };
        sim.validate()?;
        Ok(sim)
    }

    /// `(main, offloadee)`, resolved by name.
    pub fn devices(&self) -> Result<(DeviceProfile, DeviceProfile), CliError> {
        let find = |name: &Option<String>, pos: usize, default: DeviceProfile| -> Result<DeviceProfile, CliError> {
            match name {
                Some(n) => self
                    .devices
                    .iter()
                    .find(|d| &d.name == n)
                    .map(DeviceProfile::from)
                    .ok_or_else(|| CliError::Invalid(format!("device `{n}` is not declared"))),
                None => Ok(self.devices.get(pos).map(DeviceProfile::from).unwrap_or(default)),
            }
        };
        Ok((
            find(&self.main, 0, DeviceProfile::main_default())?,
            find(&self.offloadee, 1, DeviceProfile::offloadee_default())?,
        ))
    }

    /// `(size, task)` for every workload size.
    pub fn tasks(&self) -> Result<Vec<(u32, Task)>, CliError> {
        let w = self
            .workload
            .as_ref()
            .ok_or_else(|| CliError::Invalid("scenario has no [workload] section".into()))?;
        let dc = CostModel::default();
        let cost = CostModel {
            nqueens_per_node: w.nqueens_per_node_us.map_or(dc.nqueens_per_node, SimDuration::from_micros),
            rsa_2048: ms(w.rsa_2048_ms, dc.rsa_2048, "workload.rsa_2048_ms")?,
        };
        match w.name.as_str() {
            "nqueens" => {
                let sizes = if w.sizes.is_empty() { (9..=15).collect() } else { w.sizes.clone() };
                sizes
                    .into_iter()
                    .map(|n| {
                        let n8 = u8::try_from(n).map_err(|_| CliError::Invalid(format!("board size {n} is too large")))?;
                        Ok((n, Task::nqueens(n8, &cost)?))
                    })
                    .collect()
            }
            "rsa" => {
                let plaintext = match (&w.plaintext, &w.plaintext_file) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::Invalid("give either plaintext or plaintext_file, not both".into()))
                    }
                    (Some(p), None) => p.clone().into_bytes(),
                    (None, Some(f)) => {
                        let path = self.base_dir.join(f);
                        fs::read(&path).map_err(|source| CliError::Read { path, source })?
                    }
                    (None, None) => b"offloaded plain text".to_vec(),
                };
                let sizes = if w.sizes.is_empty() { vec![DEFAULT_KEY_LENGTH] } else { w.sizes.clone() };
                sizes
                    .into_iter()
                    .map(|bits| Ok((bits, Task::rsa(plaintext.clone(), bits, self.seed, &cost)?)))
                    .collect()
            }
            other => Err(CliError::UnknownWorkload(other.to_string())),
        }
    }
}

/// The `model` table of a file written by `calibrate`.
pub fn load_model(path: &Path) -> Result<ReadinessModel, CliError> {
    #[derive(Deserialize)]
    struct ModelFile {
        model: ReadinessModel,
    }
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let f: ModelFile = toml::from_str(&text).map_err(|e| CliError::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(f.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, CliError> {
        Scenario::parse(text, Path::new("inline.toml"))
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = parse("schema_version = 1\nid = \"x\"\n").unwrap();
        assert_eq!(s.repeats, 1);
        assert_eq!(s.protocol(), ProtocolConfig::default());
        assert_eq!(s.simulation(false).unwrap(), Simulation::deterministic());
        let (m, o) = s.devices().unwrap();
        assert_eq!((m, o), (DeviceProfile::main_default(), DeviceProfile::offloadee_default()));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse("schema_version = 1"), Err(CliError::ConfigParse { .. })));
        assert!(matches!(parse("schema_version = 2\nid = \"x\""), Err(CliError::Invalid(_))));
        assert!(matches!(parse("schema_version = 1\nid = \"x\"\nrepeats = 0"), Err(CliError::Invalid(_))));
        assert!(matches!(
            parse("schema_version = 1\nid = \"x\"\nmain = \"ghost\""),
            Err(CliError::Invalid(_))
        ));
        assert!(matches!(parse("schema_version = 1\nid = \"x\"\nbogus = 3"), Err(CliError::ConfigParse { .. })));
    }

    #[test]
    fn unknown_workload() {
        let s = parse("schema_version = 1\nid = \"x\"\n[workload]\nname = \"sudoku\"").unwrap();
        assert!(matches!(s.tasks(), Err(CliError::UnknownWorkload(_))));
    }

    #[test]
    fn overrides_apply() {
        let s = parse(
            "schema_version = 1\nid = \"x\"\n[protocol]\nvariant = \"disabling-enabling\"\nt_ms = 690\n\
             [timing]\njitter_ms = 2.5\n[readiness]\nmodel = \"calibrated\"",
        )
        .unwrap();
        assert_eq!(s.protocol(), ProtocolConfig::disabling_enabling(690));
        let sim = s.simulation(false).unwrap();
        assert_eq!(sim.link.timing.jitter, SimDuration::from_micros(2500));
        assert!(sim.is_stochastic());
    }
}
