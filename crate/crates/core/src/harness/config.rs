//! Campaign configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::ChshAngles;
use crate::polcalc::{AngleConvention, BellLabel};
use crate::source::SourceConfig;
use crate::teleport::{BsmConvention, Correction, InputState, TeleportConfig};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Pump powers of the reference power sweep, mW.
pub const SWEEP_POWERS_MW: [f64; 12] =
    [0.2, 0.4, 0.6, 0.8, 1.0, 1.6, 1.8, 3.1, 5.0, 7.0, 10.2, 14.3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "SourceConfig::reference")]
    pub source: SourceConfig,
    pub experiment: Experiment,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for all artifacts; the CLI `--out` flag takes precedence.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    RatesSweep(RatesSweep),
    Fringe(Fringe),
    Tomo(Tomo),
    Chsh(Chsh),
    Teleport(Teleport),
    TableRow(TableRowExperiment),
}

impl Experiment {
    pub const KINDS: [&'static str; 6] = [
        "rates-sweep",
        "fringe",
        "tomo",
        "chsh",
        "teleport",
        "table-row",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::RatesSweep(_) => "rates-sweep",
            Experiment::Fringe(_) => "fringe",
            Experiment::Tomo(_) => "tomo",
            Experiment::Chsh(_) => "chsh",
            Experiment::Teleport(_) => "teleport",
            Experiment::TableRow(_) => "table-row",
        }
    }
}

fn one_second() -> f64 {
    1.0
}

fn sweep_powers() -> Vec<f64> {
    SWEEP_POWERS_MW.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSweep {
    #[serde(default = "sweep_powers")]
    pub powers_mw: Vec<f64>,
    #[serde(default = "one_second")]
    pub duration_s: f64,
}

impl Default for RatesSweep {
    fn default() -> Self {
        Self {
            powers_mw: sweep_powers(),
            duration_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fringe {
    pub angle_convention: AngleConvention,
    pub theta_s: Vec<f64>,
    pub theta_i: Vec<f64>,
    #[serde(default = "one_second")]
    pub duration_s: f64,
}

impl Default for Fringe {
    /// Four fixed signal analyzers, idler scanned 0–180° in 10° steps, all
    /// as half-wave-plate angles.
    fn default() -> Self {
        Self {
            angle_convention: AngleConvention::Hwp,
            theta_s: vec![0.0, 45.0, 90.0, 135.0],
            theta_i: (0..=18).map(|k| 10.0 * k as f64).collect(),
            duration_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomoBasisSet {
    /// All 6 × 6 cardinal pairs.
    All36,
    /// The minimal 16-setting set.
    Minimal16,
}

fn all36() -> TomoBasisSet {
    TomoBasisSet::All36
}

fn tomo_resamples() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tomo {
    #[serde(default = "one_second")]
    pub duration_s: f64,
    #[serde(default = "all36")]
    pub basis_set: TomoBasisSet,
    /// Poisson resamples for the fidelity error bar; 0 disables it.
    #[serde(default = "tomo_resamples")]
    pub bootstrap_resamples: usize,
}

impl Default for Tomo {
    fn default() -> Self {
        Self {
            duration_s: 1.0,
            basis_set: TomoBasisSet::All36,
            bootstrap_resamples: tomo_resamples(),
        }
    }
}

fn chsh_duration() -> f64 {
    1.4
}

fn chsh_resamples() -> usize {
    crate::analysis::DEFAULT_RESAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chsh {
    pub angle_convention: AngleConvention,
    /// Defaults to the angles maximizing `S` for `|Φ+⟩`.
    #[serde(default)]
    pub angles: Option<ChshAngles>,
    /// Integration time per analyzer setting, s.
    #[serde(default = "chsh_duration")]
    pub duration_s: f64,
    #[serde(default = "chsh_resamples")]
    pub bootstrap_resamples: usize,
}

impl Default for Chsh {
    fn default() -> Self {
        Self {
            angle_convention: AngleConvention::Bloch,
            angles: None,
            duration_s: chsh_duration(),
            bootstrap_resamples: chsh_resamples(),
        }
    }
}

impl Chsh {
    /// Configured angles converted to Bloch degrees.
    pub fn bloch_angles(&self) -> ChshAngles {
        let c = self.angle_convention;
        match self.angles {
            None => ChshAngles::default(),
            Some(a) => ChshAngles {
                theta_s: c.to_bloch(a.theta_s),
                theta_s_prime: c.to_bloch(a.theta_s_prime),
                theta_i: c.to_bloch(a.theta_i),
                theta_i_prime: c.to_bloch(a.theta_i_prime),
            },
        }
    }
}

fn teleport_inputs() -> Vec<InputState> {
    TeleportConfig::reference_inputs()
}

fn default_convention() -> BsmConvention {
    BsmConvention::Rotated
}

fn teleport_target() -> f64 {
    0.955
}

fn teleport_rate() -> f64 {
    1e3
}

fn teleport_duration() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Teleport {
    /// Input states; wave-plate inputs are physical plate angles in degrees.
    #[serde(default = "teleport_inputs")]
    pub inputs: Vec<InputState>,
    /// Fixed BSM visibility. When absent it is calibrated so the average
    /// fidelity hits `target_fidelity`.
    #[serde(default)]
    pub bsm_visibility: Option<f64>,
    #[serde(default = "teleport_target")]
    pub target_fidelity: f64,
    #[serde(default = "default_convention")]
    pub convention: BsmConvention,
    #[serde(default)]
    pub correction_table: Option<BTreeMap<BellLabel, Correction>>,
    /// Heralded three-photon event rate summed over outcomes, 1/s.
    #[serde(default = "teleport_rate")]
    pub event_rate: f64,
    /// Integration time per input state, s.
    #[serde(default = "teleport_duration")]
    pub duration_s: f64,
}

impl Default for Teleport {
    fn default() -> Self {
        Self {
            inputs: teleport_inputs(),
            bsm_visibility: None,
            target_fidelity: teleport_target(),
            convention: default_convention(),
            correction_table: None,
            event_rate: teleport_rate(),
            duration_s: teleport_duration(),
        }
    }
}

fn table_duration() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRowExperiment {
    #[serde(default = "table_duration")]
    pub duration_s: f64,
}

impl Default for TableRowExperiment {
    fn default() -> Self {
        Self {
            duration_s: table_duration(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

fn finite_list(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::Config(format!(
            "{name} contains non-finite value {x}"
        )));
    }
    Ok(())
}

impl CampaignConfig {
    /// A runnable configuration with every experiment parameter at its
    /// default.
    pub fn new(seed: u64, experiment: Experiment) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            source: SourceConfig::reference(),
            experiment,
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.source
            .validate()
            .map_err(|e| Error::Config(format!("source: {e}")))?;
        match &self.experiment {
            Experiment::RatesSweep(x) => {
                finite_list("experiment.powers_mw", &x.powers_mw)?;
                if x.powers_mw.iter().any(|&p| p <= 0.0) {
                    return Err(Error::Config(
                        "experiment.powers_mw must be positive".into(),
                    ));
                }
                positive("experiment.duration_s", x.duration_s)?;
            }
            Experiment::Fringe(x) => {
                finite_list("experiment.theta_s", &x.theta_s)?;
                finite_list("experiment.theta_i", &x.theta_i)?;
                positive("experiment.duration_s", x.duration_s)?;
            }
            Experiment::Tomo(x) => {
                positive("experiment.duration_s", x.duration_s)?;
                if x.bootstrap_resamples == 1 {
                    return Err(Error::Config(
                        "experiment.bootstrap_resamples must be 0 or at least 2".into(),
                    ));
                }
            }
            Experiment::Chsh(x) => {
                positive("experiment.duration_s", x.duration_s)?;
                if x.bootstrap_resamples < 2 {
                    return Err(Error::Config(
                        "experiment.bootstrap_resamples must be at least 2".into(),
                    ));
                }
                if let Some(a) = x.angles {
                    finite_list(
                        "experiment.angles",
                        &[a.theta_s, a.theta_s_prime, a.theta_i, a.theta_i_prime],
                    )?;
                }
            }
            Experiment::Teleport(x) => {
                if x.inputs.is_empty() {
                    return Err(Error::Config("experiment.inputs is empty".into()));
                }
                if let Some(v) = x.bsm_visibility {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Config(format!(
                            "experiment.bsm_visibility must lie in [0, 1], got {v}"
                        )));
                    }
                }
                if !(x.event_rate >= 0.0 && x.event_rate.is_finite()) {
                    return Err(Error::Config(
                        "experiment.event_rate must be non-negative".into(),
                    ));
                }
                positive("experiment.duration_s", x.duration_s)?;
            }
            Experiment::TableRow(x) => positive("experiment.duration_s", x.duration_s)?,
        }
        Ok(())
    }
}
