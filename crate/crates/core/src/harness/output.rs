//! Artifact schemas and writers. CSV files use `.` decimals, LF line
//! endings and shortest round-trip float formatting.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::analysis::{ChshAngles, TomoReport};
use crate::counts::{LinearFit, SinFit};
use crate::polcalc::AngleConvention;
use crate::teleport::{TeleportCounts, TeleportReport};
use crate::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub(crate) fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

/// Reads rows written by the harness back into their structs.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub(crate) fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

pub(crate) fn write_file(
    dir: &Path,
    name: &str,
    bytes: &[u8],
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    written.push(path);
    Ok(())
}

/// Measured rates at one pump power (counts/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub power_mw: f64,
    pub n_signal: f64,
    pub n_idler: f64,
    pub coincidence: f64,
}

/// Heralding efficiencies at one pump power: `eta_signal = C/N_idler`,
/// `eta_idler = C/N_signal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeraldingRow {
    pub power_mw: f64,
    pub eta_signal: f64,
    pub eta_idler: f64,
}

/// Estimated generation rate and coincidences with their linear fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgrRow {
    pub power_mw: f64,
    pub pgr: f64,
    pub coincidence: f64,
    pub pgr_fit: f64,
    pub coincidence_fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesFits {
    pub duration_s: f64,
    pub n_signal: LinearFit,
    pub n_idler: LinearFit,
    pub coincidence: LinearFit,
    pub pgr: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeRow {
    pub theta_s: f64,
    pub theta_i: f64,
    pub coincidence: u64,
    pub fit_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeFitReport {
    pub theta_s: f64,
    pub fit: SinFit,
    /// Visibility of the noiseless model fringe for this signal angle.
    pub analytic_visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeFits {
    pub angle_convention: AngleConvention,
    pub duration_s: f64,
    pub fringes: Vec<FringeFitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoOutput {
    pub duration_s: f64,
    pub n_settings: usize,
    /// Fidelity of the configured source state to `|Φ+⟩`.
    pub true_fidelity: f64,
    pub reconstruction: TomoReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshOutput {
    pub angle_convention: AngleConvention,
    /// Angles in `angle_convention` units.
    pub angles: ChshAngles,
    pub duration_s: f64,
    pub s: f64,
    pub s_analytic: f64,
    pub sigma: f64,
    pub sigmas_above_2: f64,
    pub n_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportOutput {
    /// Whether `bsm_visibility` was fitted to the target fidelity.
    pub calibrated: bool,
    pub target_fidelity: Option<f64>,
    pub report: TeleportReport,
    pub counts: Vec<TeleportCounts>,
}

/// Headline figures of the source: rates per mW of pump, fidelity to
/// `|Φ+⟩` and the symmetric heralding efficiency `sqrt(C/PGR)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub pgr_per_mw: f64,
    pub coincidence_per_mw: f64,
    pub fidelity: f64,
    pub symmetric_heralding: f64,
}
