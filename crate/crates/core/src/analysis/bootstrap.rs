//! Parametric Poisson bootstrap over count records.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::CountRecord;
use crate::rng::{poisson, substream};
use crate::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    /// Sample standard deviation of the estimator over resamples.
    pub sigma: f64,
    pub n_resamples: usize,
}

fn resample(records: &[CountRecord], seed: u64, index: u64) -> Vec<CountRecord> {
    let mut rng = substream(seed, index);
    records
        .iter()
        .map(|r| CountRecord {
            setting: r.setting.clone(),
            duration_s: r.duration_s,
            n_signal: poisson(&mut rng, r.n_signal as f64),
            n_idler: poisson(&mut rng, r.n_idler as f64),
            n_coinc: poisson(&mut rng, r.n_coinc as f64),
        })
        .collect()
}

/// Redraws every count as Poisson with its observed value as mean and
/// evaluates `estimator` on each resampled data set. Resample `k` uses
/// substream `k` of `seed`, so results do not depend on the thread pool.
pub fn bootstrap<F>(
    records: &[CountRecord],
    estimator: F,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary>
where
    F: Fn(&[CountRecord]) -> Result<f64> + Sync,
{
    if records.is_empty() {
        return Err(Error::Empty("bootstrap records"));
    }
    if n_resamples < 2 {
        return Err(Error::OutOfRange {
            name: "n_resamples",
            value: n_resamples as f64,
        });
    }
    let values = (0..n_resamples as u64)
        .into_par_iter()
        .map(|k| estimator(&resample(records, seed, k)))
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    // shifted by the first value so constant estimators give exactly zero
    let pivot = values[0];
    let shift = values.iter().map(|v| v - pivot).sum::<f64>() / n;
    let mean = pivot + shift;
    let var = values
        .iter()
        .map(|v| (v - pivot - shift).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok(BootstrapSummary {
        mean,
        sigma: var.sqrt(),
        n_resamples,
    })
}
