//! Detection and counting statistics.
//!
//! Expected rates follow the lossy-pair model: singles `N = μP·η + dark`,
//! coincidences `C = μP·η_s·η_i` plus `N_s·N_i·τ` accidentals. Per-setting
//! means multiply those rates by the projection probabilities of the
//! two-photon state; coincidences are drawn as their own Poisson stream.

mod fit;
mod record;

pub use fit::{linear_fit, sin_fit, LinearFit, SinFit};
pub use record::{read_csv, write_csv, CountRecord, Setting};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::polcalc::{analyzer_state, kron, projector, trace, CMatrix, PolState};
use crate::rng::{poisson, substream};
use crate::source::{noisy_state, SourceConfig};
use crate::{Error, Result};

/// Singles and coincidence rates, counts/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub n_signal: f64,
    pub n_idler: f64,
    pub coincidences: f64,
}

/// Computational-basis resolution of a [`RateTriple`]:
/// `N_s = N_Hs + N_Vs`, `N_i = N_Hi + N_Vi`, `C = C_HH + C_HV + C_VH + C_VV`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisResolved {
    pub n_h_signal: f64,
    pub n_v_signal: f64,
    pub n_h_idler: f64,
    pub n_v_idler: f64,
    pub c_hh: f64,
    pub c_hv: f64,
    pub c_vh: f64,
    pub c_vv: f64,
}

impl BasisResolved {
    pub fn totals(&self) -> RateTriple {
        RateTriple {
            n_signal: self.n_h_signal + self.n_v_signal,
            n_idler: self.n_h_idler + self.n_v_idler,
            coincidences: self.c_hh + self.c_hv + self.c_vh + self.c_vv,
        }
    }
}

pub fn expected_rates(cfg: &SourceConfig) -> RateTriple {
    let pairs = cfg.pair_rate();
    let n_signal = pairs * cfg.eta_signal + cfg.dark_signal;
    let n_idler = pairs * cfg.eta_idler + cfg.dark_idler;
    let accidentals = if cfg.model_accidentals {
        n_signal * n_idler * cfg.coincidence_window_s
    } else {
        0.0
    };
    RateTriple {
        n_signal,
        n_idler,
        coincidences: pairs * cfg.eta_signal * cfg.eta_idler + accidentals,
    }
}

/// Splits the expected rates of `cfg` over H/V analyzers for state `rho`.
pub fn basis_resolved(cfg: &SourceConfig, rho: &PolState) -> Result<BasisResolved> {
    let rates = expected_rates(cfg);
    let p = |s: f64, i: f64| fringe_probability(rho, s, i);
    let (ps_h, pi_h) = h_marginals(rho);
    Ok(BasisResolved {
        n_h_signal: rates.n_signal * ps_h,
        n_v_signal: rates.n_signal * (1.0 - ps_h),
        n_h_idler: rates.n_idler * pi_h,
        n_v_idler: rates.n_idler * (1.0 - pi_h),
        c_hh: rates.coincidences * p(0.0, 0.0)?,
        c_hv: rates.coincidences * p(0.0, 180.0)?,
        c_vh: rates.coincidences * p(180.0, 0.0)?,
        c_vv: rates.coincidences * p(180.0, 180.0)?,
    })
}

/// Heralding efficiency `C/N`.
pub fn heralding(coincidences: f64, singles: f64) -> Result<f64> {
    if singles == 0.0 {
        return Err(Error::ZeroCount("singles"));
    }
    Ok(coincidences / singles)
}

/// Pair generation rate `N_s·N_i/C`.
pub fn pgr(n_signal: f64, n_idler: f64, coincidences: f64) -> Result<f64> {
    if coincidences == 0.0 {
        return Err(Error::ZeroCount("coincidences"));
    }
    Ok(n_signal * n_idler / coincidences)
}

/// `sqrt(C/PGR)`, the common efficiency under the assumption `η_s = η_i`.
pub fn symmetric_heralding(coincidences: f64, pgr: f64) -> Result<f64> {
    if pgr == 0.0 {
        return Err(Error::ZeroCount("pair generation rate"));
    }
    Ok((coincidences / pgr).sqrt())
}

/// Probability of projecting `rho` onto `|ψ_θs⟩ ⊗ |ψ_θi⟩` (Bloch-plane
/// analyzers, degrees).
pub fn fringe_probability(rho: &PolState, theta_s: f64, theta_i: f64) -> Result<f64> {
    joint_probability(rho, &analyzer_state(theta_s), &analyzer_state(theta_i))
}

/// `Tr(ρ · |a⟩⟨a| ⊗ |b⟩⟨b|)` on a two-qubit state.
pub fn joint_probability(rho: &PolState, signal: &PolState, idler: &PolState) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let proj = kron(&projector(signal), &projector(idler));
    Ok(trace(&(rho.density() * proj)).re.max(0.0))
}

/// Probabilities that the signal, respectively the idler, passes an H analyzer.
fn h_marginals(rho: &PolState) -> (f64, f64) {
    let open = CMatrix::identity(2, 2);
    let h = projector(&PolState::h());
    let m = rho.density();
    let ps = trace(&(&m * kron(&h, &open))).re;
    let pi = trace(&(&m * kron(&open, &h))).re;
    (ps, pi)
}

/// Expected counts of one setting over `duration_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountMeans {
    pub signal: f64,
    pub idler: f64,
    pub coinc: f64,
}

pub fn expected_means(
    rates: &RateTriple,
    rho: &PolState,
    setting: &Setting,
    duration_s: f64,
) -> Result<CountMeans> {
    let (p_joint, p_s, p_i) = setting.probabilities(rho)?;
    Ok(CountMeans {
        signal: rates.n_signal * p_s * duration_s,
        idler: rates.n_idler * p_i * duration_s,
        coinc: rates.coincidences * p_joint * duration_s,
    })
}

/// Poisson counts for every setting, drawn from the state and rates of `cfg`.
pub fn simulate_counts(
    cfg: &SourceConfig,
    settings: &[Setting],
    duration_s: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    cfg.validate()?;
    let rho = noisy_state(cfg)?;
    simulate_counts_for_state(&expected_rates(cfg), &rho, settings, duration_s, seed, 0)
}

/// Poisson counts for arbitrary rates and state. Setting `k` draws from
/// substream `stream_base + k` of `seed`.
pub fn simulate_counts_for_state(
    rates: &RateTriple,
    rho: &PolState,
    settings: &[Setting],
    duration_s: f64,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<CountRecord>> {
    if settings.is_empty() {
        return Err(Error::Empty("settings"));
    }
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::OutOfRange {
            name: "duration_s",
            value: duration_s,
        });
    }
    let means = settings
        .iter()
        .map(|s| expected_means(rates, rho, s, duration_s))
        .collect::<Result<Vec<_>>>()?;
    Ok(settings
        .par_iter()
        .zip(means.par_iter())
        .enumerate()
        .map(|(k, (setting, m))| {
            let mut rng = substream(seed, stream_base + k as u64);
            CountRecord {
                setting: setting.clone(),
                duration_s,
                n_signal: poisson(&mut rng, m.signal),
                n_idler: poisson(&mut rng, m.idler),
                n_coinc: poisson(&mut rng, m.coinc),
            }
        })
        .collect())
}

/// Sums computational-basis records as `N_s = N_Hs + N_Vs`,
/// `N_i = N_Hi + N_Vi` and `C` over all four HH/HV/VH/VV settings.
///
/// Signal singles are read from the HH and VH records, idler singles from
/// the HH and HV records.
pub fn computational_basis_totals(records: &[CountRecord]) -> Result<RateTriple> {
    use crate::polcalc::Cardinal::{H, V};
    let find = |s, i| {
        records
            .iter()
            .find(|r| {
                r.setting
                    == Setting::Basis {
                        signal: s,
                        idler: i,
                    }
            })
            .ok_or(Error::Empty("computational-basis record"))
    };
    let (hh, hv, vh, vv) = (find(H, H)?, find(H, V)?, find(V, H)?, find(V, V)?);
    let t = hh.duration_s;
    Ok(RateTriple {
        n_signal: (hh.n_signal + vh.n_signal) as f64 / t,
        n_idler: (hh.n_idler + hv.n_idler) as f64 / t,
        coincidences: (hh.n_coinc + hv.n_coinc + vh.n_coinc + vv.n_coinc) as f64 / t,
    })
}
