use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{
    CampaignConfig, Chsh, Experiment, Fringe, RatesSweep, TableRowExperiment, Teleport, Tomo,
    TomoBasisSet,
};
use super::output::*;
use crate::analysis::{
    bootstrap, chsh_from_records, chsh_s, chsh_settings, mle_reconstruct,
    observations_from_records, tomo_settings, tomo_settings_16, ChshAngles, MleInit, TomoReport,
};
use crate::counts::{
    expected_rates, fringe_probability, heralding, linear_fit, pgr, simulate_counts_for_state,
    sin_fit, symmetric_heralding, write_csv, CountRecord, LinearFit, Setting,
};
use crate::polcalc::{fidelity, AngleConvention, PolState};
use crate::rng::derive_seed;
use crate::source::{ideal_state, noisy_state, SourceConfig};
use crate::teleport::{
    calibrate_visibility, run_teleport, simulate_teleport_counts, TeleportConfig,
};
use crate::{Error, Result};

/// Runs the configured experiment and writes its artifacts under `out`.
pub fn run_campaign(cfg: &CampaignConfig, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    write_file(out, "campaign.json", cfg.to_json().as_bytes(), &mut written)?;
    let rho = noisy_state(&cfg.source)?;
    match &cfg.experiment {
        Experiment::RatesSweep(x) => {
            rates_sweep(&cfg.source, &rho, x, cfg.seed, out, &mut written)?
        }
        Experiment::Fringe(x) => fringe(&cfg.source, &rho, x, cfg.seed, out, &mut written)?,
        Experiment::Tomo(x) => tomo(&cfg.source, &rho, x, cfg.seed, out, &mut written)?,
        Experiment::Chsh(x) => chsh(&cfg.source, &rho, x, cfg.seed, out, &mut written)?,
        Experiment::Teleport(x) => teleport(&cfg.source, x, cfg.seed, out, &mut written)?,
        Experiment::TableRow(x) => table_row(&cfg.source, &rho, x, cfg.seed, out, &mut written)?,
    }
    Ok(written)
}

fn rates_sweep(
    source: &SourceConfig,
    rho: &PolState,
    x: &RatesSweep,
    seed: u64,
    out: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let records = x
        .powers_mw
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let rates = expected_rates(&source.with_power(p));
            let r = simulate_counts_for_state(
                &rates,
                rho,
                &[Setting::Open],
                x.duration_s,
                seed,
                k as u64,
            )?;
            Ok(r.into_iter().next().expect("one setting"))
        })
        .collect::<Result<Vec<CountRecord>>>()?;
    let t = x.duration_s;
    let rates: Vec<RateRow> = x
        .powers_mw
        .iter()
        .zip(&records)
        .map(|(&p, r)| RateRow {
            power_mw: p,
            n_signal: r.n_signal as f64 / t,
            n_idler: r.n_idler as f64 / t,
            coincidence: r.n_coinc as f64 / t,
        })
        .collect();
    let heralds = rates
        .iter()
        .map(|r| {
            Ok(HeraldingRow {
                power_mw: r.power_mw,
                eta_signal: heralding(r.coincidence, r.n_idler)?,
                eta_idler: heralding(r.coincidence, r.n_signal)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pgrs = rates
        .iter()
        .map(|r| pgr(r.n_signal, r.n_idler, r.coincidence))
        .collect::<Result<Vec<f64>>>()?;
    let column = |f: fn(&RateRow) -> f64| rates.iter().map(f).collect::<Vec<f64>>();
    let fit = |ys: &[f64]| -> Result<LinearFit> { linear_fit(&x.powers_mw, ys) };
    let fits = RatesFits {
        duration_s: t,
        n_signal: fit(&column(|r| r.n_signal))?,
        n_idler: fit(&column(|r| r.n_idler))?,
        coincidence: fit(&column(|r| r.coincidence))?,
        pgr: fit(&pgrs)?,
    };
    let pgr_rows: Vec<PgrRow> = rates
        .iter()
        .zip(&pgrs)
        .map(|(r, &g)| PgrRow {
            power_mw: r.power_mw,
            pgr: g,
            coincidence: r.coincidence,
            pgr_fit: fits.pgr.slope * r.power_mw + fits.pgr.intercept,
            coincidence_fit: fits.coincidence.slope * r.power_mw + fits.coincidence.intercept,
        })
        .collect();
    write_file(out, "fig2a.csv", &csv_bytes(&rates)?, written)?;
    write_file(out, "fig2b.csv", &csv_bytes(&heralds)?, written)?;
    write_file(out, "fig2c.csv", &csv_bytes(&pgr_rows)?, written)?;
    write_file(out, "rates_fits.json", &json_bytes(&fits), written)
}

/// Visibility of the noiseless fringe at signal angle `theta_s_bloch`.
pub(crate) fn analytic_visibility(rho: &PolState, theta_s_bloch: f64) -> Result<f64> {
    let grid: Vec<f64> = (0..36).map(|k| 10.0 * k as f64).collect();
    let p = grid
        .iter()
        .map(|&ti| fringe_probability(rho, theta_s_bloch, ti))
        .collect::<Result<Vec<f64>>>()?;
    Ok(sin_fit(&grid, &p, AngleConvention::Bloch)?.visibility)
}

fn fringe(
    source: &SourceConfig,
    rho: &PolState,
    x: &Fringe,
    seed: u64,
    out: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let c = x.angle_convention;
    let settings = x
        .theta_s
        .iter()
        .flat_map(|&ts| x.theta_i.iter().map(move |&ti| (ts, ti)))
        .map(|(ts, ti)| Setting::bloch(c.to_bloch(ts), c.to_bloch(ti)))
        .collect::<Result<Vec<_>>>()?;
    let records = simulate_counts_for_state(
        &expected_rates(source),
        rho,
        &settings,
        x.duration_s,
        seed,
        0,
    )?;
    let mut rows = Vec::with_capacity(records.len());
    let mut fits = Vec::with_capacity(x.theta_s.len());
    for (&ts, chunk) in x.theta_s.iter().zip(records.chunks(x.theta_i.len())) {
        let counts: Vec<f64> = chunk.iter().map(|r| r.n_coinc as f64).collect();
        let fit = sin_fit(&x.theta_i, &counts, c)?;
        for (&ti, r) in x.theta_i.iter().zip(chunk) {
            rows.push(FringeRow {
                theta_s: ts,
                theta_i: ti,
                coincidence: r.n_coinc,
                fit_value: fit.eval(ti),
            });
        }
        fits.push(FringeFitReport {
            theta_s: ts,
            fit,
            analytic_visibility: analytic_visibility(rho, c.to_bloch(ts))?,
        });
    }
    let report = FringeFits {
        angle_convention: c,
        duration_s: x.duration_s,
        fringes: fits,
    };
    write_file(out, "fig3c.csv", &csv_bytes(&rows)?, written)?;
    write_file(out, "fringe_fits.json", &json_bytes(&report), written)
}

fn records_csv(records: &[CountRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(buf)
}

fn tomo(
    source: &SourceConfig,
    rho: &PolState,
    x: &Tomo,
    seed: u64,
    out: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let tomo_set = match x.basis_set {
        TomoBasisSet::All36 => tomo_settings(),
        TomoBasisSet::Minimal16 => tomo_settings_16(),
    };
    let settings: Vec<Setting> = tomo_set.iter().map(|s| s.setting()).collect();
    let records = simulate_counts_for_state(
        &expected_rates(source),
        rho,
        &settings,
        x.duration_s,
        seed,
        0,
    )?;
    let target = ideal_state();
    let estimate = |rs: &[CountRecord]| {
        let obs = observations_from_records(rs)?;
        let r = mle_reconstruct(&obs, MleInit::LinearInversion, &target)?;
        if !r.converged {
            return Err(Error::NotConverged(format!(
                "maximum-likelihood tomography stopped after {} iterations",
                r.iterations
            )));
        }
        Ok(r)
    };
    let mut result = estimate(&records)?;
    if x.bootstrap_resamples >= 2 {
        let summary = bootstrap(
            &records,
            |rs| Ok(estimate(rs)?.fidelity_to_target),
            x.bootstrap_resamples,
            derive_seed(seed, 1),
        )?;
        result.fidelity_sigma = Some(summary.sigma);
    }
    let report = TomoOutput {
        duration_s: x.duration_s,
        n_settings: settings.len(),
        true_fidelity: fidelity(rho, &target)?,
        reconstruction: TomoReport::from(&result),
    };
    write_file(out, "tomo_counts.csv", &records_csv(&records)?, written)?;
    write_file(out, "tomo.json", &json_bytes(&report), written)
}

fn chsh(
    source: &SourceConfig,
    rho: &PolState,
    x: &Chsh,
    seed: u64,
    out: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let angles = x.bloch_angles();
    let settings = chsh_settings(&angles);
    let records = simulate_counts_for_state(
        &expected_rates(source),
        rho,
        &settings,
        x.duration_s,
        seed,
        0,
    )?;
    let s = chsh_from_records(&records, &angles)?;
    let summary = bootstrap(
        &records,
        |rs| chsh_from_records(rs, &angles),
        x.bootstrap_resamples,
        derive_seed(seed, 1),
    )?;
    let c = x.angle_convention;
    let report = ChshOutput {
        angle_convention: c,
        angles: ChshAngles {
            theta_s: c.from_bloch(angles.theta_s),
            theta_s_prime: c.from_bloch(angles.theta_s_prime),
            theta_i: c.from_bloch(angles.theta_i),
            theta_i_prime: c.from_bloch(angles.theta_i_prime),
        },
        duration_s: x.duration_s,
        s,
        s_analytic: chsh_s(rho, &angles)?.s,
        sigma: summary.sigma,
        sigmas_above_2: (s - 2.0) / summary.sigma,
        n_resamples: summary.n_resamples,
    };
    write_file(out, "chsh_counts.csv", &records_csv(&records)?, written)?;
    write_file(out, "chsh.json", &json_bytes(&report), written)
}

fn teleport(
    source: &SourceConfig,
    x: &Teleport,
    seed: u64,
    out: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut cfg = TeleportConfig {
        source: source.clone(),
        inputs: x.inputs.clone(),
        bsm_visibility: x.bsm_visibility.unwrap_or(1.0),
        convention: x.convention,
        correction_table: x.correction_table.clone(),
    };
    let calibrated = x.bsm_visibility.is_none();
    if calibrated {
        cfg.bsm_visibility =
            calibrate_visibility(&cfg, x.target_fidelity).map_err(|e| match e {
                Error::OutOfRange { .. } => Error::Config(format!(
                    "target_fidelity {} is not reachable with this source",
                    x.target_fidelity
                )),
                other => other,
            })?;
    }
    let report = run_teleport(&cfg)?;
    let counts = simulate_teleport_counts(&report, x.event_rate, x.duration_s, seed)?;
    let mut fig4 = Vec::new();
    report.write_csv(&mut fig4)?;
    let result = TeleportOutput {
        calibrated,
        target_fidelity: calibrated.then_some(x.target_fidelity),
        report,
        counts,
    };
    write_file(out, "fig4.csv", &fig4, written)?;
    write_file(out, "teleport.json", &json_bytes(&result), written)
}

fn table_row(
    source: &SourceConfig,
    rho: &PolState,
    x: &TableRowExperiment,
    seed: u64,
    out: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    if !(source.pump_power_mw > 0.0) {
        return Err(Error::Config(
            "table-row needs a positive pump power".into(),
        ));
    }
    let records = simulate_counts_for_state(
        &expected_rates(source),
        rho,
        &[Setting::Open],
        x.duration_s,
        seed,
        0,
    )?;
    let r = &records[0];
    let t = x.duration_s;
    let (ns, ni, c) = (
        r.n_signal as f64 / t,
        r.n_idler as f64 / t,
        r.n_coinc as f64 / t,
    );
    let p = source.pump_power_mw;
    let pgr_per_mw = pgr(ns, ni, c)? / p;
    let coincidence_per_mw = c / p;
    let row = TableRow {
        pgr_per_mw,
        coincidence_per_mw,
        fidelity: fidelity(rho, &ideal_state())?,
        symmetric_heralding: symmetric_heralding(coincidence_per_mw, pgr_per_mw)?,
    };
    write_file(out, "counts.csv", &records_csv(&records)?, written)?;
    write_file(out, "table_row.json", &json_bytes(&row), written)
}
