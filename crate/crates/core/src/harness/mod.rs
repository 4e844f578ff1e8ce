//! Campaign runner: reads a JSON campaign, runs one experiment and writes
//! its CSV/JSON artifacts.
//!
//! Every Monte Carlo draw comes from a substream indexed by the sweep
//! point, so the bytes written depend on `(config, seed)` only and not on
//! the size of the thread pool.

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};

pub use config::{
    CampaignConfig, Chsh, Experiment, Fringe, OutputConfig, RatesSweep, TableRowExperiment,
    Teleport, Tomo, TomoBasisSet, SCHEMA_VERSION, SWEEP_POWERS_MW,
};
pub use experiments::run_campaign;
pub use output::{
    read_rows, ChshOutput, FringeFitReport, FringeFits, FringeRow, HeraldingRow, PgrRow, RateRow,
    RatesFits, TableRow, TeleportOutput, TomoOutput,
};

use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Process exit code for an error raised while running a campaign.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse(_) => EXIT_CONFIG,
        Error::NotConverged(_) | Error::DegenerateFit(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_FAILURE,
    }
}

/// Worker count from `EPL_THREADS`; `None` leaves rayon's default.
pub fn threads_from_env() -> Result<Option<usize>, Error> {
    match std::env::var("EPL_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "EPL_THREADS must be a positive integer, got `{s}`"
            ))),
        },
    }
}

/// Command-line request, already parsed.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub experiment: String,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Loads, checks and runs a campaign inside a pool of `threads` workers.
/// Returns the written files.
pub fn execute(inv: &Invocation) -> Result<Vec<PathBuf>, Error> {
    if !Experiment::KINDS.contains(&inv.experiment.as_str()) {
        return Err(Error::Config(format!(
            "unknown experiment `{}` (expected one of {})",
            inv.experiment,
            Experiment::KINDS.join(", ")
        )));
    }
    let mut cfg = CampaignConfig::load(&inv.config)?;
    if cfg.experiment.kind() != inv.experiment {
        return Err(Error::Config(format!(
            "command asks for `{}` but the config describes `{}`",
            inv.experiment,
            cfg.experiment.kind()
        )));
    }
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    let out = inv
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    in_pool(inv.threads, || run_campaign(&cfg, &out))
}

fn in_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, Error> + Send,
) -> Result<T, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

/// Runs `inv` and maps the outcome to an exit code, reporting errors on
/// stderr.
pub fn run(inv: &Invocation) -> i32 {
    match execute(inv) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("epl: {e}");
            exit_code(&e)
        }
    }
}

/// Runs an already-parsed configuration into `out` with the given pool
/// size.
pub fn run_config(
    cfg: &CampaignConfig,
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<PathBuf>, Error> {
    cfg.validate()?;
    in_pool(threads, || run_campaign(cfg, out))
}
