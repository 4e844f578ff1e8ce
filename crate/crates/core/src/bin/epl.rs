use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use epl_core::harness::{self, Invocation};

/// Run a simulated photon-pair campaign and write its data files.
#[derive(Debug, Parser)]
#[command(name = "epl", version)]
struct Cli {
    /// rates-sweep, fringe, tomo, chsh, teleport or table-row
    experiment: String,
    /// JSON campaign file
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's output.dir, then ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match harness::threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("epl: {e}");
            return ExitCode::from(harness::exit_code(&e) as u8);
        }
    };
    let inv = Invocation {
        experiment: cli.experiment,
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        threads,
    };
    ExitCode::from(harness::run(&inv) as u8)
}
