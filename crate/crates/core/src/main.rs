use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cogradar::cli::{execute, RunManifest, Subcommand as Cmd};

#[derive(Parser)]
#[command(
    name = "cogradar",
    version,
    about = "Waveform-agile radar tracking simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config file (TOML, flat dotted keys); defaults apply
    /// when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV results
    #[arg(long)]
    out: PathBuf,
    /// Monte Carlo runs
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Base seed; run k uses seed + k (defaults to the config's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the Monte Carlo fan-out (0 = automatic);
    /// outputs are byte-identical for any value
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one tracking episode and log every cycle
    Simulate(CommonArgs),
    /// Monte Carlo RMSE of EKF, UKF, and CKF with adaptive waveforms
    CompareFilters(CommonArgs),
    /// Paired adaptive-vs-fixed-waveform comparison for one filter
    CompareModes(CommonArgs),
    /// Posterior Cramer-Rao bound curves next to the matching RMSE
    Pcrlb(CommonArgs),
    /// Fit the probabilistic ICA model to a channel matrix
    Pica {
        #[command(flatten)]
        common: CommonArgs,
        /// Input matrix: one channel per line, comma-separated samples
        #[arg(long)]
        input: PathBuf,
    },
}

fn manifest(cmd: Cmd, common: CommonArgs, input: Option<PathBuf>) -> RunManifest {
    RunManifest {
        subcommand: cmd,
        config_path: common.config,
        output_dir: common.out,
        n_runs: common.runs,
        seed: common.seed,
        workers: common.workers,
        input_path: input,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let manifest = match cli.command {
        Command::Simulate(c) => manifest(Cmd::Simulate, c, None),
        Command::CompareFilters(c) => manifest(Cmd::CompareFilters, c, None),
        Command::CompareModes(c) => manifest(Cmd::CompareModes, c, None),
        Command::Pcrlb(c) => manifest(Cmd::Pcrlb, c, None),
        Command::Pica { common, input } => manifest(Cmd::Pica, common, Some(input)),
    };
    match execute(&manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
