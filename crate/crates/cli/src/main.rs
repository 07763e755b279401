use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use newsvendor::WeightFamily;
use newsvendor_cli::config::usage;
use newsvendor_cli::{ExperimentConfig, Overrides, UsageError};

const THREADS_VAR: &str = "NVP_THREADS";

#[derive(Parser)]
#[command(name = "nvp", version, about = "Data-driven newsvendor pricing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a simulated dataset.
    Simulate(Args),
    /// Run approximate gradient ascent with one weight family.
    Solve(Args),
    /// Compare decision-dependent, decision-independent, SAA and PTO decisions.
    Compare(Args),
    /// Sample-size or step-size sweep.
    Sweep(Args),
    /// Clean and split the electricity CSV.
    Ingest(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML config file.
    #[arg(value_name = "CONFIG", required_unless_present = "config_flag")]
    config: Option<PathBuf>,
    #[arg(long = "config", value_name = "PATH", conflicts_with = "config")]
    config_flag: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample count of simulated data.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    family: Option<WeightFamily>,
    /// Write prices and features scaled to [0, 1].
    #[arg(long)]
    scaled: bool,
}

impl Args {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .or(self.config_flag.as_ref())
            .expect("clap requires one");
        if !path.exists() {
            return Err(usage(format!("config {} does not exist", path.display())));
        }
        let mut cfg = ExperimentConfig::load(path)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            out: self.out.clone(),
            n: self.n,
            max_iters: self.max_iters,
            family: self.family,
            scaled: self.scaled,
        });
        Ok(cfg)
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .map_err(|_| usage(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    let (args, cmd): (
        &Args,
        fn(&ExperimentConfig) -> anyhow::Result<newsvendor_cli::output::Written>,
    ) = match &cli.command {
        Command::Simulate(a) => (a, newsvendor_cli::cmd_simulate),
        Command::Solve(a) => (a, newsvendor_cli::cmd_solve),
        Command::Compare(a) => (a, newsvendor_cli::cmd_compare),
        Command::Sweep(a) => (a, newsvendor_cli::cmd_sweep),
        Command::Ingest(a) => (a, newsvendor_cli::cmd_ingest),
    };
    let cfg = args.load()?;
    for path in cmd(&cfg)?.0 {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
