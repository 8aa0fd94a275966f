//! Command-line entry point. Exit codes: 0 when every check in the verdict
//! passes, 1 when the experiment ran but a check failed, 2 on refusals and
//! hard errors (bad configuration, I/O failure).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use difflim::config::Config;
use difflim::experiments;
use difflim::report::Verdict;

#[derive(Parser)]
#[command(
    name = "difflim",
    about = "Random walk Metropolis diffusion-limit experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file (see configs/ for documented examples).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the [model] section.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica-level parallelism (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for CSV and verdict files (default: current dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form limit functions vs Monte Carlo on an (ell, x) grid.
    #[command(name = "validate-scalars")]
    ValidateScalars(CommonArgs),
    /// Integrate the limit ODE and emit its path.
    Ode(CommonArgs),
    /// Raw chain ensembles to CSV.
    Simulate(CommonArgs),
    /// Replica-mean energy paths against the limit ODE across N.
    Converge(CommonArgs),
    /// Mean acceptance across the (beta, N) grid.
    #[command(name = "acceptance-scaling")]
    AcceptanceScaling(CommonArgs),
    /// Chain terminal marginals against the limit SDE.
    #[command(name = "sde-compare")]
    SdeCompare(CommonArgs),
    /// Wasserstein-1 rate of the acceptance surrogate across N.
    #[command(name = "wass-rate")]
    WassRate(CommonArgs),
    /// Replica-mean energy band under the exact stationary start.
    Stationarity(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::ValidateScalars(a)
            | Command::Ode(a)
            | Command::Simulate(a)
            | Command::Converge(a)
            | Command::AcceptanceScaling(a)
            | Command::SdeCompare(a)
            | Command::WassRate(a)
            | Command::Stationarity(a) => a,
        }
    }
}

fn run(cli: &Cli) -> Result<Verdict> {
    let args = cli.command.common();
    let mut cfg = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.model.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));

    let verdict = match &cli.command {
        Command::ValidateScalars(_) => experiments::run_validate_scalars(&cfg, &out_dir)?,
        Command::Ode(_) => experiments::run_ode(&cfg, &out_dir)?,
        Command::Simulate(_) => experiments::run_simulate(&cfg, &out_dir)?,
        Command::Converge(_) => experiments::run_converge(&cfg, &out_dir)?,
        Command::AcceptanceScaling(_) => experiments::run_acceptance_scaling(&cfg, &out_dir)?,
        Command::SdeCompare(_) => experiments::run_sde_compare(&cfg, &out_dir)?,
        Command::WassRate(_) => experiments::run_wass_rate(&cfg, &out_dir)?,
        Command::Stationarity(_) => experiments::run_stationarity(&cfg, &out_dir)?,
    };
    verdict.write(&out_dir)?;
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(verdict) => {
            print!("{}", verdict.render());
            if verdict.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
