//! `oas`: run oversampled adaptive sensing sweeps from spec files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use oas_core::experiment::{
    run_experiment, write_csv, write_plotdata, ExperimentSpec, ResultRow, Scenario, SweepAlgorithm,
};
use oas_core::par;

#[derive(Parser)]
#[command(
    name = "oas",
    version,
    about = "Monte Carlo sweeps for oversampled adaptive sensing"
)]
#[command(after_help = "Set OAS_WORKERS to bound the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a spec file and write CSV.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run a scenario with inline overrides.
    Sweep(SweepArgs),
    /// Check a spec file without running it.
    Validate { spec: PathBuf },
}

#[derive(Args)]
struct Output {
    /// CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-curve plot blocks here.
    #[arg(long)]
    plotdata: Option<PathBuf>,
    /// Record wall-clock time per cell (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Start from this spec file instead of scenario defaults.
    #[arg(long, conflicts_with = "scenario")]
    spec: Option<PathBuf>,
    /// fig1-decoupled, fig2-alg1, fig3-alg2 or custom.
    #[arg(long)]
    scenario: Option<String>,
    /// alg1, alg2, decoupled-iid or decoupled-orthogonal.
    #[arg(long)]
    algorithm: Option<String>,
    /// Comma-separated inverse loads.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Comma-separated subframe counts.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    ExperimentSpec::from_path(path).with_context(|| format!("invalid spec {}", path.display()))
}

fn sweep_spec(args: &SweepArgs) -> Result<ExperimentSpec> {
    let mut spec = match (&args.spec, &args.scenario) {
        (Some(path), _) => load_spec(path)?,
        (None, Some(name)) => {
            let scenario = Scenario::parse(name)?;
            if scenario == Scenario::Custom && args.algorithm.is_none() {
                bail!("--scenario custom needs --algorithm");
            }
            ExperimentSpec::defaults(scenario)
        }
        (None, None) => bail!("sweep needs --spec or --scenario"),
    };
    if let Some(a) = &args.algorithm {
        spec.algorithm = SweepAlgorithm::parse(a)?;
    }
    if let Some(rho) = &args.rho {
        spec.rho_list = rho.clone();
    }
    if let Some(m) = &args.m {
        spec.m_list = m.clone();
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.master_seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn execute(mut spec: ExperimentSpec, output: &Output) -> Result<()> {
    spec.record_timing |= output.timing;
    let rows: Vec<ResultRow> = run_experiment(&spec)?;
    write_csv(&rows, &output.out)?;
    if let Some(path) = &output.plotdata {
        write_plotdata(&rows, path)?;
    }
    eprintln!(
        "wrote {} rows to {} ({} workers)",
        rows.len(),
        output.out.display(),
        par::worker_count()
    );
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { spec, output } => execute(load_spec(&spec)?, &output),
        Command::Sweep(args) => {
            let spec = sweep_spec(&args)?;
            execute(spec, &args.output)
        }
        Command::Validate { spec } => {
            let s = load_spec(&spec)?;
            println!(
                "ok: {} / {}, {} rho x {} M, {} trials",
                s.scenario.name(),
                s.algorithm.label(),
                s.rho_list.len(),
                s.m_list.len(),
                s.trials
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
