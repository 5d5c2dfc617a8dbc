use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsuppress::commands;
use qsuppress::config::{AnnealSection, NamedProtocol, OutputFormat, RunConfig};
use qsuppress::CliError;

/// Optimize and check noise-suppression protocols for depolarizing noise.
///
/// Exit codes: 0 success, 1 a check failed, 2 usage or config error, 3 I/O error.
#[derive(Parser)]
#[command(name = "qsuppress", version)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for restarts and sampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed; overrides the config file.
    #[arg(long, global = true, env = "QSUPPRESS_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check channel-representation, fidelity and commutation identities.
    Verify(VerifyArgs),
    /// Optimize over a grid of noise strengths and write one row per point.
    Sweep(SweepArgs),
    /// Optimize at one noise strength and write the best protocol.
    Optimize(OptimizeArgs),
    /// Compare the sampled pipeline fidelity of a protocol with the exact value.
    Montecarlo(MonteCarloArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemArgs {
    /// Hilbert-space dimension.
    #[arg(long, short)]
    dim: Option<usize>,
    /// Instrument outcomes (default: 2 for qubits, d otherwise).
    #[arg(long, short)]
    branches: Option<usize>,
}

#[derive(Args, Clone, Copy)]
struct AnnealArgs {
    /// Independent annealing runs.
    #[arg(long)]
    restarts: Option<usize>,
    /// Steps per restart.
    #[arg(long)]
    steps: Option<usize>,
    /// Temperature at the first step.
    #[arg(long)]
    initial_temperature: Option<f64>,
    /// Temperature factor per step.
    #[arg(long)]
    cooling: Option<f64>,
    /// Perturbation width, in units of √d.
    #[arg(long)]
    step_size: Option<f64>,
    /// Final penalty weight.
    #[arg(long)]
    lambda: Option<f64>,
}

impl AnnealArgs {
    fn section(&self) -> Option<AnnealSection> {
        let s = AnnealSection {
            lambda: self.lambda,
            restarts: self.restarts,
            steps: self.steps,
            initial_temperature: self.initial_temperature,
            cooling: self.cooling,
            step_size: self.step_size,
            ..Default::default()
        };
        (s != AnnealSection::default()).then_some(s)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Random cases per suite.
    #[arg(long)]
    instances: Option<usize>,
    /// Negative control: apply Choi operators with swapped tensor factors.
    #[arg(long)]
    inject_broken_convention: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Comma-separated noise strengths.
    #[arg(long, value_delimiter = ',', conflicts_with = "points")]
    grid: Option<Vec<f64>>,
    /// Evenly spaced noise strengths on [0, 1].
    #[arg(long)]
    points: Option<usize>,
    /// Output format (default: csv).
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[command(flatten)]
    anneal: AnnealArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Depolarizing noise strength.
    #[arg(long, short)]
    epsilon: Option<f64>,
    #[command(flatten)]
    anneal: AnnealArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Depolarizing noise strength.
    #[arg(long, short)]
    epsilon: Option<f64>,
    /// Named protocol.
    #[arg(long, value_enum, conflicts_with = "protocol_file")]
    protocol: Option<NamedProtocol>,
    /// Protocol JSON file, or the output of `optimize`.
    #[arg(long)]
    protocol_file: Option<PathBuf>,
    /// Sampled pipeline runs.
    #[arg(long, short = 'n')]
    samples: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

fn flags(cli_seed: Option<u64>, command: &Command) -> RunConfig {
    let base = RunConfig {
        seed: cli_seed,
        ..Default::default()
    };
    match command {
        Command::Verify(a) => RunConfig {
            instances: a.instances,
            output: a.out.output.clone(),
            ..base
        },
        Command::Sweep(a) => RunConfig {
            dim: a.problem.dim,
            branches: a.problem.branches,
            grid: a.grid.clone(),
            grid_points: a.points,
            format: a.format,
            anneal: a.anneal.section(),
            output: a.out.output.clone(),
            ..base
        },
        Command::Optimize(a) => RunConfig {
            dim: a.problem.dim,
            branches: a.problem.branches,
            epsilon: a.epsilon,
            anneal: a.anneal.section(),
            output: a.out.output.clone(),
            ..base
        },
        Command::Montecarlo(a) => RunConfig {
            dim: a.problem.dim,
            branches: a.problem.branches,
            epsilon: a.epsilon,
            protocol: a.protocol,
            protocol_file: a.protocol_file.clone(),
            samples: a.samples,
            output: a.out.output.clone(),
            ..base
        },
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let overrides = flags(cli.seed, &cli.command);
    // a named protocol on the command line replaces a protocol file from the config
    let file = if overrides.protocol.is_some() {
        RunConfig {
            protocol_file: None,
            ..file
        }
    } else {
        file
    };
    let settings = overrides.overlay(file).resolve()?;
    dispatch(&cli.command, &settings)
}

fn dispatch(command: &Command, settings: &qsuppress::Settings) -> Result<(), CliError> {
    match command {
        Command::Verify(a) => commands::verify(settings, a.inject_broken_convention),
        Command::Sweep(_) => commands::sweep(settings),
        Command::Optimize(_) => commands::optimize(settings),
        Command::Montecarlo(_) => commands::montecarlo(settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
