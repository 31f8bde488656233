use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsl_core::lsl::Route;
use lsl_lab::{execute, Command, Overrides};

/// Finite-ε scattering-state identity lab.
#[derive(Parser)]
#[command(name = "lsl-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity suite and report every residual.
    Verify(RunArgs),
    /// Tabulate overlaps and Goldberger–Watson gaps over ε.
    Scan(RunArgs),
    /// Dump the Gram matrix of all scattering states.
    Gram(RunArgs),
    /// Dump one scattering state and its T-amplitudes.
    Solve(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment configuration.
    config: PathBuf,
    /// Comma-separated ε values, strictly decreasing.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eps: Option<Vec<f64>>,
    /// Coupling strength.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Output file; `.csv` or `.json` selects the format.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomly sampled potentials.
    #[arg(long)]
    seed: Option<u64>,
    /// Incident channel for `solve`.
    #[arg(long)]
    index: Option<usize>,
    /// ls-solve, low-solve or separable-closed.
    #[arg(long)]
    route: Option<Route>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LSL_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (command, args) = match cli.command {
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Scan(a) => (Command::Scan, a),
        Cmd::Gram(a) => (Command::Gram, a),
        Cmd::Solve(a) => (Command::Solve, a),
    };
    let overrides = Overrides {
        eps: args.eps,
        lambda: args.lambda,
        out: args.out,
        seed: args.seed,
        index: args.index,
        route: args.route,
    };
    let code = execute(
        command,
        &args.config,
        &overrides,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
