use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scalar_qve::config::Task;
use scalar_qve::run::{run, RunOptions, THREADS_ENV};

#[derive(Parser)]
#[command(
    name = "scalar-qve",
    version,
    about = "Scalar pair production spectra from the quantum Vlasov equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single momentum mode.
    Mode(Common),
    /// Momentum spectrum on a 2D grid.
    Sweep(Common),
    /// Slice density as one field parameter varies.
    Scan(Common),
    /// Turning-point (phase-integral) estimates.
    Semiclassical(Common),
    /// Check conservation laws and formulation agreement.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, help = format!("Worker threads, 0 = automatic [env: {THREADS_ENV}]"))]
    threads: Option<usize>,
    /// Fail the run if any node or row fails.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common) = match cli.command {
        Command::Mode(c) => (Task::Mode, c),
        Command::Sweep(c) => (Task::Sweep, c),
        Command::Scan(c) => (Task::Scan, c),
        Command::Semiclassical(c) => (Task::Semiclassical, c),
        Command::Validate(c) => (Task::Validate, c),
    };
    let outcome = run(
        task,
        &RunOptions {
            config: common.config,
            out: common.out,
            threads: common.threads,
            strict: common.strict,
        },
    );
    if outcome.error.is_some() || outcome.exit.code() != 0 {
        eprintln!("{}", outcome.summary);
    } else {
        println!("{}", outcome.summary);
    }
    ExitCode::from(outcome.exit.code() as u8)
}
