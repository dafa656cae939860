use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use onsager_lab::cli::{run, Command, RunOptions};

/// Numerical checks for convex integration constructions on the periodic torus.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on an error.
#[derive(Parser)]
#[command(name = "onsager-lab", version)]
struct Args {
    #[command(subcommand)]
    command: Cmd,

    /// JSON config; every section is optional but `"version": 1` is required.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs the frequency/energy level iteration and writes its trace.
    Iterate,
    /// Builds one Mikado correction step and checks its stress identities.
    BuildStep,
    /// Energy flux and Hölder diagnostics of a velocity field.
    Flux {
        /// PFLD velocity file; the configured synthetic field when omitted.
        field: Option<PathBuf>,
    },
    /// Geometry, potential and partition checks of the Mikado flows.
    MikadoCheck,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Iterate => Command::Iterate,
        Cmd::BuildStep => Command::BuildStep,
        Cmd::Flux { field } => Command::Flux { field },
        Cmd::MikadoCheck => Command::MikadoCheck,
    };
    let opts = RunOptions {
        config: args.config,
        out: args.out,
        seed: args.seed,
        verbose: args.verbose,
    };
    match run(&command, &opts) {
        Ok(outcome) => {
            for c in outcome.manifest.checks.iter().filter(|c| !c.pass) {
                eprintln!("{}", c.line());
            }
            let status = if outcome.passed() { "passed" } else { "FAILED" };
            println!(
                "{} {status}; manifest {}",
                command.name(),
                outcome.manifest_path.display()
            );
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
