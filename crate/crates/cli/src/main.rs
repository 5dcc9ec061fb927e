use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lucaslab::commands::{self, CommandOutput, Invocation};
use lucaslab::{configure_threads, CliError};

#[derive(Parser)]
#[command(name = "lucaslab", version, about = "Closed-form Lucas-Uzawa trajectories and their numerical checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Args {
    /// Configuration file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides output.path from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script (identity only).
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check parameter constraints and print derived constants.
    Validate(Args),
    /// Write a trajectory CSV and its metadata.
    Eval(Args),
    /// Run the oracle, FOC, limit and admissibility checks.
    Verify(Args),
    /// Compare quadrature G(t) with G rebuilt from F(t).
    Identity(Args),
    /// Run a seeded parameter sweep.
    Sweep(Args),
}

type Handler = fn(&Invocation) -> Result<CommandOutput, CliError>;

fn run(cli: Cli) -> Result<CommandOutput, CliError> {
    configure_threads(std::env::var("LUCASLAB_THREADS").ok().as_deref())?;
    let (args, cmd): (&Args, Handler) = match &cli.command {
        Command::Validate(a) => (a, commands::validate),
        Command::Eval(a) => (a, commands::eval),
        Command::Verify(a) => (a, commands::verify),
        Command::Identity(a) => (a, commands::identity),
        Command::Sweep(a) => (a, commands::sweep),
    };
    if args.plot && !matches!(cli.command, Command::Identity(_)) {
        return Err(CliError::Usage("--plot applies to identity only".into()));
    }
    cmd(&Invocation { config: args.config.clone(), out: args.out.clone(), plot: args.plot })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
