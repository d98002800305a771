use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use holowave::commands::{self, CommandError, CommandResult, RunOutput};
use holowave::config::RunConfig;

#[derive(Parser)]
#[command(name = "holowave", version, about = "Spectral workbench for travelling water waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operator and identity checks with a JSON report of defects.
    Selftest(Args),
    /// Linear dispersion relation c^2(k) as CSV.
    Dispersion(Args),
    /// One Newton solve from the configured guess.
    Solve(Args),
    /// Solve, then continue the branch by pseudo-arclength.
    Continue(Args),
    /// Energy certificate for a stored profile.
    Certify(Args),
    /// Falsification search for pure-capillary solitary waves.
    Search(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration (defaults when omitted).
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set params.c=0.5`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> CommandResult<RunOutput> {
    let args = match &cli.command {
        Command::Selftest(a)
        | Command::Dispersion(a)
        | Command::Solve(a)
        | Command::Continue(a)
        | Command::Certify(a)
        | Command::Search(a) => a,
    };
    let cfg = RunConfig::load(args.config.as_deref(), &args.overrides).map_err(CommandError::Config)?;
    match cli.command {
        Command::Selftest(_) => {
            let (out, report) = commands::cmd_selftest(&cfg)?;
            println!("{}", out.summary);
            if !report.passed {
                let failed = report.failed().iter().map(|s| s.to_string()).collect();
                return Err(CommandError::Selftest(failed));
            }
            Ok(out)
        }
        Command::Dispersion(_) => commands::cmd_dispersion(&cfg),
        Command::Solve(_) => commands::cmd_solve(&cfg),
        Command::Continue(_) => commands::cmd_continue(&cfg),
        Command::Certify(_) => commands::cmd_certify(&cfg),
        Command::Search(_) => commands::cmd_search(&cfg).map(|(out, _)| out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let selftest = matches!(cli.command, Command::Selftest(_));
    match run(cli) {
        Ok(out) => {
            if !selftest {
                println!("{}", out.summary);
            }
            ExitCode::from(commands::EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
