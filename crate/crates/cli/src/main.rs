use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinprobe_cli::scenario::Status;
use spinprobe_cli::{constants_report, run, CliError, Mode, ScenarioConfig};

#[derive(Parser)]
#[command(name = "spinprobe", version, about = "Two-proton spin dynamics with an induced non-linear collapse term")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Reproduce one of the four reference figures.
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print derived constants without running any dynamics.
    Constants { config: PathBuf },
    /// Average over a detuning profile; the config needs a [sweep] section.
    Sweep { config: PathBuf },
}

fn execute(cmd: Command) -> Result<ExitCode, CliError> {
    let cfg = match cmd {
        Command::Constants { config } => {
            print!("{}", constants_report(&ScenarioConfig::load(&config)?)?);
            return Ok(ExitCode::SUCCESS);
        }
        Command::Run { config } => ScenarioConfig::load(&config)?,
        Command::Figure { id, out } => ScenarioConfig::figure(id, out)?,
        Command::Sweep { config } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if cfg.sweep.is_none() {
                return Err(CliError::Config("sweep: section required for the sweep command".into()));
            }
            cfg.mode = Mode::Sweep;
            cfg.figure_id = None;
            cfg
        }
    };
    let manifest = run(&cfg)?;
    for path in &manifest.artifacts {
        println!("{}", path.display());
    }
    match manifest.status {
        Status::Ok => Ok(ExitCode::SUCCESS),
        Status::NumericalFailure => {
            eprintln!("numerical failure: {}", manifest.error.as_deref().unwrap_or("unknown"));
            Ok(ExitCode::from(3))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("spinprobe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
