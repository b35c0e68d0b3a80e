use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qes_cli::commands::{self, Field};
use qes_cli::config::{Overrides, RunConfig};
use qes_cli::{CliError, EXIT_CONFIG};

/// Construct quasi-exactly solvable potentials and verify them numerically.
#[derive(Debug, Parser)]
#[command(name = "qes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid points per axis, one value or one per axis.
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Box half-extent per axis, one value or one per axis.
    #[arg(long = "box", global = true, value_delimiter = ',')]
    domain: Option<Vec<f64>>,
    /// Minimum number of eigenpairs.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Relative eigensolver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    allow_singular_tie: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the model and print F, V and the states at probe points.
    Construct,
    /// Run every check and write the JSON report.
    Verify,
    /// Write a grid quantity as CSV.
    Export {
        #[arg(value_enum)]
        what: What,
    },
    /// Run a built-in preset, or `list` them.
    Preset { name: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum What {
    Potential,
    Psi0,
    Psi1,
    #[value(name = "F", alias = "f")]
    F,
}

impl From<What> for Field {
    fn from(w: What) -> Self {
        match w {
            What::Potential => Field::Potential,
            What::Psi0 => Field::Psi0,
            What::Psi1 => Field::Psi1,
            What::F => Field::F,
        }
    }
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid.clone(),
            domain: self.domain.clone(),
            k: self.k,
            tol: self.tol,
            seed: self.seed,
            allow_singular_tie: self.allow_singular_tie,
            out: self.out.clone(),
        }
    }

    fn load(&self) -> Result<RunConfig, CliError> {
        let path = self.config.as_ref().ok_or(CliError::NoConfig)?;
        let mut config = RunConfig::load(path)?;
        config.apply(&self.overrides())?;
        Ok(config)
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Construct => {
            let config = cli.load()?;
            commands::emit(&commands::construct(&config)?, cli.out.as_deref())?;
            Ok(0)
        }
        Command::Verify => {
            let config = cli.load()?;
            let (report, code) = commands::verify(&config)?;
            commands::emit(&commands::report_json(&report)?, config.out.as_deref())?;
            for name in report.failures() {
                eprintln!("check failed: {name}");
            }
            Ok(code)
        }
        Command::Export { what } => {
            let config = cli.load()?;
            commands::emit(&commands::export(&config, (*what).into())?, cli.out.as_deref())?;
            Ok(0)
        }
        Command::Preset { name } if name == "list" => {
            commands::emit(&commands::preset_list(), cli.out.as_deref())?;
            Ok(0)
        }
        Command::Preset { name } => {
            let outcome = commands::run_preset(name, &cli.overrides())?;
            commands::emit(&commands::report_json(&outcome.report)?, cli.out.as_deref())?;
            for name in outcome.report.failures() {
                eprintln!("check failed: {name}");
            }
            for c in &outcome.comparisons {
                eprintln!("[{}] {}", if c.ok { "ok" } else { "MISMATCH" }, c.what);
            }
            Ok(outcome.exit_code)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
