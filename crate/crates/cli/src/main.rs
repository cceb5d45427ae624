//! Command-line surface of the coupled-Mathieu Floquet solver.
//!
//! `floquet-modes <command> --config <path> [--out <path>]
//! [--format csv|json] [--threads N]`
//!
//! Exit codes: 0 ok, 1 usage, 2 unstable system, 3 marginal system,
//! 4 solver error. Every failure prints a single diagnostic line of the
//! form `ERROR <code> <module>: <message>` to stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use floquet_modes_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(CoreError::UnstableSystem { .. }) => 2,
            CliError::Core(CoreError::MarginalSystem { .. }) => 3,
            CliError::Core(_) => 4,
        }
    }

    pub fn diagnostic(&self) -> String {
        match self {
            CliError::Usage(msg) => format!("ERROR 1 cli: {msg}"),
            CliError::Core(e) => format!("ERROR {} {}: {e}", self.exit_code(), e.module()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "floquet-modes",
    version,
    about = "Floquet modes of coupled Mathieu and double-cosine Hill systems",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the system and report its stability class
    Validate(RunArgs),
    /// Characteristic exponents with the oracle cross-check
    Exponents(RunArgs),
    /// Fourier coefficient vectors of every stable mode
    Modes(RunArgs),
    /// Propagate a classical state through the decoupled modes
    Propagate(RunArgs),
    /// Raster a two-parameter stability chart
    Scan(RunArgs),
    /// Periodic response to the constant + cos 2t drive
    Inhom(RunArgs),
    /// Wavefunction values on a configuration-space grid
    Wavefunction(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Exponents(_) => "exponents",
            Command::Modes(_) => "modes",
            Command::Propagate(_) => "propagate",
            Command::Scan(_) => "scan",
            Command::Inhom(_) => "inhom",
            Command::Wavefunction(_) => "wavefunction",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Validate(a)
            | Command::Exponents(a)
            | Command::Modes(a)
            | Command::Propagate(a)
            | Command::Scan(a)
            | Command::Inhom(a)
            | Command::Wavefunction(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// output format
    #[arg(long, value_enum, default_value_t = output::Format::Csv)]
    format: output::Format,
    /// worker threads for grid commands
    #[arg(long)]
    threads: Option<usize>,
}

fn dispatch(name: &str, cfg: &config::ConfigFile) -> Result<output::Table, CliError> {
    match name {
        "validate" => commands::validate(cfg),
        "exponents" => commands::exponents(cfg),
        "modes" => commands::modes(cfg),
        "propagate" => commands::propagate(cfg),
        "scan" => commands::scan(cfg),
        "inhom" => commands::inhom(cfg),
        "wavefunction" => commands::wavefunction(cfg),
        _ => unreachable!("clap restricts the command set"),
    }
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let args = cli.command.args();
    let name = cli.command.name();
    let cfg = config::ConfigFile::load(&args.config)?;
    let table = match args.threads {
        None => dispatch(name, &cfg)?,
        Some(n) => {
            if n == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| dispatch(name, &cfg))?
        }
    };
    Ok(table.render(args.format))
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let brief = e.to_string();
            let first = brief.lines().next().unwrap_or("invalid arguments");
            eprintln!("ERROR 1 cli: {first}");
            return 1;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let args = cli.command.args();
            match &args.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("ERROR 1 cli: cannot write {}: {e}", path.display());
                        return 1;
                    }
                }
                None => print!("{text}"),
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}
