//! The `horo` command line: identity suite, convergence tables, covering
//! checks and measure dumps.
//!
//! Exit codes: 0 pass, 1 identity failure, 2 usage error, 3 resource cap.

pub mod commands;
pub mod config;
pub mod identities;
pub mod specs;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::commands::DumpKind;
use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("bad spec {spec:?} at column {column}: {message}")]
    Spec { spec: String, column: usize, message: String },
    #[error(transparent)]
    Core(#[from] horocycle::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(horocycle::Error::ResourceCap { .. }) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "horo", version, about = "Horospherical and spherical averages on free group actions")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override the config file, which overrides the defaults.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// `key=value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rank: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub nmax: Option<String>,
    #[arg(long, global = true)]
    pub p: Option<String>,
    #[arg(long, global = true)]
    pub action: Option<String>,
    #[arg(long, global = true)]
    pub density: Option<String>,
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub observable: Option<String>,
    #[arg(long, global = true)]
    pub xi: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long = "cap-sphere", global = true)]
    pub cap_sphere: Option<String>,
    /// Fill the runtime column of convergence tables.
    #[arg(long, global = true)]
    pub timing: bool,
    #[arg(long, global = true)]
    pub instances: Option<String>,
    #[arg(long = "max-points", global = true)]
    pub max_points: Option<String>,
    #[arg(long = "inject-fault", global = true, hide = true)]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the exact-identity suite.
    Identities,
    /// Error table of an averaging family against E[f|F2].
    Converge,
    /// Covering checks on random and boundary instances.
    Covering,
    /// Print an action, density, measure or instance in text form.
    Dump {
        #[arg(value_enum)]
        what: DumpArg,
        /// Index for `mu` (radius) and `eta` (radius 2n); defaults to nmax.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DumpArg {
    Action,
    Density,
    Mu,
    Eta,
    Instance,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_text(&std::fs::read_to_string(path)?)?;
        }
        let pairs = [
            ("rank", &self.rank),
            ("seed", &self.seed),
            ("nmax", &self.nmax),
            ("p", &self.p),
            ("action", &self.action),
            ("density", &self.density),
            ("family", &self.family),
            ("observable", &self.observable),
            ("xi", &self.xi),
            ("out", &self.out),
            ("mode", &self.mode),
            ("cap-sphere", &self.cap_sphere),
            ("instances", &self.instances),
            ("max-points", &self.max_points),
            ("fault", &self.inject_fault),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if self.timing {
            config.timing = true;
        }
        Ok(config)
    }
}

/// Writes `text` to `--out` if given, else to `stdout`.
fn emit(config: &RunConfig, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs one command; `Ok(false)` means a check failed (exit code 1).
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool, CliError> {
    let config = cli.overrides.resolve()?;
    match &cli.command {
        Command::Identities => {
            let (lines, ok) = identities::run_identities(&config);
            let mut text = lines.join("\n");
            text.push('\n');
            emit(&config, stdout, &text)?;
            Ok(ok)
        }
        Command::Converge => {
            let (report, summary) = commands::converge(&config)?;
            let csv = report.to_csv(config.timing);
            if config.out.is_some() {
                stdout.write_all(summary.as_bytes())?;
            } else {
                stderr.write_all(summary.as_bytes())?;
            }
            emit(&config, stdout, &csv)?;
            Ok(true)
        }
        Command::Covering => {
            let rows = commands::covering(&config)?;
            emit(&config, stdout, &commands::covering_csv(&rows))?;
            Ok(rows.iter().all(commands::CoveringRow::passed))
        }
        Command::Dump { what, n } => {
            let kind = match what {
                DumpArg::Action => DumpKind::Action,
                DumpArg::Density => DumpKind::Density,
                DumpArg::Mu => DumpKind::Mu,
                DumpArg::Eta => DumpKind::Eta,
                DumpArg::Instance => DumpKind::Instance,
            };
            emit(&config, stdout, &commands::dump(&config, kind, *n)?)?;
            Ok(true)
        }
    }
}
