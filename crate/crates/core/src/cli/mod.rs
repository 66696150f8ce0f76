//! Command-line front end: configuration, dispatch and CSV output.
//!
//! ```text
//! effcap-mac <region|sumrate|power|validate|effcap> --config <file> [--set key=value ...] --out <dir>
//! ```
//!
//! Exit status is 0 on success, 1 for configuration errors and 2 for numeric
//! failures.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Parser;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cross_validate, execute, CrossCheck};
pub use config::{Command, RunConfig};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(name = "effcap-mac", version, about = "Effective-capacity regions of fading multiple-access channels")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override one configuration key; may be repeated, later wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
}

/// Error carrying its exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Config, message: message.into() }
    }

    /// Numeric failure inside `operation` (`module::function`).
    pub fn numeric(operation: &str, err: crate::Error) -> Self {
        let kind = match err {
            crate::Error::InvalidParameter { .. } => ErrorKind::Config,
            _ => ErrorKind::Numeric,
        };
        Self { kind, message: format!("{operation}: {err}") }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 1,
            ErrorKind::Numeric => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ErrorKind::Config => write!(f, "config error: {}", self.message),
            ErrorKind::Numeric => write!(f, "numeric error: {}", self.message),
        }
    }
}

impl std::error::Error for CliError {}

/// Reads the config file, applies overrides and resolves a relative fading
/// table against the config file's directory.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let overrides = overrides.iter().map(|s| config::parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let mut cfg = RunConfig::from_text(&text, &overrides)?;
    if let config::FadingSpec::Tabulated { table } = &mut cfg.fading {
        if table.is_relative() {
            if let Some(dir) = path.parent() {
                *table = dir.join(&*table);
            }
        }
    }
    Ok(cfg)
}

/// Runs one command and returns the files written.
pub fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&args.config, &args.set)?;
    let tables = execute(args.command, &cfg)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", args.out.display())))?;
    let mut written = Vec::new();
    for table in tables {
        let path = args.out.join(&table.file);
        std::fs::write(&path, table.render(args.command, &cfg))
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
