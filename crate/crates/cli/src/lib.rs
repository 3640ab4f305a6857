//! Experiment runner: `shellfield <subcommand> --config <path> [--out <path>] [--format csv|json]`.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for
//! usage or configuration errors, 3 when a computation fails.

pub mod commands;
pub mod config;
pub mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Experiment, Format};
use report::Report;

/// Bad invocation or configuration; maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_COMPUTATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "shellfield", version, about = "Mass-shell pairing, operator-algebra and random-field experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum, classical and EM pairings for all mode pairs
    Ip(CommonArgs),
    /// Field commutators of two bumps over a list of offsets
    CommutatorScan(CommonArgs),
    /// Pairing changes under translation, boost, parity and time reversal
    Symmetry(CommonArgs),
    /// Vacuum moments from the operator algebra, closed form and sampling
    Moments(CommonArgs),
    /// Resonance probabilities and the nonlocality witness
    Resonance(CommonArgs),
    /// Quantum versus twice classical pairing after positive-frequency projection
    Factor2(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Result file; the table goes to stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Ip(a)
            | Command::CommutatorScan(a)
            | Command::Symmetry(a)
            | Command::Moments(a)
            | Command::Resonance(a)
            | Command::Factor2(a) => a,
        }
    }

    pub fn execute(&self, exp: &Experiment) -> Result<Report> {
        match self {
            Command::Ip(_) => commands::ip(exp),
            Command::CommutatorScan(_) => commands::commutator_scan(exp),
            Command::Symmetry(_) => commands::symmetry(exp),
            Command::Moments(_) => commands::moments(exp),
            Command::Resonance(_) => commands::resonance(exp),
            Command::Factor2(_) => commands::factor2(exp),
        }
    }
}

fn format_for(explicit: Option<Format>, configured: Option<Format>, out: Option<&Path>) -> Format {
    explicit.or(configured).unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    })
}

fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<()> {
    let write = |w: &mut dyn Write| match format {
        Format::Csv => report.write_csv(w),
        Format::Json => report.write_json(w),
    };
    match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
            print!("{}", report.summary());
            println!("results written to {}", path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

/// Runs one invocation and returns the process exit status. Diagnostics
/// go to stderr; results only to stdout or the output file.
pub fn run(cli: Cli) -> u8 {
    let args = cli.command.args();
    let exp = match Experiment::load(&args.config) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let configured = exp.config.output.as_ref();
    let out = args.out.clone().or_else(|| {
        configured
            .and_then(|o| o.path.clone())
            .map(|p| args.config.parent().map_or(p.clone(), |base| base.join(&p)))
    });
    let format = format_for(args.format, configured.and_then(|o| o.format), out.as_deref());
    let report = match cli.command.execute(&exp) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return if e.downcast_ref::<UsageError>().is_some() { EXIT_USAGE } else { EXIT_COMPUTATION };
        }
    };
    if let Err(e) = emit(&report, format, out.as_deref()) {
        eprintln!("error: {e:#}");
        return EXIT_COMPUTATION;
    }
    if report.passed() {
        EXIT_OK
    } else {
        for c in report.checks.iter().filter(|c| !c.pass) {
            eprintln!("check failed: {}: {}", c.name, c.detail);
        }
        EXIT_CHECK_FAILED
    }
}
