//! `asciiclash` command-line entry point.
//!
//! Exit codes: 0 on success, 1 on a validation error (bad flags, config or
//! inputs, missing credentials), 2 when a campaign or generation step fails.

mod commands;
mod config;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Campaign(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Campaign(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Campaign(m) => f.write_str(m),
        }
    }
}

impl From<asciiclash::Error> for Failure {
    fn from(e: asciiclash::Error) -> Self {
        use asciiclash::Error as E;
        match e {
            E::InvalidWord(_)
            | E::DuplicateWord(_)
            | E::InvalidParam(_)
            | E::MissingEnv(_)
            | E::Manifest { .. }
            | E::MissingExemplar(_)
            | E::CanvasTooSmall { .. }
            | E::CellTooLarge { .. }
            | E::ImageTooSmall { .. } => Failure::Invalid(e.to_string()),
            other => Failure::Campaign(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "asciiclash", version, about = "ASCII-art sentiment probes for vision-language models")]
struct Cli {
    /// TOML run configuration; flags take precedence over its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the core corpus (every word at every level) plus prompt exemplars
    Generate,
    /// Render the font/spacing/resolution sweep
    Sweep,
    /// Per-level SSIM between samples and their originals
    Ssim {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run a sentiment campaign against a manifest
    Eval {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Append-only records file (resumed from when it exists)
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Run the image-similarity study
    Similarity {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        records: Option<PathBuf>,
        /// Ask for recognition from the ASCII image alone, without the original
        #[arg(long)]
        no_hint: bool,
    },
    /// Aggregate records into reports
    Report {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Records files; repeat the flag to combine several
        #[arg(long)]
        records: Vec<PathBuf>,
        /// Also write a CSV of recognition calls for human review
        #[arg(long)]
        manual_review: bool,
    },
    /// Generate, sweep, evaluate and report in one run
    All,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::Generate => commands::generate(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Ssim { manifest } => commands::ssim(&cfg, manifest),
        Command::Eval { manifest, records } => commands::eval(&cfg, manifest, records),
        Command::Similarity {
            manifest,
            records,
            no_hint,
        } => commands::similarity(&cfg, manifest, records, !no_hint),
        Command::Report {
            manifest,
            records,
            manual_review,
        } => commands::report(&cfg, manifest, records, manual_review),
        Command::All => commands::all(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
