//! Command-line driver: config ingestion, command dispatch and reports.
//!
//! [`run`] is the whole binary; it is exposed so tests can drive commands
//! without spawning processes.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::Outcome;
use crate::config::{LoadedConfig, RunConfig};
use crate::error::{CliError, EXIT_CONFIG, EXIT_OK};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "lenstrans",
    version,
    about = "Translated points of equivariant contactomorphisms of lens spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `solver.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Never changes the report.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report path (default: `output.report` of the config, else stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the configured map, its factorization and its generating function.
    Validate,
    /// Direct translated-point scan, time-shift clusters and the 2n verdict.
    Scan,
    /// Run both solvers and compare their (orbit, shift) sets.
    Crosscheck,
    /// Quadratic-index jump of F_t for a linear isotopy.
    IndexJump {
        #[arg(long, allow_negative_numbers = true)]
        t0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t1: Option<f64>,
    },
    /// Lens-space category and the resulting shift bound.
    Bounds {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
    },
    /// Scan the Morse–Bott example, perturbed (exactly 2n shifts) or not.
    SharpnessDemo {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        unperturbed: bool,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs the command on a pool of `--threads` workers and writes its report.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let (outcome, csv_default, report_default) = dispatch(cli)?;
        let out = cli.out.clone().or(report_default);
        match cli.format {
            Format::Json => {
                outcome.report.write_json(out.as_deref())?;
                if let Some(csv) = csv_default {
                    outcome.report.write_csv(&csv)?;
                }
            }
            Format::Csv => {
                let path = out
                    .or(csv_default)
                    .ok_or_else(|| CliError::Config("--format csv needs --out (or output.csv in the config)".into()))?;
                outcome.report.write_csv(&path)?;
            }
        }
        if outcome.exit_code != EXIT_OK {
            eprintln!("{}", summary(&outcome));
        }
        Ok(outcome.exit_code)
    })
}

type Dispatched = (Outcome, Option<PathBuf>, Option<PathBuf>);

fn dispatch(cli: &Cli) -> Result<Dispatched, CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Bounds { p, n } => Ok((commands::bounds(*p, *n, seed.unwrap_or(0))?, None, None)),
        Command::SharpnessDemo { p, n, unperturbed } => Ok((
            commands::sharpness_demo(*p, *n, *unperturbed, seed.unwrap_or(0))?,
            None,
            None,
        )),
        command => {
            let loaded = load(cli.config.as_deref(), seed)?;
            let csv = loaded.config.output.csv.clone();
            let report = loaded.config.output.report.clone();
            let outcome = match command {
                Command::Validate => commands::validate(&loaded)?,
                Command::Scan => commands::scan(&loaded)?,
                Command::Crosscheck => commands::crosscheck_cmd(&loaded)?,
                Command::IndexJump { t0, t1 } => {
                    let from_config = loaded.config.index_jump.map(|w| (w.t0, w.t1));
                    let (d0, d1) = from_config.unwrap_or(commands::DEFAULT_JUMP_WINDOW);
                    commands::index_jump_cmd(&loaded, t0.unwrap_or(d0), t1.unwrap_or(d1))?
                }
                Command::Bounds { .. } | Command::SharpnessDemo { .. } => unreachable!(),
            };
            Ok((outcome, csv, report))
        }
    }
}

fn load(path: Option<&Path>, seed: Option<u64>) -> Result<LoadedConfig, CliError> {
    let path = path.ok_or_else(|| CliError::Config("this command needs --config PATH".into()))?;
    let mut loaded = RunConfig::load(path)?;
    if let Some(s) = seed {
        loaded.config.solver.seed = s;
    }
    Ok(loaded)
}

fn summary(outcome: &Outcome) -> String {
    format!(
        "{}: contract check failed: {}",
        outcome.report.provenance.command, outcome.report.verdict
    )
}
