//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 I/O or unreadable
//! input, 4 not enough data for the requested estimate.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use attnloop_core::ingest::CohortWindow;
use attnloop_core::sim::PopulationWindow;
use attnloop_core::time::epoch_of;
use attnloop_core::{ConfigError, EstimateError, EventLog};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{run_analysis, run_fit, Analysis, AnalysisError, AnalysisOptions, FitModel};
use crate::config::parse_config;
use crate::formats::{parse_event_log, parse_fan_snapshot, parse_user_list, write_event_log, write_fan_snapshot, LogFormat};
use crate::manifest::{finish_digest, sha256_hex, HashingReader, RunManifest};
use crate::parallel::{simulate_population_parallel, worker_count};
use crate::report::Report;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INSUFFICIENT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Insufficient(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Insufficient(_) => EXIT_INSUFFICIENT,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Option { .. } => CliError::Config(e.to_string()),
            AnalysisError::Estimate(EstimateError::InvalidInput(msg)) => CliError::Config(msg.to_owned()),
            AnalysisError::Estimate(e) => CliError::Insufficient(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "attnloop", version, about = "Simulate and analyse contributor populations driven by attention")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a population and write its event log.
    Simulate(SimulateArgs),
    /// Run one analysis over an event log.
    Analyze(AnalyzeArgs),
    /// Fit geometric and/or power-law models to contribution counts.
    Fit(FitArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model configuration (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub users: u64,
    #[arg(long)]
    pub seed: u64,
    /// First possible arrival: epoch seconds or YYYY-MM-DD (UTC).
    #[arg(long, default_value = "2007-01-01", value_parser = parse_time)]
    pub start: i64,
    /// Capture time: epoch seconds or YYYY-MM-DD (UTC).
    #[arg(long, default_value = "2008-05-01", value_parser = parse_time)]
    pub capture: i64,
    /// Also write fan counts at this time to `fans.csv`.
    #[arg(long, value_parser = parse_time)]
    pub snapshot_time: Option<i64>,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct LogArgs {
    /// Event log (`.csv` is read as CSV, anything else as JSON Lines).
    pub log: PathBuf,
    /// Overrides the capture time in the log header.
    #[arg(long, value_parser = parse_time)]
    pub capture_time: Option<i64>,
    /// Inactivity period, in 30-day months, after which a user counts as stopped.
    #[arg(long = "T-months", default_value_t = 3)]
    pub t_months: u32,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: LogArgs,
    #[arg(long, value_enum)]
    pub analysis: Analysis,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Trailing submissions per user (reverse_index).
    #[arg(long = "K", default_value_t = 5)]
    pub k: usize,
    /// Popularity quantile.
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    #[arg(long, value_parser = parse_time, requires = "window_end")]
    pub window_start: Option<i64>,
    #[arg(long, value_parser = parse_time, requires = "window_start")]
    pub window_end: Option<i64>,
    /// Fan snapshot CSV (fan_bins).
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// File of user ids, one per line, left out of fan_bins.
    #[arg(long)]
    pub exclude_users: Option<PathBuf>,
    /// Fixed bin width for fan_bins instead of powers of two.
    #[arg(long)]
    pub bin_width: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: LogArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub model: FitModel,
    /// Smallest count in the power-law tail.
    #[arg(long)]
    pub x_min: Option<u64>,
    /// Also write `fit.csv`, `fit.json` and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Epoch seconds, or a UTC date `YYYY-MM-DD`.
pub fn parse_time(s: &str) -> Result<i64, String> {
    if let Ok(t) = s.parse::<i64>() {
        return Ok(t);
    }
    let parts: Vec<&str> = s.split('-').collect();
    if let [y, m, d] = parts[..] {
        if let (Ok(y), Ok(m), Ok(d)) = (y.parse::<i32>(), m.parse::<u32>(), d.parse::<u32>()) {
            if (1..=12).contains(&m) && (1..=31).contains(&d) {
                return Ok(epoch_of(y, m, d));
            }
        }
    }
    Err(format!("`{s}` is neither epoch seconds nor YYYY-MM-DD"))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::Fit(args) => fit(args),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let bytes = fs::read(&args.config).map_err(|e| io_error(&args.config, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Config(format!("{}: not UTF-8", args.config.display())))?;
    let params = parse_config(text)?;
    let window = PopulationWindow::new(args.start, args.capture)?;
    if let Some(snap) = args.snapshot_time {
        if !(args.start..=args.capture).contains(&snap) {
            return Err(CliError::Config("--snapshot-time: must lie between --start and --capture".into()));
        }
    }
    create_dir(&args.out)?;
    let pop = simulate_population_parallel(&params, args.users, args.seed, window, args.snapshot_time, worker_count())?;
    let (name, format) = match args.format {
        FormatArg::Jsonl => ("events.jsonl", LogFormat::JsonLines),
        FormatArg::Csv => ("events.csv", LogFormat::Csv),
    };
    let path = args.out.join(name);
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    let mut out = HashingWriter {
        inner: BufWriter::new(file),
        hasher: Sha256::new(),
    };
    write_event_log(&mut out, &pop.log, format).map_err(|e| io_error(&path, e))?;
    if let Some(snapshot) = &pop.snapshot {
        let path = args.out.join("fans.csv");
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        write_fan_snapshot(BufWriter::new(file), snapshot).map_err(|e| io_error(&path, e))?;
    }
    RunManifest::new("simulate", sha256_hex(&bytes), Some(args.seed), Some(params.n_cap))
        .write_to_dir(&args.out)
        .map_err(|e| io_error(&args.out, e))?;
    println!(
        "simulate: {} records from {} users ({} capped at n_cap = {}), {name} sha256 {}",
        pop.log.len(),
        pop.log.user_count(),
        pop.capped,
        params.n_cap,
        finish_digest(out.hasher)
    );
    Ok(())
}

struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Reads the log, reporting skipped lines on stderr.
fn load_log(input: &LogArgs, hasher: &mut Sha256) -> Result<(EventLog, usize), CliError> {
    let file = File::open(&input.log).map_err(|e| io_error(&input.log, e))?;
    let mut reader = BufReader::new(HashingReader::new(file, hasher));
    let parsed = parse_event_log(&mut reader, LogFormat::from_path(&input.log), input.capture_time)
        .map_err(|e| io_error(&input.log, e))?;
    reader.into_inner().drain().map_err(|e| io_error(&input.log, e))?;
    for m in parsed.malformed.iter().take(10) {
        eprintln!("warning: {}: skipped {m}", input.log.display());
    }
    if parsed.malformed.len() > 10 {
        eprintln!("warning: {}: {} more skipped lines", input.log.display(), parsed.malformed.len() - 10);
    }
    Ok((parsed.log, parsed.malformed.len()))
}

fn write_report(dir: &Path, report: &Report, manifest: RunManifest) -> Result<(), CliError> {
    create_dir(dir)?;
    for (stem, table) in &report.tables {
        let path = dir.join(format!("{stem}.csv"));
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        table.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(&path, e))?;
    }
    let path = dir.join(format!("{}.json", report.name));
    let json = serde_json::to_string_pretty(&report.to_json()).map_err(|e| io_error(&path, e))?;
    fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
    manifest.write_to_dir(dir).map_err(|e| io_error(dir, e))
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let mut hasher = Sha256::new();
    let (log, malformed) = load_log(&args.input, &mut hasher)?;
    let mut opts = AnalysisOptions {
        k: args.k,
        q: args.q,
        t_months: args.input.t_months,
        bin_width: args.bin_width,
        ..AnalysisOptions::default()
    };
    if let (Some(start), Some(end)) = (args.window_start, args.window_end) {
        opts.window = Some(CohortWindow::new(start, end)?);
    }
    if let Some(path) = &args.snapshot {
        let file = File::open(path).map_err(|e| io_error(path, e))?;
        let mut reader = BufReader::new(HashingReader::new(file, &mut hasher));
        opts.snapshot = Some(parse_fan_snapshot(&mut reader).map_err(|e| io_error(path, e))?);
        reader.into_inner().drain().map_err(|e| io_error(path, e))?;
    }
    if let Some(path) = &args.exclude_users {
        let file = File::open(path).map_err(|e| io_error(path, e))?;
        let mut reader = BufReader::new(HashingReader::new(file, &mut hasher));
        opts.exclude = parse_user_list(&mut reader).map_err(|e| io_error(path, e))?;
        reader.into_inner().drain().map_err(|e| io_error(path, e))?;
    }
    let mut report = run_analysis(&log, args.analysis, &opts)?;
    report.field("malformed_lines", malformed as u64);
    let manifest = RunManifest::new("analyze", finish_digest(hasher), None, None);
    write_report(&args.out, &report, manifest)?;
    println!("{}", report.summary);
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let mut hasher = Sha256::new();
    let (log, malformed) = load_log(&args.input, &mut hasher)?;
    let mut report = run_fit(&log, args.model, args.x_min, args.input.t_months)?;
    report.field("malformed_lines", malformed as u64);
    if let Some(dir) = &args.out {
        let manifest = RunManifest::new("fit", finish_digest(hasher), None, None);
        write_report(dir, &report, manifest)?;
    }
    println!("{}", report.summary);
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
