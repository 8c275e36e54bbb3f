//! `zerolab` command-line experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zerolab::SeedSpec;

use config::{Params, DEFAULT_SEED, SEED_ENV};
use report::{Format, Report};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or parameter value (exit 2).
    Config(String),
    /// A resource guard refused the request (exit 3).
    Guard(String),
    /// Anything else: IO, numerical failure (exit 1).
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Guard(m) => write!(f, "resource guard: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<zerolab::Error> for CliError {
    fn from(e: zerolab::Error) -> Self {
        match e {
            zerolab::Error::ResourceGuard(m) => CliError::Guard(m),
            zerolab::Error::Factorization(_) => CliError::Failed(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failed(format!("io: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "zerolab",
    version,
    about = "Zero sets of Brownian motion minus a drift: experiments"
)]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Hit probabilities of level-n Cantor intervals against the 2^-n bound
    Hitting(Common),
    /// First and second moments of the number of hit intervals
    Moments(Common),
    /// Monte Carlo P(Z_n > 0) across gammas and levels
    RegimeScan(Common),
    /// Confirmed and possible zero intervals of one path
    Zeros(Common),
    /// Frequency of isolated zero candidates
    Isolated(Common),
    /// Single-zero drift: linear-tail probability and full-drift runs
    Singleton(Common),
    /// Mean number of isolated grid records
    RecordTimes(Common),
    /// Box counts of the zero set or of a Cantor set
    Dimension(Common),
    /// Survival of inhomogeneous dyadic percolation
    Percolation(Common),
    /// Joint percolation and near-zero count at dyadic centers
    HawkesJoint(Common),
    /// Points where the drift is locally rougher than h^alpha
    Defect(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// `key = value` configuration file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed [default: $ZEROLAB_SEED, then 20240601]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
    /// Output file [default: stdout]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Drift spec, e.g. `cantor:gamma=0.15` or `fbm:H=0.25`
    #[arg(long)]
    drift: Option<String>,
    /// Any other parameter, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

type Runner = fn(&mut Params, SeedSpec) -> Result<Report, CliError>;

impl Experiment {
    fn parts(&self) -> (&'static str, Runner, &Common) {
        use experiments as e;
        match self {
            Experiment::Hitting(c) => ("hitting", e::hitting, c),
            Experiment::Moments(c) => ("moments", e::moments, c),
            Experiment::RegimeScan(c) => ("regime-scan", e::regime_scan, c),
            Experiment::Zeros(c) => ("zeros", e::zeros, c),
            Experiment::Isolated(c) => ("isolated", e::isolated, c),
            Experiment::Singleton(c) => ("singleton", e::singleton, c),
            Experiment::RecordTimes(c) => ("record-times", e::record_times, c),
            Experiment::Dimension(c) => ("dimension", e::dimension, c),
            Experiment::Percolation(c) => ("percolation", e::percolation, c),
            Experiment::HawkesJoint(c) => ("hawkes-joint", e::hawkes_joint, c),
            Experiment::Defect(c) => ("defect", e::defect, c),
        }
    }
}

/// Config file first, then flags on top.
fn load_params(c: &Common) -> Result<Params, CliError> {
    let mut p = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Params::parse(&text)?
        }
        None => Params::default(),
    };
    let flags = [
        ("gamma", &c.gamma),
        ("depth", &c.depth),
        ("paths", &c.paths),
        ("drift", &c.drift),
        ("format", &c.format),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            p.set(key, v.clone());
        }
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set {kv:?}: expected KEY=VALUE")))?;
        p.set(k.trim(), v.trim());
    }
    if let Some(seed) = c.seed {
        p.set("seed", seed.to_string());
    } else if !p.contains("seed") {
        let seed = match std::env::var(SEED_ENV) {
            Ok(v) => v,
            Err(_) => DEFAULT_SEED.to_string(),
        };
        p.set("seed", seed);
    }
    Ok(p)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, runner, common) = cli.experiment.parts();
    let mut params = load_params(common)?;
    let seed: u64 = params.get("seed", DEFAULT_SEED)?;
    let format: Format = params.get_str("format", "csv").parse().map_err(CliError::Config)?;
    if common.threads == Some(0) {
        return Err(CliError::Config("threads must be at least 1".into()));
    }
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(format!("thread pool: {e}")))?;
    }

    let mut report = runner(&mut params, SeedSpec::new(seed, 0))?;
    report.experiment = name.to_string();
    report.config = params.entries().clone();

    match &common.out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::Failed(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            report.write(format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            report.write(format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zerolab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
