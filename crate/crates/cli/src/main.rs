//! `fgd`: build, query and evaluate vocabulary graph indexes.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error. Every
//! failure prints a single `error: ...` line on stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fgd::bench::Distribution;
use fgd::projection::ProjectionFormat;
use fgd::SearchMode;

#[derive(Parser, Debug)]
#[command(name = "fgd", version, about = "Top-K vocabulary projection through a small-world graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lift a projection onto the sphere and build the graph index.
    Build(BuildArgs),
    /// Decode one or more context vectors.
    Query(QueryArgs),
    /// Compare graph search against the exact oracle.
    Eval(EvalArgs),
    /// Like eval, over a list of ef_search values.
    Bench(EvalArgs),
    /// Write a synthetic projection, frequency file and query file.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct ProjectionArgs {
    /// Projection file.
    #[arg(long)]
    embeddings: PathBuf,
    /// Projection file format: text or bin.
    #[arg(long, default_value = "text")]
    format: ProjectionFormat,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    projection: ProjectionArgs,
    /// Frequency file, validated against the projection.
    #[arg(long)]
    freq: Option<PathBuf>,
    /// Count given to words missing from the frequency file.
    #[arg(long, default_value_t = 1.0)]
    floor: f64,
    /// Max neighbors per node above layer 0.
    #[arg(long = "M", default_value_t = 16, value_parser = at_least_two)]
    m: u64,
    /// Max neighbors per node on layer 0 [default: 2·M].
    #[arg(long = "M0")]
    m0: Option<usize>,
    #[arg(long, default_value_t = 200, value_parser = positive)]
    ef_construction: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Explicit sphere radius U [default: max augmented row norm].
    #[arg(long)]
    bound: Option<f64>,
    /// Index file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    projection: ProjectionArgs,
    /// Context vector, comma separated.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "queries", required_unless_present = "queries")]
    vector: Option<String>,
    /// File with one context vector per line.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    k: u64,
    #[arg(long, default_value_t = 64, value_parser = positive)]
    ef_search: u64,
    /// graph or flat.
    #[arg(long, default_value = "graph")]
    mode: SearchMode,
    /// none, consistent, laplacian or wta.
    #[arg(long, default_value = "none")]
    smooth: String,
    /// Absolute smoothing epsilon (tail probability per word for wta).
    #[arg(long, conflicts_with = "epsilon_frac")]
    epsilon: Option<f64>,
    /// Epsilon as a fraction of the smallest retrieved probability.
    #[arg(long, default_value_t = 0.5)]
    epsilon_frac: f64,
    /// Frequency file (required by consistent and laplacian smoothing).
    #[arg(long)]
    freq: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    floor: f64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    projection: ProjectionArgs,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    k: u64,
    /// One value, or a comma-separated list [default: 128 for eval,
    /// 16,32,64,128,256 for bench].
    #[arg(long, value_delimiter = ',', num_args = 1.., value_parser = positive)]
    ef_search: Vec<u64>,
    /// Build seed to echo in the report.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip latency measurement.
    #[arg(long)]
    no_latency: bool,
    /// Per-query records (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_parser = positive)]
    vocab: u64,
    #[arg(long, value_parser = positive)]
    dim: u64,
    /// gaussian or zipf.
    #[arg(long, default_value = "gaussian")]
    dist: Distribution,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of query vectors to write.
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    /// Projection file format: text or bin.
    #[arg(long, default_value = "text")]
    format: ProjectionFormat,
    /// Output files are <prefix>.proj.{txt,bin}, <prefix>.freq.txt and
    /// <prefix>.queries.txt.
    #[arg(long)]
    out_prefix: PathBuf,
}

fn parse_min(s: &str, min: u64) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v >= min => Ok(v),
        _ => Err(format!("expected an integer >= {min}")),
    }
}

fn positive(s: &str) -> Result<u64, String> {
    parse_min(s, 1)
}

fn at_least_two(s: &str) -> Result<u64, String> {
    parse_min(s, 2)
}

pub(crate) enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<fgd::Error> for Failure {
    fn from(e: fgd::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("error: invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Build(args) => commands::build(args),
        Command::Query(args) => commands::query(args),
        Command::Eval(args) => commands::eval(args, false),
        Command::Bench(args) => commands::eval(args, true),
        Command::Synth(args) => commands::synth(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
