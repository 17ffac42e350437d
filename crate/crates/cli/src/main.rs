//! `minigl` command-line entry point.
//!
//! Every subcommand prints (or writes to `--out`) one JSON document that
//! embeds a run manifest. Exit status is 0 on success, 2 on usage or
//! validation errors and 1 on anything else.

mod commands;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "minigl", version, about = "Sampling-based GNN training pipeline on a simulated device")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Worker threads for ID mapping and data-parallel kernels.
    #[arg(long, global = true, env = "MINIGL_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic graph and save it in binary form.
    Gen(commands::GenArgs),
    /// Sample one mini-batch subgraph.
    Sample(commands::SampleArgs),
    /// Schedule windows of batches with and without reordering.
    Reorder(commands::WindowArgs),
    /// Pairwise match-degree statistics over sampled windows.
    StatsMatch(commands::WindowArgs),
    /// Simulate host-to-device feature traffic.
    SimulateIo(commands::SimulateIoArgs),
    /// Evaluate the aggregation memory-time model.
    CostModel(commands::CostModelArgs),
    /// Time the lock-free ID map against a mutex-guarded one.
    BenchMap(commands::BenchMapArgs),
    /// Train a GCN or GIN model end to end.
    Train(commands::TrainArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Sample(_) => "sample",
            Command::Reorder(_) => "reorder",
            Command::StatsMatch(_) => "stats-match",
            Command::SimulateIo(_) => "simulate-io",
            Command::CostModel(_) => "cost-model",
            Command::BenchMap(_) => "bench-map",
            Command::Train(_) => "train",
        }
    }
}

/// How a report was produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub workers: usize,
    pub outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    manifest: RunManifest,
    #[serde(flatten)]
    body: T,
}

/// What a subcommand hands back: its resolved config, seed, side files and
/// report body.
pub struct Outcome {
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub files: Vec<PathBuf>,
    pub body: serde_json::Value,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.workers == 0 {
        return Err(minigl::Error::Config("--workers must be at least 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .context("configuring the worker pool")?;
    let name = cli.command.name();
    let w = cli.workers;
    let outcome = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Sample(a) => commands::sample(a, w),
        Command::Reorder(a) => commands::reorder(a),
        Command::StatsMatch(a) => commands::stats_match(a),
        Command::SimulateIo(a) => commands::simulate_io(a),
        Command::CostModel(a) => commands::cost_model(a),
        Command::BenchMap(a) => commands::bench_map(a, w),
        Command::Train(a) => commands::train(a, w),
    }?;
    let mut outputs = outcome.files;
    if let Some(out) = &cli.out {
        outputs.insert(0, out.clone());
    }
    let report = Report {
        manifest: RunManifest {
            command: name.to_string(),
            config: outcome.config,
            seed: outcome.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            workers: w,
            outputs,
        },
        body: outcome.body,
    };
    match &cli.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, &report)?;
            writeln!(lock)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<minigl::Error>() {
        Some(e) if e.is_user_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
