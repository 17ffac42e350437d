use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use minigl::bench;
use minigl::compute::TileConfig;
use minigl::fused_map;
use minigl::graph::{self, Graph, GraphGenSpec, GraphModel, NodeId};
use minigl::memsim::{self, CachePolicy, CostParams, IoSimOptions, IoStep, StaticCache};
use minigl::sampler::{self, Fanouts, SubgraphBatch};
use minigl::scheduler::{self, ScheduleOptions};
use minigl::synthetic;
use minigl::trainer::{self, Arch, ModelConfig, PhaseTimes, PipelineFlags};
use minigl::Error;
use serde::Serialize;
use serde_json::json;

use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenModel {
    Er,
    PowerLaw,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchArg {
    Gcn,
    Gin,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyArg {
    None,
    Degree,
}

#[derive(Debug, Args, Serialize)]
pub struct GraphSource {
    /// Binary graph from `gen`, or a whitespace edge list.
    #[arg(long)]
    pub graph: PathBuf,
    /// Node count; required for edge lists.
    #[arg(long)]
    pub nodes: Option<usize>,
}

fn load_graph(src: &GraphSource) -> anyhow::Result<Graph> {
    load_graph_at(&src.graph, src.nodes)
}

fn load_graph_at(path: &Path, nodes: Option<usize>) -> anyhow::Result<Graph> {
    let mut magic = [0u8; 4];
    let n = File::open(path)
        .and_then(|mut f| f.read(&mut magic))
        .with_context(|| format!("reading {}", path.display()))?;
    let g = if n == 4 && &magic == b"MGL1" {
        graph::load_binary(path)?
    } else {
        let nodes = nodes.ok_or_else(|| Error::Config("--nodes is required for edge-list input".into()))?;
        graph::load_edge_list(path, nodes)?
    };
    Ok(g)
}

fn to_value(v: &impl Serialize) -> anyhow::Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub model: GenModel,
    #[arg(long)]
    pub nodes: usize,
    #[arg(long, default_value_t = 16.0)]
    pub avg_degree: f64,
    /// Degree exponent of the power-law model.
    #[arg(long, default_value_t = 2.5)]
    pub exponent: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the binary graph.
    #[arg(long, default_value = "graph.mgl")]
    pub graph: PathBuf,
}

pub fn gen(a: GenArgs) -> anyhow::Result<Outcome> {
    let model = match a.model {
        GenModel::Er => GraphModel::ErdosRenyi { avg_degree: a.avg_degree },
        GenModel::PowerLaw => GraphModel::PowerLaw { avg_degree: a.avg_degree, exponent: a.exponent },
    };
    let spec = GraphGenSpec { model, num_nodes: a.nodes, seed: a.seed };
    let g = graph::generate(&spec)?;
    graph::save_binary(&g, &a.graph)?;
    let degrees = g.degrees();
    Ok(Outcome {
        config: to_value(&a)?,
        seed: Some(a.seed),
        files: vec![a.graph.clone()],
        body: json!({
            "graph": a.graph,
            "spec": spec,
            "num_nodes": g.num_nodes(),
            "num_edges": g.num_edges(),
            "mean_degree": g.num_edges() as f64 / g.num_nodes() as f64,
            "max_degree": degrees.iter().copied().max().unwrap_or(0),
            "isolated_nodes": degrees.iter().filter(|&&d| d == 0).count(),
        }),
    })
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GraphSource,
    /// Comma-separated seed nodes. Defaults to a shuffled batch.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<NodeId>>,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value = "5,10,15")]
    pub fanouts: Fanouts,
    /// Sample one random walk per seed instead of k-hop neighborhoods.
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include node and edge lists in the report.
    #[arg(long)]
    pub emit_edges: bool,
}

pub fn sample(a: SampleArgs, workers: usize) -> anyhow::Result<Outcome> {
    let g = load_graph(&a.source)?;
    let seeds = match &a.seeds {
        Some(s) => s.clone(),
        None => {
            let all: Vec<NodeId> = (0..g.num_nodes() as NodeId).collect();
            sampler::make_epoch_batches(&all, a.batch_size, a.seed)?.swap_remove(0)
        }
    };
    let batch = match a.walk_length {
        Some(len) => sampler::sample_random_walk(&g, &seeds, len, a.seed)?,
        None => sampler::sample_khop(&g, &seeds, &a.fanouts, a.seed)?,
    };
    let table = fused_map::build(&batch.id_stream(), workers)?;
    let batch = table.translate_batch(batch)?;
    let mut body = json!({
        "seeds": batch.seeds,
        "edges_per_layer": batch.layers.iter().map(Vec::len).collect::<Vec<_>>(),
        "num_edges": batch.num_edges(),
        "num_unique_nodes": batch.unique_nodes.len(),
        "num_local": batch.num_local,
    });
    if a.emit_edges {
        body["batch"] = to_value(&batch)?;
    }
    Ok(Outcome { config: to_value(&a)?, seed: Some(a.seed), files: vec![], body })
}

#[derive(Debug, Args, Serialize)]
pub struct WindowArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value = "5,10,15")]
    pub fanouts: Fanouts,
    #[arg(long, default_value_t = 2000)]
    pub batch_size: usize,
    /// Batches per window.
    #[arg(long, default_value_t = 8)]
    pub window: usize,
    /// Number of windows to sample.
    #[arg(long, default_value_t = 1)]
    pub windows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reuse features shared with the previous batch.
    #[arg(long = "match", value_enum, default_value_t = Switch::On)]
    pub matching: Switch,
    /// Feature dimension used for byte counts.
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
}

impl WindowArgs {
    fn sample(&self, g: &Graph) -> anyhow::Result<Vec<Vec<SubgraphBatch>>> {
        let all: Vec<NodeId> = (0..g.num_nodes() as NodeId).collect();
        Ok(sampler::sample_windows(g, &all, &self.fanouts, self.batch_size, self.window, self.windows, self.seed)?)
    }
}

pub fn reorder(a: WindowArgs) -> anyhow::Result<Outcome> {
    let g = load_graph(&a.source)?;
    let windows = a.sample(&g)?;
    let mut rows = Vec::with_capacity(windows.len());
    let (mut sum_default, mut sum_reordered) = (0u64, 0u64);
    for (w, win) in windows.iter().enumerate() {
        let m = scheduler::build_match_matrix(win)?;
        let plain = scheduler::schedule_window(win, &ScheduleOptions::new(false, a.matching.on(), a.dim))?;
        let re = scheduler::schedule_window(win, &ScheduleOptions::new(true, a.matching.on(), a.dim))?;
        sum_default += plain.window_traffic_bytes;
        sum_reordered += re.window_traffic_bytes;
        let matrix: Vec<Vec<f64>> = (0..m.n()).map(|i| (0..m.n()).map(|j| m.get(i, j)).collect()).collect();
        rows.push(json!({
            "window": w,
            "match_matrix": matrix,
            "default_order": plain.order,
            "reordered_order": re.order,
            "default_load_sizes": plain.load_sizes(),
            "reordered_load_sizes": re.load_sizes(),
            "default_traffic_bytes": plain.window_traffic_bytes,
            "reordered_traffic_bytes": re.window_traffic_bytes,
        }));
    }
    let n = windows.len() as f64;
    Ok(Outcome {
        config: to_value(&a)?,
        seed: Some(a.seed),
        files: vec![],
        body: json!({
            "windows": rows,
            "mean_default_traffic_bytes": sum_default as f64 / n,
            "mean_reordered_traffic_bytes": sum_reordered as f64 / n,
        }),
    })
}

pub fn stats_match(a: WindowArgs) -> anyhow::Result<Outcome> {
    let g = load_graph(&a.source)?;
    let windows = a.sample(&g)?;
    let matrices = windows.iter().map(|w| scheduler::build_match_matrix(w)).collect::<minigl::Result<Vec<_>>>()?;
    let stats = scheduler::match_stats(&matrices)?;
    let per_window = matrices
        .iter()
        .map(|m| scheduler::match_stats(std::slice::from_ref(m)))
        .collect::<minigl::Result<Vec<_>>>()?;
    let mut body = to_value(&stats)?;
    body["num_windows"] = json!(windows.len());
    body["per_window"] = to_value(&per_window)?;
    Ok(Outcome { config: to_value(&a)?, seed: Some(a.seed), files: vec![], body })
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateIoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub reorder: Switch,
    /// Fraction of all nodes held in the static device cache.
    #[arg(long, default_value_t = 0.0)]
    pub cache_ratio: f64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Degree)]
    pub policy: PolicyArg,
    /// Evaluate cache ratios 0, 0.1, ..., 1 instead of --cache-ratio.
    #[arg(long)]
    pub sweep: bool,
    /// Include per-batch traffic rows (single ratio only).
    #[arg(long)]
    pub per_batch: bool,
}

pub fn simulate_io(a: SimulateIoArgs) -> anyhow::Result<Outcome> {
    let g = load_graph(&a.window.source)?;
    let windows = a.window.sample(&g)?;
    let sched = ScheduleOptions::new(a.reorder.on(), a.window.matching.on(), a.window.dim);
    let mut steps = Vec::new();
    for (w, win) in windows.iter().enumerate() {
        let order = scheduler::schedule_window(win, &sched)?.order;
        steps.extend(order.into_iter().map(|b| IoStep { window: w, batch: b, nodes: &win[b].unique_nodes[..] }));
    }
    let params = CostParams::default();
    let policy = match a.policy {
        PolicyArg::None => CachePolicy::None,
        PolicyArg::Degree => CachePolicy::Degree,
    };
    let ratios: Vec<f64> = if a.sweep { (0..=10).map(|k| k as f64 / 10.0).collect() } else { vec![a.cache_ratio] };
    let baseline = {
        let o = IoSimOptions { cache_ratio: 0.0, policy: CachePolicy::None, matching: false, feature_dim: a.window.dim };
        memsim::simulate_with_cache(&StaticCache::empty(g.num_nodes()), &steps, &o, &params)?
    };
    let mut points = Vec::with_capacity(ratios.len());
    let mut batches = None;
    for &ratio in &ratios {
        let o = IoSimOptions { cache_ratio: ratio, policy, matching: a.window.matching.on(), feature_dim: a.window.dim };
        let mut r = memsim::simulate_epoch_io(&g, &steps, &o, &params)?;
        let rows = std::mem::take(&mut r.batches);
        if a.per_batch && !a.sweep {
            batches = Some(rows);
        }
        points.push(json!({
            "cache_ratio": ratio,
            "bytes_host_to_device": r.bytes_host_to_device,
            "bytes_served_by_cache": r.bytes_served_by_cache,
            "bytes_served_by_match": r.bytes_served_by_match,
            "modeled_io_seconds": r.modeled_io_seconds,
        }));
    }
    let mut body = json!({
        "num_windows": windows.len(),
        "num_batches": steps.len(),
        "no_cache_no_match_bytes": baseline.bytes_host_to_device,
        "points": points,
    });
    if let Some(rows) = batches {
        body["batches"] = to_value(&rows)?;
    }
    Ok(Outcome { config: to_value(&a)?, seed: Some(a.window.seed), files: vec![], body })
}

#[derive(Debug, Args, Serialize)]
pub struct CostModelArgs {
    #[arg(long)]
    pub fanout: usize,
    #[arg(long)]
    pub dim: usize,
    /// Scratch-memory bandwidth in bytes per second.
    #[arg(long, default_value_t = 12e12)]
    pub shared_bw: f64,
    /// Global-memory bandwidth in bytes per second.
    #[arg(long, default_value_t = 938e9)]
    pub global_bw: f64,
}

pub fn cost_model(a: CostModelArgs) -> anyhow::Result<Outcome> {
    let p = CostParams { shared_bw: a.shared_bw, global_bw: a.global_bw, ..CostParams::default() };
    p.validate()?;
    let naive = memsim::t_naive(a.fanout, a.dim, &p)?;
    let aware = memsim::t_memory_aware(a.fanout, a.dim, &p)?;
    Ok(Outcome {
        config: to_value(&a)?,
        seed: None,
        files: vec![],
        body: json!({
            "fanout": a.fanout,
            "dim": a.dim,
            "params": p,
            "t_naive": naive,
            "t_memory_aware": aware,
            "speedup": naive / aware,
        }),
    })
}

#[derive(Debug, Args, Serialize)]
pub struct BenchMapArgs {
    /// Length of the raw ID stream.
    #[arg(long, default_value_t = 1_000_000)]
    pub ids: usize,
    /// Fraction of entries that repeat an earlier ID.
    #[arg(long, default_value_t = 0.5)]
    pub dup_ratio: f64,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn bench_map(a: BenchMapArgs, workers: usize) -> anyhow::Result<Outcome> {
    let ids = bench::id_stream(a.ids, a.dup_ratio, a.seed)?;
    if ids.is_empty() {
        return Err(Error::Config("--ids must be at least 1".into()).into());
    }
    let report = bench::bench_map(&ids, workers, a.repeats)?;
    Ok(Outcome { config: to_value(&a)?, seed: Some(a.seed), files: vec![], body: to_value(&report)? })
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Graph to train on; labels and features are synthesized. Without it a
    /// two-cluster dataset is generated.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Node count of the generated dataset, or of an edge-list graph.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, value_enum, default_value_t = ArchArg::Gcn)]
    pub arch: ArchArg,
    /// Width of every hidden layer.
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value = "10,10")]
    pub fanouts: Fanouts,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 8)]
    pub window: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "match", value_enum, default_value_t = Switch::On)]
    pub matching: Switch,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub reorder: Switch,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub memory_aware: Switch,
    /// Sample the next window while the current one trains.
    #[arg(long)]
    pub overlap: bool,
    #[arg(long, default_value_t = 8)]
    pub tile_x: usize,
    #[arg(long, default_value_t = 32)]
    pub tile_y: usize,
    #[arg(long, default_value_t = 48 * 1024)]
    pub scratch_bytes: usize,
    /// Per-epoch loss curve.
    #[arg(long, default_value = "loss.csv")]
    pub loss_csv: PathBuf,
}

#[derive(Serialize)]
struct EpochRow {
    epoch: usize,
    loss: f64,
    train_accuracy: f64,
    test_accuracy: f64,
    bytes_host_to_device: u64,
    bytes_served_by_match: u64,
    modeled_io_seconds: f64,
    modeled_aggregation_seconds: f64,
}

#[derive(Serialize)]
struct EpochSummary {
    #[serde(flatten)]
    row: EpochRow,
    times: PhaseTimes,
    window_orders: Vec<Vec<usize>>,
}

pub fn train(a: TrainArgs, workers: usize) -> anyhow::Result<Outcome> {
    let data = match &a.graph {
        Some(path) => synthetic::label_graph(load_graph_at(path, a.nodes)?, a.dim, a.classes, a.seed)?,
        None => {
            if a.classes != 2 {
                return Err(Error::Config("the generated two-cluster dataset has exactly 2 classes".into()).into());
            }
            synthetic::two_cluster(a.nodes.unwrap_or(200), a.dim, a.seed)?
        }
    };
    let mut layer_dims = vec![a.dim];
    layer_dims.extend(std::iter::repeat_n(a.hidden, a.fanouts.num_layers().saturating_sub(1)));
    layer_dims.push(a.classes);
    let cfg = ModelConfig {
        arch: match a.arch {
            ArchArg::Gcn => Arch::Gcn,
            ArchArg::Gin => Arch::Gin,
        },
        layer_dims,
        fanouts: a.fanouts.clone(),
        batch_size: a.batch_size,
        window_n: a.window,
        epochs: a.epochs,
        lr: a.lr,
        seed: a.seed,
        tile: TileConfig::new(a.tile_x, a.tile_y, a.scratch_bytes)?,
        map_workers: workers,
        overlap: a.overlap,
    };
    let flags = PipelineFlags { matching: a.matching.on(), reorder: a.reorder.on(), memory_aware: a.memory_aware.on() };
    let report = trainer::train(&data, &cfg, flags)?;
    let breakdown = trainer::phase_breakdown(&report)?;

    let mut csv = csv::Writer::from_path(&a.loss_csv).with_context(|| format!("creating {}", a.loss_csv.display()))?;
    let mut epochs = Vec::with_capacity(report.epochs.len());
    for e in report.epochs {
        let row = EpochRow {
            epoch: e.epoch,
            loss: e.loss,
            train_accuracy: e.train_accuracy,
            test_accuracy: e.test_accuracy,
            bytes_host_to_device: e.traffic.bytes_host_to_device,
            bytes_served_by_match: e.traffic.bytes_served_by_match,
            modeled_io_seconds: e.traffic.modeled_io_seconds,
            modeled_aggregation_seconds: e.modeled_aggregation_seconds,
        };
        csv.serialize(&row)?;
        epochs.push(EpochSummary { row, times: e.times, window_orders: e.window_orders });
    }
    csv.flush()?;

    let last = epochs.last().expect("at least one epoch");
    let body = json!({
        "dataset": {
            "num_nodes": data.graph.num_nodes(),
            "num_edges": data.graph.num_edges(),
            "num_classes": data.num_classes,
            "train_size": data.train_ids.len(),
            "test_size": data.test_ids.len(),
        },
        "model": { "arch": cfg.arch, "layer_dims": cfg.layer_dims, "tile": cfg.tile },
        "flags": flags,
        "final_loss": last.row.loss,
        "final_test_accuracy": last.row.test_accuracy,
        "breakdown": breakdown,
        "epochs": epochs,
    });
    Ok(Outcome { config: to_value(&a)?, seed: Some(a.seed), files: vec![a.loss_csv.clone()], body })
}
