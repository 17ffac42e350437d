//! Mini-batch GCN/GIN training over the sampled pipeline.
//!
//! Each epoch shuffles the training nodes into batches and processes them a
//! window at a time: sample every batch of the window, compact its IDs with
//! the fused map, order the window (optionally reordered), account the
//! feature traffic, then run forward, loss, backward and an SGD step per
//! batch in execution order.
//!
//! A batch's nodes are laid out by depth: seeds first, then the nodes first
//! reached at hop 1, hop 2 and so on. Model layer `m` of `k` produces
//! representations for the first `|D_{k-m}|` rows from the first
//! `|D_{k-m+1}|` rows of its input, where `D_j` is the set of nodes reached
//! within `j` hops. Every target keeps the neighbors sampled when it was
//! first expanded, plus a self-loop.

use std::thread;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::compute::{
    aggregate_backward, aggregate_forward, aggregate_naive, dense_update, matmul_a_bt, matmul_at_b,
    Activation, LocalCsr, TileConfig,
};
use crate::error::{Error, Result};
use crate::fused_map;
use crate::graph::{FeatureMatrix, NodeId};
use crate::memsim::{self, CostParams, IoSimOptions, IoStep, StaticCache, TrafficReport};
use crate::rng;
use crate::sampler::{self, Fanouts, SubgraphBatch};
use crate::scheduler::{schedule_sets, ScheduleOptions};
use crate::synthetic::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// Symmetrically normalized aggregation with a self-loop.
    Gcn,
    /// Unit-weight sum aggregation plus the node's own features.
    Gin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Input dimension, hidden dimensions, then the number of classes.
    pub layer_dims: Vec<usize>,
    pub fanouts: Fanouts,
    pub batch_size: usize,
    pub window_n: usize,
    pub epochs: usize,
    pub lr: f32,
    pub seed: u64,
    pub tile: TileConfig,
    /// Threads used to build each batch's ID map.
    pub map_workers: usize,
    /// Sample and map window `w + 1` while window `w` computes.
    pub overlap: bool,
}

impl ModelConfig {
    /// Two-layer GCN with hidden size 64 and the pipeline defaults.
    pub fn gcn(input_dim: usize, num_classes: usize, fanouts: Fanouts) -> Self {
        let mut layer_dims = vec![input_dim];
        layer_dims.extend(std::iter::repeat_n(64, fanouts.num_layers() - 1));
        layer_dims.push(num_classes);
        ModelConfig {
            arch: Arch::Gcn,
            layer_dims,
            fanouts,
            batch_size: 32,
            window_n: 8,
            epochs: 20,
            lr: 0.1,
            seed: 0,
            tile: TileConfig::default(),
            map_workers: 1,
            overlap: false,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    fn validate(&self, data: &Dataset) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::validation("layer_dims needs an input and an output size"));
        }
        if self.num_layers() != self.fanouts.num_layers() {
            return Err(Error::validation(format!(
                "{} model layers but {} fanouts",
                self.num_layers(),
                self.fanouts.num_layers()
            )));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::validation("layer sizes must be positive"));
        }
        if self.layer_dims[0] != data.features.dim() {
            return Err(Error::validation(format!(
                "input size {} does not match feature dimension {}",
                self.layer_dims[0],
                data.features.dim()
            )));
        }
        let classes = *self.layer_dims.last().unwrap();
        if classes < 2 {
            return Err(Error::validation("need at least two output classes"));
        }
        if data.labels.len() != data.graph.num_nodes() || data.features.num_nodes() != data.graph.num_nodes() {
            return Err(Error::validation("labels and features must cover every node"));
        }
        if let Some(&bad) = data.labels.iter().find(|&&l| l >= classes) {
            return Err(Error::validation(format!("label {bad} exceeds {classes} classes")));
        }
        if data.train_ids.is_empty() {
            return Err(Error::validation("training split is empty"));
        }
        if self.batch_size == 0 || self.window_n == 0 || self.epochs == 0 || self.map_workers == 0 {
            return Err(Error::validation("batch size, window, epochs and map workers must be positive"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::validation("learning rate must be finite and non-negative"));
        }
        self.tile.validate()
    }
}

/// Pipeline optimizations. None of them changes the arithmetic of a batch;
/// `reorder` changes the order batches are trained in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineFlags {
    pub matching: bool,
    pub reorder: bool,
    pub memory_aware: bool,
}

impl PipelineFlags {
    pub const ALL_OFF: PipelineFlags = PipelineFlags { matching: false, reorder: false, memory_aware: false };
    pub const ALL_ON: PipelineFlags = PipelineFlags { matching: true, reorder: true, memory_aware: true };
}

/// Wall-clock seconds spent per pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub sample: f64,
    pub map: f64,
    pub io_sim: f64,
    pub compute: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.sample + self.map + self.io_sim + self.compute
    }

    fn add(&mut self, o: &PhaseTimes) {
        self.sample += o.sample;
        self.map += o.map;
        self.io_sim += o.io_sim;
        self.compute += o.compute;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub traffic: TrafficReport,
    /// Modeled aggregation memory time (forward and backward) under the
    /// active kernel.
    pub modeled_aggregation_seconds: f64,
    pub times: PhaseTimes,
    /// Execution order of each window.
    pub window_orders: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: FeatureMatrix,
    pub bias: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub arch: Arch,
    pub layers: Vec<DenseLayer>,
}

impl Model {
    /// Glorot-uniform weights and zero biases.
    pub fn init(cfg: &ModelConfig) -> Model {
        let mut rng = rng::stream(cfg.seed, 1);
        let layers = cfg
            .layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f32).sqrt();
                let data = (0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)).collect();
                DenseLayer {
                    weight: FeatureMatrix::new(fan_in, fan_out, data).expect("finite init"),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Model { arch: cfg.arch, layers }
    }

    fn aggregate(csr: &LocalCsr, x: &FeatureMatrix, tile: &TileConfig, memory_aware: bool) -> Result<FeatureMatrix> {
        if memory_aware {
            aggregate_forward(csr, x, &fit_tile(csr, tile)?)
        } else {
            aggregate_naive(csr, x)
        }
    }

    /// Logits for the batch seeds.
    pub fn forward(&self, blocks: &BatchBlocks, input: &FeatureMatrix, tile: &TileConfig, memory_aware: bool) -> Result<FeatureMatrix> {
        let mut h = input.clone();
        let last = self.layers.len() - 1;
        for (m, (layer, block)) in self.layers.iter().zip(&blocks.blocks).enumerate() {
            let agg = Self::aggregate(&block.forward, &h, tile, memory_aware)?;
            let act = if m == last { Activation::None } else { Activation::Relu };
            h = dense_update(&agg, &layer.weight, &layer.bias, act)?;
        }
        Ok(h)
    }

    /// Mean cross-entropy over the seeds, the number of correct
    /// predictions and the parameter gradients.
    pub fn loss_and_grads(
        &self,
        blocks: &BatchBlocks,
        input: &FeatureMatrix,
        labels: &[usize],
        tile: &TileConfig,
        memory_aware: bool,
    ) -> Result<(f64, usize, Vec<DenseLayer>)> {
        let k = self.layers.len();
        let mut aggs = Vec::with_capacity(k);
        let mut outs: Vec<FeatureMatrix> = Vec::with_capacity(k);
        let mut h = input.clone();
        for (m, (layer, block)) in self.layers.iter().zip(&blocks.blocks).enumerate() {
            let agg = Self::aggregate(&block.forward, &h, tile, memory_aware)?;
            let act = if m == k - 1 { Activation::None } else { Activation::Relu };
            h = dense_update(&agg, &layer.weight, &layer.bias, act)?;
            aggs.push(agg);
            outs.push(h.clone());
        }
        let logits = &outs[k - 1];
        let (loss, correct, mut grad) = softmax_cross_entropy(logits, labels)?;

        let mut grads = Vec::with_capacity(k);
        for m in (0..k).rev() {
            let dw = matmul_at_b(&aggs[m], &grad)?;
            let mut db = vec![0f32; grad.dim()];
            for i in 0..grad.num_nodes() {
                for (b, &g) in db.iter_mut().zip(grad.row(i)) {
                    *b += g;
                }
            }
            grads.push(DenseLayer { weight: dw, bias: db });
            if m == 0 {
                break;
            }
            let d_agg = matmul_a_bt(&grad, &self.layers[m].weight)?;
            let block = &blocks.blocks[m];
            let mut d_in = if memory_aware {
                aggregate_backward(&block.backward, &d_agg, &fit_tile(&block.backward, tile)?)?
            } else {
                aggregate_naive(&block.backward, &d_agg)?
            };
            for (g, &o) in d_in.data_mut().iter_mut().zip(outs[m - 1].data()) {
                if o <= 0.0 {
                    *g = 0.0;
                }
            }
            grad = d_in;
        }
        grads.reverse();
        Ok((loss, correct, grads))
    }

    pub fn sgd_step(&mut self, grads: &[DenseLayer], lr: f32) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, &dw) in layer.weight.data_mut().iter_mut().zip(g.weight.data()) {
                *w -= lr * dw;
            }
            for (b, &db) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * db;
            }
        }
    }
}

/// Largest `X <= tile.x` whose scratch requirement fits the widest row.
fn fit_tile(csr: &LocalCsr, tile: &TileConfig) -> Result<TileConfig> {
    let widest = csr.fanouts().into_iter().max().unwrap_or(0);
    let mut cfg = *tile;
    while cfg.scratch_bytes(widest) > cfg.scratch_limit_bytes && cfg.x > 1 {
        cfg.x /= 2;
    }
    if cfg.scratch_bytes(widest) > cfg.scratch_limit_bytes {
        return Err(Error::Config(format!(
            "a node with {widest} neighbors does not fit {} scratch bytes even with X=1",
            cfg.scratch_limit_bytes
        )));
    }
    Ok(cfg)
}

fn softmax_cross_entropy(logits: &FeatureMatrix, labels: &[usize]) -> Result<(f64, usize, FeatureMatrix)> {
    let n = logits.num_nodes();
    if labels.len() != n || n == 0 {
        return Err(Error::validation("one label per logit row is required"));
    }
    let c = logits.dim();
    let mut grad = FeatureMatrix::zeros(n, c);
    let mut loss = 0f64;
    let mut correct = 0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let exps: Vec<f64> = row.iter().map(|&z| f64::from(z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        loss += sum.ln() - f64::from(row[y] - max);
        let argmax = (0..c).fold(0, |best, j| if row[j] > row[best] { j } else { best });
        if argmax == y {
            correct += 1;
        }
        for (j, g) in grad.row_mut(i).iter_mut().enumerate() {
            let p = exps[j] / sum;
            *g = ((p - if j == y { 1.0 } else { 0.0 }) / n as f64) as f32;
        }
    }
    Ok((loss / n as f64, correct, grad))
}

/// Forward and transposed aggregation graph of one model layer.
#[derive(Debug, Clone)]
pub struct Block {
    pub forward: LocalCsr,
    pub backward: LocalCsr,
}

/// A mapped batch rearranged for the model: one block per model layer,
/// innermost hop first.
#[derive(Debug, Clone)]
pub struct BatchBlocks {
    /// Global IDs of the input rows, in depth order.
    pub input_nodes: Vec<NodeId>,
    pub num_seeds: usize,
    pub blocks: Vec<Block>,
}

impl BatchBlocks {
    /// Builds the per-layer aggregation graphs of a mapped batch.
    /// `local_to_global` inverts the batch's ID map.
    pub fn build(batch: &SubgraphBatch, local_to_global: &[NodeId], arch: Arch) -> Result<Self> {
        if !batch.is_mapped() || batch.local_seeds.len() != batch.seeds.len() {
            return Err(Error::validation("batch must be translated to local ids first"));
        }
        let n = batch.num_local;
        let unset = u32::MAX;
        let mut pos = vec![unset; n];
        let mut input_nodes = Vec::with_capacity(n);
        let place = |local: u64, pos: &mut [u32], input_nodes: &mut Vec<NodeId>| {
            if pos[local as usize] == unset {
                pos[local as usize] = input_nodes.len() as u32;
                input_nodes.push(local_to_global[local as usize]);
            }
        };
        for &s in &batch.local_seeds {
            place(s, &mut pos, &mut input_nodes);
        }
        let mut depth_end = vec![input_nodes.len()];
        for layer in &batch.local_layers {
            for &(_, s, _) in layer {
                place(s, &mut pos, &mut input_nodes);
            }
            depth_end.push(input_nodes.len());
        }
        let k = batch.local_layers.len();
        let mut blocks = Vec::with_capacity(k);
        for m in 1..=k {
            let num_targets = depth_end[k - m];
            let num_sources = depth_end[k - m + 1];
            let mut edges: Vec<(u32, u32, f32)> = Vec::new();
            for layer in &batch.local_layers[..=k - m] {
                edges.extend(layer.iter().map(|&(t, s, w)| (pos[t as usize], pos[s as usize], w)));
            }
            edges.extend((0..num_targets as u32).map(|t| (t, t, 1.0)));
            if arch == Arch::Gcn {
                let mut deg_t = vec![0u32; num_targets];
                let mut deg_s = vec![0u32; num_sources];
                for &(t, s, _) in &edges {
                    deg_t[t as usize] += 1;
                    deg_s[s as usize] += 1;
                }
                for e in &mut edges {
                    e.2 *= 1.0 / ((deg_t[e.0 as usize] as f32) * (deg_s[e.1 as usize] as f32)).sqrt();
                }
            } else {
                for e in &mut edges {
                    e.2 = 1.0;
                }
            }
            let forward = LocalCsr::from_edges(num_targets, num_sources, &edges)?;
            let backward = forward.transpose();
            blocks.push(Block { forward, backward });
        }
        Ok(BatchBlocks { input_nodes, num_seeds: depth_end[0], blocks })
    }

    /// Modeled aggregation memory time of one forward and backward pass.
    pub fn modeled_seconds(&self, dims: &[usize], memory_aware: bool, p: &CostParams) -> Result<f64> {
        let cost = |f: usize, d: usize| {
            if memory_aware {
                memsim::t_memory_aware(f, d, p)
            } else {
                memsim::t_naive(f, d, p)
            }
        };
        let mut total = 0.0;
        for (m, block) in self.blocks.iter().enumerate() {
            for f in block.forward.fanouts().into_iter().filter(|&f| f > 0) {
                total += cost(f, dims[m])?;
            }
            if m > 0 {
                for f in block.backward.fanouts().into_iter().filter(|&f| f > 0) {
                    total += cost(f, dims[m])?;
                }
            }
        }
        Ok(total)
    }
}

/// Samples and maps one batch.
struct Prepared {
    batch: SubgraphBatch,
    local_to_global: Vec<NodeId>,
}

struct PreparedWindow {
    batches: Vec<Prepared>,
    sample_secs: f64,
    map_secs: f64,
}

fn prepare_window(
    data: &Dataset,
    cfg: &ModelConfig,
    seeds: &[Vec<NodeId>],
    epoch: usize,
    first_batch: usize,
) -> Result<PreparedWindow> {
    let mut out = PreparedWindow { batches: Vec::with_capacity(seeds.len()), sample_secs: 0.0, map_secs: 0.0 };
    for (i, s) in seeds.iter().enumerate() {
        let t = Instant::now();
        let batch_seed = rng::mix(&[cfg.seed, epoch as u64, (first_batch + i) as u64]);
        let batch = sampler::sample_khop(&data.graph, s, &cfg.fanouts, batch_seed)?;
        out.sample_secs += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let table = fused_map::build(&batch.id_stream(), cfg.map_workers)?;
        let batch = table.translate_batch(batch)?;
        let local_to_global = table.local_to_global();
        out.map_secs += t.elapsed().as_secs_f64();
        out.batches.push(Prepared { batch, local_to_global });
    }
    Ok(out)
}

fn gather_inputs(data: &Dataset, blocks: &BatchBlocks) -> (FeatureMatrix, Vec<usize>) {
    let input = data.features.gather(blocks.input_nodes.iter().map(|&v| v as usize));
    let labels = blocks.input_nodes[..blocks.num_seeds].iter().map(|&v| data.labels[v as usize]).collect();
    (input, labels)
}

/// Accuracy on `ids` using sampled neighborhoods.
pub fn evaluate(model: &Model, data: &Dataset, cfg: &ModelConfig, ids: &[NodeId], seed: u64) -> Result<f64> {
    if ids.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for (i, chunk) in ids.chunks(cfg.batch_size).enumerate() {
        let batch = sampler::sample_khop(&data.graph, chunk, &cfg.fanouts, rng::mix(&[seed, i as u64]))?;
        let table = fused_map::build(&batch.id_stream(), cfg.map_workers)?;
        let batch = table.translate_batch(batch)?;
        let blocks = BatchBlocks::build(&batch, &table.local_to_global(), model.arch)?;
        let (input, labels) = gather_inputs(data, &blocks);
        let logits = model.forward(&blocks, &input, &cfg.tile, true)?;
        for (r, &y) in labels.iter().enumerate() {
            let row = logits.row(r);
            let argmax = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            correct += usize::from(argmax == y);
        }
    }
    Ok(correct as f64 / ids.len() as f64)
}

pub fn train(data: &Dataset, cfg: &ModelConfig, flags: PipelineFlags) -> Result<TrainReport> {
    train_model(data, cfg, flags).map(|(_, report)| report)
}

/// Trains from a fresh initialization and returns the final model too.
pub fn train_model(data: &Dataset, cfg: &ModelConfig, flags: PipelineFlags) -> Result<(Model, TrainReport)> {
    cfg.validate(data)?;
    let mut model = Model::init(cfg);
    let params = CostParams::default();
    let cache = StaticCache::empty(data.graph.num_nodes());
    let io_opts = IoSimOptions {
        cache_ratio: 0.0,
        policy: memsim::CachePolicy::None,
        matching: flags.matching,
        feature_dim: cfg.layer_dims[0],
    };
    let sched_opts = ScheduleOptions::new(flags.reorder, flags.matching, cfg.layer_dims[0]);
    let mut report = TrainReport { epochs: Vec::with_capacity(cfg.epochs) };

    for epoch in 0..cfg.epochs {
        let batches = sampler::make_epoch_batches(&data.train_ids, cfg.batch_size, rng::mix(&[cfg.seed, epoch as u64, 0xE]))?;
        let windows: Vec<&[Vec<NodeId>]> = batches.chunks(cfg.window_n).collect();
        let mut times = PhaseTimes::default();
        let mut traffic = TrafficReport::empty();
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut seen = 0usize;
        let mut modeled = 0.0;
        let mut window_orders = Vec::with_capacity(windows.len());

        let mut process = |w: usize, prepared: PreparedWindow, model: &mut Model| -> Result<()> {
            times.sample += prepared.sample_secs;
            times.map += prepared.map_secs;

            let t = Instant::now();
            let sets: Vec<&[NodeId]> = prepared.batches.iter().map(|p| p.batch.unique_nodes.as_slice()).collect();
            let schedule = schedule_sets(&sets, &sched_opts)?;
            let steps: Vec<IoStep<'_>> =
                schedule.order.iter().map(|&b| IoStep { window: w, batch: b, nodes: sets[b] }).collect();
            let io = memsim::simulate_with_cache(&cache, &steps, &io_opts, &params)?;
            traffic.extend(io, &params);
            times.io_sim += t.elapsed().as_secs_f64();

            let t = Instant::now();
            for &b in &schedule.order {
                let p = &prepared.batches[b];
                let blocks = BatchBlocks::build(&p.batch, &p.local_to_global, cfg.arch)?;
                let (input, labels) = gather_inputs(data, &blocks);
                let (loss, ok, grads) =
                    model.loss_and_grads(&blocks, &input, &labels, &cfg.tile, flags.memory_aware)?;
                model.sgd_step(&grads, cfg.lr);
                modeled += blocks.modeled_seconds(&cfg.layer_dims, flags.memory_aware, &params)?;
                loss_sum += loss;
                correct += ok;
                seen += labels.len();
            }
            times.compute += t.elapsed().as_secs_f64();
            window_orders.push(schedule.order);
            Ok(())
        };

        let mut first = 0;
        let offsets: Vec<usize> = windows
            .iter()
            .map(|w| {
                let o = first;
                first += w.len();
                o
            })
            .collect();
        if cfg.overlap {
            thread::scope(|scope| -> Result<()> {
                let mut pending = Some(prepare_window(data, cfg, windows[0], epoch, 0)?);
                for w in 0..windows.len() {
                    let current = pending.take().expect("window prepared");
                    let next = (w + 1 < windows.len())
                        .then(|| {
                            let (seeds, first) = (windows[w + 1], offsets[w + 1]);
                            scope.spawn(move || prepare_window(data, cfg, seeds, epoch, first))
                        });
                    process(w, current, &mut model)?;
                    if let Some(h) = next {
                        pending = Some(h.join().expect("prefetch thread panicked")?);
                    }
                }
                Ok(())
            })?;
        } else {
            for (w, seeds) in windows.iter().enumerate() {
                let prepared = prepare_window(data, cfg, seeds, epoch, offsets[w])?;
                process(w, prepared, &mut model)?;
            }
        }

        let num_batches = batches.len() as f64;
        let test_accuracy = evaluate(&model, data, cfg, &data.test_ids, rng::mix(&[cfg.seed, epoch as u64, 0xEA1]))?;
        let loss = loss_sum / num_batches;
        if !loss.is_finite() {
            return Err(Error::validation(format!("loss diverged at epoch {epoch}")));
        }
        report.epochs.push(EpochReport {
            epoch,
            loss,
            train_accuracy: correct as f64 / seen.max(1) as f64,
            test_accuracy,
            traffic,
            modeled_aggregation_seconds: modeled,
            times,
            window_orders,
        });
    }
    Ok((model, report))
}

/// Share of total wall time per phase, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseBreakdown {
    pub sample_pct: f64,
    pub map_pct: f64,
    pub io_sim_pct: f64,
    pub compute_pct: f64,
    pub total_seconds: f64,
}

pub fn phase_breakdown(report: &TrainReport) -> Result<PhaseBreakdown> {
    if report.epochs.is_empty() {
        return Err(Error::validation("cannot break down an empty training report"));
    }
    let mut total = PhaseTimes::default();
    for e in &report.epochs {
        total.add(&e.times);
    }
    let sum = total.total();
    if sum <= 0.0 {
        return Err(Error::validation("training report recorded no time"));
    }
    Ok(PhaseBreakdown {
        sample_pct: 100.0 * total.sample / sum,
        map_pct: 100.0 * total.map / sum,
        io_sim_pct: 100.0 * total.io_sim / sum,
        compute_pct: 100.0 * total.compute / sum,
        total_seconds: sum,
    })
}
