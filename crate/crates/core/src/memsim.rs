//! Memory-hierarchy cost model and host-to-device traffic simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::scheduler::compute_transition;

/// Bandwidths and capacities of the simulated device. Defaults describe an
/// RTX 3090-class card on a PCIe 4.0 x16 link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Shared-memory / L1 bandwidth, bytes per second.
    pub shared_bw: f64,
    /// Global-memory bandwidth, bytes per second.
    pub global_bw: f64,
    /// Host-to-device link bandwidth, bytes per second.
    pub host_link_bw: f64,
    pub device_capacity: f64,
    pub bytes_per_elem: usize,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            shared_bw: 12e12,
            global_bw: 938e9,
            host_link_bw: 32e9,
            device_capacity: 24e9,
            bytes_per_elem: 4,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.shared_bw, self.global_bw, self.host_link_bw, self.device_capacity]
            .iter()
            .all(|&x| x > 0.0 && x.is_finite());
        if !positive || self.bytes_per_elem == 0 {
            return Err(Error::validation("cost parameters must all be positive"));
        }
        Ok(())
    }
}

fn check_shape(fanout: usize, dim: usize, p: &CostParams) -> Result<()> {
    if fanout == 0 || dim == 0 {
        return Err(Error::validation("fanout and feature dimension must be at least 1"));
    }
    p.validate()
}

/// Time to aggregate one target node when partial sums, edge weights and
/// source features are all read from global memory.
pub fn t_naive(fanout: usize, dim: usize, p: &CostParams) -> Result<f64> {
    check_shape(fanout, dim, p)?;
    let (f, d, b) = (fanout as f64, dim as f64, p.bytes_per_elem as f64);
    let partial_sums = b * (f - 1.0) * d;
    let weights = b * f * d;
    let features = b * f * d;
    Ok((partial_sums + weights + features) / p.global_bw)
}

/// Time to aggregate one target node when partial sums and weights are
/// served from scratch memory and only source features (plus one staging
/// read per weight) come from global memory.
pub fn t_memory_aware(fanout: usize, dim: usize, p: &CostParams) -> Result<f64> {
    check_shape(fanout, dim, p)?;
    let (f, d, b) = (fanout as f64, dim as f64, p.bytes_per_elem as f64);
    let scratch = b * (f - 1.0) * d + b * f * (d - 1.0);
    let global = b * f * d + b * f;
    Ok(scratch / p.shared_bw + global / p.global_bw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CachePolicy {
    None,
    /// Static cache of the highest-degree nodes.
    Degree,
}

/// Device-resident feature cache, fixed for the whole epoch.
#[derive(Debug, Clone)]
pub struct StaticCache {
    resident: Vec<bool>,
    len: usize,
}

impl StaticCache {
    pub fn empty(num_nodes: usize) -> Self {
        StaticCache { resident: vec![false; num_nodes], len: 0 }
    }

    /// Caches the top `floor(ratio * |V|)` nodes by out-degree, ties going to
    /// the lower ID. Caches for larger ratios are supersets of smaller ones.
    pub fn degree_ranked(g: &Graph, ratio: f64) -> Result<Self> {
        check_ratio(ratio)?;
        let n = g.num_nodes();
        let take = ((ratio * n as f64).floor() as usize).min(n);
        let degrees = g.degrees();
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]).then(a.cmp(&b)));
        let mut resident = vec![false; n];
        for &v in &ranked[..take] {
            resident[v] = true;
        }
        Ok(StaticCache { resident, len: take })
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.resident.get(v as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::validation(format!("cache ratio {ratio} is outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IoSimOptions {
    pub cache_ratio: f64,
    pub policy: CachePolicy,
    pub matching: bool,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchTraffic {
    pub window: usize,
    pub step: usize,
    pub batch: usize,
    pub unique_nodes: usize,
    pub nodes_from_match: usize,
    pub nodes_from_cache: usize,
    pub nodes_loaded: usize,
    pub bytes_host_to_device: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficReport {
    pub bytes_host_to_device: u64,
    pub bytes_served_by_cache: u64,
    pub bytes_served_by_match: u64,
    pub modeled_io_seconds: f64,
    pub batches: Vec<BatchTraffic>,
}

impl TrafficReport {
    pub fn empty() -> Self {
        TrafficReport {
            bytes_host_to_device: 0,
            bytes_served_by_cache: 0,
            bytes_served_by_match: 0,
            modeled_io_seconds: 0.0,
            batches: Vec::new(),
        }
    }

    /// Appends another report's batches, re-deriving the totals.
    pub fn extend(&mut self, other: TrafficReport, p: &CostParams) {
        self.batches.extend(other.batches);
        self.bytes_host_to_device += other.bytes_host_to_device;
        self.bytes_served_by_cache += other.bytes_served_by_cache;
        self.bytes_served_by_match += other.bytes_served_by_match;
        self.modeled_io_seconds = self.bytes_host_to_device as f64 / p.host_link_bw;
    }
}

/// One batch in execution order: its window, its index inside the window
/// and its sorted node set.
#[derive(Debug, Clone, Copy)]
pub struct IoStep<'a> {
    pub window: usize,
    pub batch: usize,
    pub nodes: &'a [NodeId],
}

/// Replays an execution stream and charges feature transfers.
///
/// A node costs nothing if it was in the previous batch of the same window
/// (when matching is on) or sits in the static cache; every other node
/// costs `bytes_per_elem * feature_dim` bytes over the host link. The first
/// batch of each window has no predecessor.
pub fn simulate_epoch_io(
    g: &Graph,
    steps: &[IoStep<'_>],
    opts: &IoSimOptions,
    p: &CostParams,
) -> Result<TrafficReport> {
    check_ratio(opts.cache_ratio)?;
    p.validate()?;
    let cache = match opts.policy {
        CachePolicy::None => StaticCache::empty(g.num_nodes()),
        CachePolicy::Degree => StaticCache::degree_ranked(g, opts.cache_ratio)?,
    };
    simulate_with_cache(&cache, steps, opts, p)
}

pub fn simulate_with_cache(
    cache: &StaticCache,
    steps: &[IoStep<'_>],
    opts: &IoSimOptions,
    p: &CostParams,
) -> Result<TrafficReport> {
    let per_node = (opts.feature_dim * p.bytes_per_elem) as u64;
    let mut report = TrafficReport::empty();
    let mut prev: Option<&IoStep<'_>> = None;
    let mut step_in_window = 0;
    for step in steps {
        let same_window = prev.is_some_and(|q| q.window == step.window);
        step_in_window = if same_window { step_in_window + 1 } else { 0 };
        let (reused, candidates) = match prev {
            Some(q) if same_window && opts.matching => {
                let (overlap, load) = compute_transition(q.nodes, step.nodes);
                (overlap.len(), load)
            }
            _ => (0, step.nodes.to_vec()),
        };
        let cached = candidates.iter().filter(|&&v| cache.contains(v)).count();
        let loaded = candidates.len() - cached;
        let entry = BatchTraffic {
            window: step.window,
            step: step_in_window,
            batch: step.batch,
            unique_nodes: step.nodes.len(),
            nodes_from_match: reused,
            nodes_from_cache: cached,
            nodes_loaded: loaded,
            bytes_host_to_device: loaded as u64 * per_node,
        };
        report.bytes_host_to_device += entry.bytes_host_to_device;
        report.bytes_served_by_cache += cached as u64 * per_node;
        report.bytes_served_by_match += reused as u64 * per_node;
        report.batches.push(entry);
        prev = Some(step);
    }
    report.modeled_io_seconds = report.bytes_host_to_device as f64 / p.host_link_bw;
    Ok(report)
}
