//! Mini-batch subgraph sampling in global-ID space.

use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, SENTINEL};
use crate::rng;

/// Per-hop neighbor counts. Entry `l` bounds how many neighbors each node of
/// hop-`l` frontier contributes, hop 0 being the seeds themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Fanouts(Vec<usize>);

impl Fanouts {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::validation("fanouts must list at least one layer"));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::validation("every fanout must be at least 1"));
        }
        Ok(Fanouts(counts))
    }

    pub fn num_layers(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl TryFrom<Vec<usize>> for Fanouts {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Fanouts::new(v)
    }
}

impl From<Fanouts> for Vec<usize> {
    fn from(f: Fanouts) -> Self {
        f.0
    }
}

impl FromStr for Fanouts {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::validation(format!("bad fanout `{p}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Fanouts::new(counts)
    }
}

/// `(target, source, weight)` in global IDs.
pub type Edge = (NodeId, NodeId, f32);

/// `(target, source, weight)` in batch-local IDs.
pub type LocalEdge = (u64, u64, f32);

/// One sampled mini-batch.
///
/// `layers[l]` holds the edges sampled while expanding the hop-`l` frontier;
/// their targets are exactly that frontier. A node is expanded at most once
/// per batch, at the first hop it is reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphBatch {
    pub seeds: Vec<NodeId>,
    pub layers: Vec<Vec<Edge>>,
    pub unique_nodes: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub local_seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub local_layers: Vec<Vec<LocalEdge>>,
    #[serde(default)]
    pub num_local: usize,
}

impl SubgraphBatch {
    /// Builds a batch from seeds and edges, deriving `unique_nodes`.
    pub fn from_parts(seeds: Vec<NodeId>, layers: Vec<Vec<Edge>>) -> Self {
        let mut unique: Vec<NodeId> = seeds
            .iter()
            .copied()
            .chain(layers.iter().flatten().flat_map(|&(t, s, _)| [t, s]))
            .collect();
        unique.sort_unstable();
        unique.dedup();
        SubgraphBatch {
            seeds,
            layers,
            unique_nodes: unique,
            local_seeds: Vec::new(),
            local_layers: Vec::new(),
            num_local: 0,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_mapped(&self) -> bool {
        self.local_layers.len() == self.layers.len() && self.num_local > 0
    }

    /// Every global ID the batch references, seeds first and then edge
    /// sources hop by hop, duplicates included. This is the raw stream the
    /// ID map is built from.
    pub fn id_stream(&self) -> Vec<NodeId> {
        let mut ids = Vec::with_capacity(self.seeds.len() + self.num_edges());
        ids.extend_from_slice(&self.seeds);
        for layer in &self.layers {
            ids.extend(layer.iter().map(|e| e.1));
        }
        ids
    }
}

fn check_seeds(g: &Graph, seeds: &[NodeId]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::validation("seed list is empty"));
    }
    if let Some(&bad) = seeds.iter().find(|&&s| s == SENTINEL || s >= g.num_nodes() as u64) {
        return Err(Error::validation(format!(
            "seed {bad} out of range for {} nodes",
            g.num_nodes()
        )));
    }
    Ok(())
}

/// Uniform k-hop neighbor sampling without replacement.
///
/// A frontier node with degree at most the hop's fanout contributes all of
/// its edges; otherwise exactly `fanout` distinct edge slots are drawn
/// uniformly. Sampled edges keep their CSR order.
pub fn sample_khop(g: &Graph, seeds: &[NodeId], fanouts: &Fanouts, seed: u64) -> Result<SubgraphBatch> {
    check_seeds(g, seeds)?;
    let mut rng = rng::seeded(seed);
    let mut visited = vec![false; g.num_nodes()];
    let mut frontier = Vec::with_capacity(seeds.len());
    let mut unique_seeds = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !visited[s as usize] {
            visited[s as usize] = true;
            frontier.push(s);
            unique_seeds.push(s);
        }
    }
    let mut layers = Vec::with_capacity(fanouts.num_layers());
    let mut picked = Vec::new();
    for &fanout in fanouts.as_slice() {
        let mut edges = Vec::new();
        let mut next = Vec::new();
        for &u in &frontier {
            let range = g.edge_range(u);
            let deg = range.len();
            picked.clear();
            if deg <= fanout {
                picked.extend(0..deg);
            } else {
                picked.extend(index::sample(&mut rng, deg, fanout).iter());
                picked.sort_unstable();
            }
            let nbrs = g.neighbors(u);
            for &i in &picked {
                let v = nbrs[i];
                edges.push((u, v, g.weight_at(range.start + i)));
                if !visited[v as usize] {
                    visited[v as usize] = true;
                    next.push(v);
                }
            }
        }
        layers.push(edges);
        frontier = next;
    }
    let unique_nodes = visited
        .iter()
        .enumerate()
        .filter_map(|(i, &seen)| seen.then_some(i as NodeId))
        .collect();
    Ok(SubgraphBatch {
        seeds: unique_seeds,
        layers,
        unique_nodes,
        local_seeds: Vec::new(),
        local_layers: Vec::new(),
        num_local: 0,
    })
}

/// One uniform random walk of up to `length` steps per seed, collected as a
/// single-layer batch. A walk stops early at a node without out-edges.
pub fn sample_random_walk(g: &Graph, seeds: &[NodeId], length: usize, seed: u64) -> Result<SubgraphBatch> {
    check_seeds(g, seeds)?;
    if length == 0 {
        return Err(Error::validation("walk length must be at least 1"));
    }
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::with_capacity(seeds.len() * length);
    for &s in seeds {
        let mut cur = s;
        for _ in 0..length {
            let range = g.edge_range(cur);
            if range.is_empty() {
                break;
            }
            let i = rng.random_range(0..range.len());
            let next = g.neighbors(cur)[i];
            edges.push((cur, next, g.weight_at(range.start + i)));
            cur = next;
        }
    }
    Ok(SubgraphBatch::from_parts(seeds.to_vec(), vec![edges]))
}

/// Shuffles `train_ids` with a seeded stream and cuts it into consecutive
/// batches of `batch_size` (the last one may be shorter).
pub fn make_epoch_batches(train_ids: &[NodeId], batch_size: usize, shuffle_seed: u64) -> Result<Vec<Vec<NodeId>>> {
    if batch_size == 0 {
        return Err(Error::validation("batch size must be at least 1"));
    }
    let mut ids = train_ids.to_vec();
    ids.shuffle(&mut rng::seeded(shuffle_seed));
    Ok(ids.chunks(batch_size).map(<[NodeId]>::to_vec).collect())
}

/// Cuts shuffled training seeds into `num_windows` windows of `window_n`
/// batches and samples every batch. Epochs are repeated (with fresh
/// shuffles) until enough batches exist. Batch `k` overall is sampled with
/// seed `mix(seed, k)`.
pub fn sample_windows(
    g: &Graph,
    train_ids: &[NodeId],
    fanouts: &Fanouts,
    batch_size: usize,
    window_n: usize,
    num_windows: usize,
    seed: u64,
) -> Result<Vec<Vec<SubgraphBatch>>> {
    if window_n == 0 || num_windows == 0 {
        return Err(Error::validation("window size and window count must be at least 1"));
    }
    if train_ids.is_empty() {
        return Err(Error::validation("no seed nodes to sample from"));
    }
    let mut windows = Vec::with_capacity(num_windows);
    let mut current = Vec::with_capacity(window_n);
    let mut k = 0u64;
    for epoch in 0u64.. {
        for seeds in make_epoch_batches(train_ids, batch_size, rng::mix(&[seed, epoch]))? {
            current.push(sample_khop(g, &seeds, fanouts, rng::mix(&[seed, u64::MAX, k]))?);
            k += 1;
            if current.len() == window_n {
                windows.push(std::mem::replace(&mut current, Vec::with_capacity(window_n)));
                if windows.len() == num_windows {
                    return Ok(windows);
                }
            }
        }
    }
    unreachable!("the epoch loop only exits by returning")
}
