//! Match-Reorder scheduling of a window of sampled batches.
//!
//! Consecutive batches usually share many nodes. The match step keeps the
//! previous batch's features resident and loads only the set difference;
//! the reorder step permutes a window so each batch follows the one it
//! overlaps most.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sampler::SubgraphBatch;

/// Size of the intersection of two sorted, deduplicated ID lists.
pub fn overlap_count(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn is_sorted_set(ids: &[NodeId]) -> bool {
    ids.windows(2).all(|w| w[0] < w[1])
}

/// `|a ∩ b| / min(|a|, |b|)` for sorted, deduplicated ID lists.
pub fn match_degree(a: &[NodeId], b: &[NodeId]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::validation("match degree is undefined for an empty node set"));
    }
    debug_assert!(is_sorted_set(a) && is_sorted_set(b));
    Ok(overlap_count(a, b) as f64 / a.len().min(b.len()) as f64)
}

/// Symmetric matrix of pairwise match degrees with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchMatrix {
    n: usize,
    m: Vec<f64>,
}

impl MatchMatrix {
    /// Wraps a row-major `n x n` matrix. Used to feed hand-made degrees to
    /// [`greedy_reorder`].
    pub fn from_rows(n: usize, m: Vec<f64>) -> Result<Self> {
        if m.len() != n * n {
            return Err(Error::validation(format!("expected {} entries, got {}", n * n, m.len())));
        }
        Ok(MatchMatrix { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i * self.n + j] = v;
    }

    /// Off-diagonal entries `m[i][j]` with `i < j`.
    pub fn upper_pairs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| self.get(i, j)))
    }
}

pub fn build_match_matrix(batches: &[SubgraphBatch]) -> Result<MatchMatrix> {
    let sets: Vec<&[NodeId]> = batches.iter().map(|b| b.unique_nodes.as_slice()).collect();
    match_matrix_of_sets(&sets)
}

pub fn match_matrix_of_sets(sets: &[&[NodeId]]) -> Result<MatchMatrix> {
    let n = sets.len();
    if n == 0 {
        return Err(Error::validation("a window needs at least one batch"));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let degrees = pairs
        .par_iter()
        .map(|&(i, j)| match_degree(sets[i], sets[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut m = MatchMatrix { n, m: vec![0.0; n * n] };
    for (&(i, j), d) in pairs.iter().zip(degrees) {
        m.set(i, j, d);
        m.set(j, i, d);
    }
    Ok(m)
}

/// Greedy reordering: batch 0 stays first, then each step appends the
/// not-yet-scheduled batch with the highest match degree to the batch
/// appended last. The row and column of that last batch are zeroed after
/// each step. Ties go to the lowest index, which also covers the case where
/// every remaining degree is zero.
pub fn greedy_reorder(m: &MatchMatrix) -> Vec<usize> {
    let n = m.n;
    if n == 0 {
        return Vec::new();
    }
    let mut work = m.clone();
    let mut inserted = vec![false; n];
    let mut order = Vec::with_capacity(n);
    order.push(0);
    inserted[0] = true;
    let mut last = 0;
    for _ in 1..n {
        let mut best: Option<(usize, f64)> = None;
        for k in (0..n).filter(|&k| !inserted[k]) {
            let d = work.get(last, k);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((k, d));
            }
        }
        let (next, _) = best.expect("an unscheduled batch remains");
        order.push(next);
        inserted[next] = true;
        for k in 0..n {
            work.set(last, k, 0.0);
            work.set(k, last, 0.0);
        }
        last = next;
    }
    order
}

/// Nodes reused from the previous batch and nodes that must be loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub overlap_ids: Vec<NodeId>,
    pub load_ids: Vec<NodeId>,
}

/// Splits `next` into the part shared with `prev` and the part to load.
pub fn compute_transition(prev: &[NodeId], next: &[NodeId]) -> (Vec<NodeId>, Vec<NodeId>) {
    let mut overlap = Vec::new();
    let mut load = Vec::new();
    let mut i = 0;
    for &v in next {
        while i < prev.len() && prev[i] < v {
            i += 1;
        }
        if i < prev.len() && prev[i] == v {
            overlap.push(v);
        } else {
            load.push(v);
        }
    }
    (overlap, load)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScheduleOptions {
    pub reorder: bool,
    /// Reuse features shared with the previous batch. When off every batch
    /// loads its full node set.
    pub matching: bool,
    pub feature_dim: usize,
    pub bytes_per_elem: usize,
}

impl ScheduleOptions {
    pub fn new(reorder: bool, matching: bool, feature_dim: usize) -> Self {
        ScheduleOptions { reorder, matching, feature_dim, bytes_per_elem: 4 }
    }

    fn bytes_per_node(&self) -> u64 {
        (self.feature_dim * self.bytes_per_elem) as u64
    }
}

/// Execution plan and host-to-device traffic for one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSchedule {
    pub order: Vec<usize>,
    pub first_load: usize,
    pub transitions: Vec<Transition>,
    pub window_traffic_bytes: u64,
}

impl BatchSchedule {
    /// Number of nodes loaded at each step, in execution order.
    pub fn load_sizes(&self) -> Vec<usize> {
        std::iter::once(self.first_load)
            .chain(self.transitions.iter().map(|t| t.load_ids.len()))
            .collect()
    }
}

pub fn schedule_window(batches: &[SubgraphBatch], opts: &ScheduleOptions) -> Result<BatchSchedule> {
    let sets: Vec<&[NodeId]> = batches.iter().map(|b| b.unique_nodes.as_slice()).collect();
    schedule_sets(&sets, opts)
}

pub fn schedule_sets(sets: &[&[NodeId]], opts: &ScheduleOptions) -> Result<BatchSchedule> {
    if sets.is_empty() {
        return Err(Error::validation("a window needs at least one batch"));
    }
    let order = if opts.reorder && sets.len() > 1 {
        greedy_reorder(&match_matrix_of_sets(sets)?)
    } else {
        (0..sets.len()).collect()
    };
    let per_node = opts.bytes_per_node();
    let first_load = sets[order[0]].len();
    let mut bytes = first_load as u64 * per_node;
    let mut transitions = Vec::with_capacity(order.len().saturating_sub(1));
    for w in order.windows(2) {
        let (from, to) = (w[0], w[1]);
        let (overlap_ids, load_ids) = if opts.matching {
            compute_transition(sets[from], sets[to])
        } else {
            (Vec::new(), sets[to].to_vec())
        };
        bytes += load_ids.len() as u64 * per_node;
        transitions.push(Transition { from, to, overlap_ids, load_ids });
    }
    Ok(BatchSchedule { order, first_load, transitions, window_traffic_bytes: bytes })
}

/// Average and spread of pairwise match degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchStats {
    pub avg_match_degree: f64,
    /// Largest minus smallest pairwise degree.
    pub delta_match: f64,
    pub min_match_degree: f64,
    pub max_match_degree: f64,
    pub num_pairs: usize,
}

/// Statistics over the `i < j` pairs of every matrix.
pub fn match_stats(windows: &[MatchMatrix]) -> Result<MatchStats> {
    let all: Vec<f64> = windows.iter().flat_map(MatchMatrix::upper_pairs).collect();
    if all.is_empty() {
        return Err(Error::validation("match statistics need at least one pair of batches"));
    }
    let min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MatchStats {
        avg_match_degree: all.iter().sum::<f64>() / all.len() as f64,
        delta_match: max - min,
        min_match_degree: min,
        max_match_degree: max,
        num_pairs: all.len(),
    })
}
