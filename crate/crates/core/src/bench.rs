//! Timing harness for the ID map.

use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fused_map;
use crate::graph::NodeId;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchReport {
    pub num_ids: usize,
    pub num_unique: usize,
    pub workers: usize,
    pub repeats: usize,
    /// Best-of-repeats wall time of the lock-free build.
    pub fused_ns: u64,
    /// Best-of-repeats wall time of the mutex-guarded build.
    pub locked_ns: u64,
    pub speedup: f64,
}

/// ID stream of length `n` where roughly `dup_ratio` of the entries repeat
/// an earlier ID. IDs are spread over the full 40-bit range.
pub fn id_stream(n: usize, dup_ratio: f64, seed: u64) -> Result<Vec<NodeId>> {
    if !(0.0..1.0).contains(&dup_ratio) {
        return Err(Error::validation("duplicate ratio must be in [0, 1)"));
    }
    let mut r = rng::seeded(seed);
    let mut ids: Vec<NodeId> = Vec::with_capacity(n);
    for _ in 0..n {
        if !ids.is_empty() && r.random_bool(dup_ratio) {
            let j = r.random_range(0..ids.len());
            ids.push(ids[j]);
        } else {
            ids.push(r.random_range(0..1u64 << 40));
        }
    }
    Ok(ids)
}

pub fn bench_map(ids: &[NodeId], workers: usize, repeats: usize) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::validation("repeats must be at least 1"));
    }
    let mut fused_ns = u64::MAX;
    let mut locked_ns = u64::MAX;
    let mut num_unique = 0;
    // Alternate which build goes first so neither always runs on a
    // freshly released heap.
    for rep in 0..repeats {
        for turn in 0..2 {
            let t = Instant::now();
            if (rep + turn) % 2 == 0 {
                let table = fused_map::build(ids, workers)?;
                fused_ns = fused_ns.min(t.elapsed().as_nanos() as u64);
                num_unique = table.num_inserted();
            } else {
                fused_map::build_locked_baseline(ids, workers)?;
                locked_ns = locked_ns.min(t.elapsed().as_nanos() as u64);
            }
        }
    }
    Ok(BenchReport {
        num_ids: ids.len(),
        num_unique,
        workers,
        repeats,
        fused_ns,
        locked_ns,
        speedup: locked_ns as f64 / fused_ns.max(1) as f64,
    })
}
