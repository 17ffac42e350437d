//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use minigl::compute::LocalCsr;
use minigl::rng;
use minigl::{FeatureMatrix, NodeId};
use rand::Rng as _;

/// Dense `A x` in f64, where `A[t][s]` sums the weights of every `t <- s`
/// edge.
pub fn dense_product(csr: &LocalCsr, x: &FeatureMatrix) -> Vec<f64> {
    let (nt, ns, d) = (csr.num_targets(), csr.num_sources(), x.dim());
    let mut a = vec![0f64; nt * ns];
    for (t, s, w) in csr.edges() {
        a[t as usize * ns + s as usize] += f64::from(w);
    }
    let mut out = vec![0f64; nt * d];
    for t in 0..nt {
        for s in 0..ns {
            let w = a[t * ns + s];
            if w != 0.0 {
                for j in 0..d {
                    out[t * d + j] += w * f64::from(x.get(s, j));
                }
            }
        }
    }
    out
}

/// Random bipartite local graph with up to `max_nodes` targets and sources.
pub fn random_local_csr(seed: u64, max_nodes: usize, max_fanout: usize) -> LocalCsr {
    let mut r = rng::seeded(seed);
    let nt = r.random_range(1..=max_nodes);
    let ns = r.random_range(1..=max_nodes);
    let mut edges = Vec::new();
    for t in 0..nt as u32 {
        for _ in 0..r.random_range(0..=max_fanout) {
            edges.push((t, r.random_range(0..ns as u32), r.random_range(-1.0f32..1.0)));
        }
    }
    LocalCsr::from_edges(nt, ns, &edges).unwrap()
}

/// Alg. 1 written from scratch against a plain nested-vector matrix: keep
/// batch 0 first, then repeatedly append the unscheduled batch whose degree
/// with the previous pick is largest, lowest index on ties.
pub fn reference_greedy(m: &[Vec<f64>]) -> Vec<usize> {
    let n = m.len();
    let mut order = vec![0];
    let mut remaining: Vec<usize> = (1..n).collect();
    while !remaining.is_empty() {
        let last = *order.last().unwrap();
        let mut best_pos = 0;
        for pos in 1..remaining.len() {
            if m[last][remaining[pos]] > m[last][remaining[best_pos]] {
                best_pos = pos;
            }
        }
        order.push(remaining.remove(best_pos));
    }
    order
}

/// The three-batch walkthrough instance.
pub fn walkthrough_sets() -> [Vec<NodeId>; 3] {
    [vec![0, 1, 2, 3, 4], vec![0, 3, 4, 10, 12], vec![0, 1, 2, 3, 13]]
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-30)
}
