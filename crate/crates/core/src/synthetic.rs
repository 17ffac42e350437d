//! Small labelled datasets for training runs and tests.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, NodeId};
use crate::rng;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub train_ids: Vec<NodeId>,
    pub test_ids: Vec<NodeId>,
}

fn split(n: usize, train_fraction: f64, rng: &mut rng::Rng) -> (Vec<NodeId>, Vec<NodeId>) {
    let mut ids: Vec<NodeId> = (0..n as NodeId).collect();
    ids.shuffle(rng);
    let cut = ((n as f64 * train_fraction).round() as usize).clamp(1, n);
    let test = ids.split_off(cut);
    (ids, test)
}

/// Two-block stochastic block model. Nodes `0..n/2` form class 0 and the
/// rest class 1; intra-block edges appear with probability `p_in` and
/// cross-block edges with `p_out`, stored in both directions. Features are
/// unit Gaussian noise shifted by `+shift` or `-shift` according to the
/// class, so the label is only weakly visible in any single node.
pub fn two_cluster(num_nodes: usize, dim: usize, seed: u64) -> Result<Dataset> {
    two_cluster_with(num_nodes, dim, 0.1, 0.01, 0.3, seed)
}

pub fn two_cluster_with(
    num_nodes: usize,
    dim: usize,
    p_in: f64,
    p_out: f64,
    shift: f32,
    seed: u64,
) -> Result<Dataset> {
    if num_nodes < 2 || dim == 0 {
        return Err(Error::validation("two-cluster data needs at least 2 nodes and 1 feature"));
    }
    let mut rng = rng::seeded(seed);
    let half = num_nodes / 2;
    let labels: Vec<usize> = (0..num_nodes).map(|i| usize::from(i >= half)).collect();
    let mut edges = Vec::new();
    for u in 0..num_nodes {
        for v in u + 1..num_nodes {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u as NodeId, v as NodeId));
                edges.push((v as NodeId, u as NodeId));
            }
        }
    }
    edges.sort_unstable();
    let graph = Graph::from_edges(num_nodes, &edges, None)?;
    let mut data = Vec::with_capacity(num_nodes * dim);
    for &label in &labels {
        let sign = if label == 0 { -1.0 } else { 1.0 };
        for _ in 0..dim {
            let noise: f32 = rng.sample(StandardNormal);
            data.push(noise + sign * shift);
        }
    }
    let features = FeatureMatrix::new(num_nodes, dim, data)?;
    let (train_ids, test_ids) = split(num_nodes, 0.8, &mut rng);
    Ok(Dataset { graph, features, labels, num_classes: 2, train_ids, test_ids })
}

/// Attaches synthetic labels and features to an existing graph. Node `v`
/// gets a uniformly drawn class `c`; its features are Gaussian noise plus a
/// bump of 1.0 on dimension `c mod dim`.
pub fn label_graph(graph: Graph, dim: usize, num_classes: usize, seed: u64) -> Result<Dataset> {
    if dim == 0 || num_classes < 2 {
        return Err(Error::validation("need at least 1 feature and 2 classes"));
    }
    let n = graph.num_nodes();
    let mut rng = rng::seeded(seed);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..num_classes)).collect();
    let mut data = Vec::with_capacity(n * dim);
    for &label in &labels {
        for j in 0..dim {
            let noise: f32 = rng.sample(StandardNormal);
            data.push(noise + if j == label % dim { 1.0 } else { 0.0 });
        }
    }
    let features = FeatureMatrix::new(n, dim, data)?;
    let (train_ids, test_ids) = split(n, 0.8, &mut rng);
    Ok(Dataset { graph, features, labels, num_classes, train_ids, test_ids })
}
