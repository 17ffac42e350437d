//! Tiled aggregation with an explicit scratch buffer, dense updates and the
//! matching backward pass.
//!
//! A tile covers `X` consecutive target nodes and `Y` consecutive feature
//! dimensions. Its scratch buffer holds the `X x Y` partial sums plus the
//! edge weights of its `X` targets; source features are streamed from the
//! input matrix. A target's whole neighbor list is always reduced inside a
//! single tile, in neighbor order, so the result does not depend on the
//! tile shape or on how many workers run the tiles.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;

/// Upper bound (exclusive) on `X * Y`, the lanes of one tile.
pub const MAX_TILE_LANES: usize = 1024;

/// Batch-local CSR: row `t` lists the sources target `t` aggregates from.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCsr {
    num_targets: usize,
    num_sources: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    weights: Vec<f32>,
}

impl LocalCsr {
    /// Groups `(target, source, weight)` triples by target, keeping their
    /// relative order.
    pub fn from_edges(num_targets: usize, num_sources: usize, edges: &[(u32, u32, f32)]) -> Result<Self> {
        let mut offsets = vec![0usize; num_targets + 1];
        for &(t, s, w) in edges {
            if t as usize >= num_targets || s as usize >= num_sources {
                return Err(Error::validation(format!(
                    "edge ({t}, {s}) outside {num_targets} targets x {num_sources} sources"
                )));
            }
            if !w.is_finite() {
                return Err(Error::validation("edge weight is not finite"));
            }
            offsets[t as usize + 1] += 1;
        }
        for i in 0..num_targets {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets[..num_targets].to_vec();
        let mut indices = vec![0u32; edges.len()];
        let mut weights = vec![0f32; edges.len()];
        for &(t, s, w) in edges {
            let slot = cursor[t as usize];
            cursor[t as usize] += 1;
            indices[slot] = s;
            weights[slot] = w;
        }
        Ok(LocalCsr { num_targets, num_sources, offsets, indices, weights })
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_edges(&self) -> usize {
        self.indices.len()
    }

    pub fn neighbors(&self, t: usize) -> &[u32] {
        &self.indices[self.offsets[t]..self.offsets[t + 1]]
    }

    pub fn weights(&self, t: usize) -> &[f32] {
        &self.weights[self.offsets[t]..self.offsets[t + 1]]
    }

    pub fn fanouts(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Edges as `(target, source, weight)` in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f32)> + '_ {
        (0..self.num_targets).flat_map(move |t| {
            self.neighbors(t).iter().zip(self.weights(t)).map(move |(&s, &w)| (t as u32, s, w))
        })
    }

    /// Swaps the roles of targets and sources, keeping weights.
    pub fn transpose(&self) -> LocalCsr {
        let flipped: Vec<(u32, u32, f32)> = self.edges().map(|(t, s, w)| (s, t, w)).collect();
        LocalCsr::from_edges(self.num_sources, self.num_targets, &flipped).expect("transpose of a valid csr")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileConfig {
    /// Target nodes per tile.
    pub x: usize,
    /// Feature dimensions per tile.
    pub y: usize,
    pub scratch_limit_bytes: usize,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig { x: 8, y: 32, scratch_limit_bytes: 48 * 1024 }
    }
}

impl TileConfig {
    pub fn new(x: usize, y: usize, scratch_limit_bytes: usize) -> Result<Self> {
        let cfg = TileConfig { x, y, scratch_limit_bytes };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x == 0 || self.y == 0 {
            return Err(Error::Config("tile sides must be at least 1".into()));
        }
        if self.x * self.y >= MAX_TILE_LANES {
            return Err(Error::Config(format!(
                "X*Y = {}x{} = {} must stay below {MAX_TILE_LANES}",
                self.x,
                self.y,
                self.x * self.y
            )));
        }
        Ok(())
    }

    /// Scratch bytes for one tile: `X*Y` partial sums plus `max_fanout`
    /// weights for each of the `X` targets, 4 bytes apiece.
    pub fn scratch_bytes(&self, max_fanout: usize) -> usize {
        4 * self.x * self.y + 4 * self.x * max_fanout
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tile {
    pub targets: Range<usize>,
    pub dims: Range<usize>,
    pub max_fanout: usize,
    pub scratch_bytes: usize,
}

/// Tile decomposition of a `targets x dims` aggregation. Tiles are listed
/// row-group major; the `ceil(d / Y)` tiles of one row group share targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationPlan {
    pub config: TileConfig,
    pub num_targets: usize,
    pub dim: usize,
    pub tiles: Vec<Tile>,
}

impl AggregationPlan {
    pub fn row_groups(&self) -> usize {
        self.num_targets.div_ceil(self.config.x)
    }

    pub fn dim_chunks(&self) -> usize {
        self.dim.div_ceil(self.config.y)
    }

    pub fn max_scratch_bytes(&self) -> usize {
        self.tiles.iter().map(|t| t.scratch_bytes).max().unwrap_or(0)
    }
}

pub fn plan_tiles(num_targets: usize, dim: usize, fanouts: &[usize], cfg: &TileConfig) -> Result<AggregationPlan> {
    cfg.validate()?;
    if fanouts.len() != num_targets {
        return Err(Error::validation(format!("{} fanouts for {num_targets} targets", fanouts.len())));
    }
    let mut tiles = Vec::with_capacity(num_targets.div_ceil(cfg.x) * dim.div_ceil(cfg.y));
    for start in (0..num_targets).step_by(cfg.x) {
        let targets = start..(start + cfg.x).min(num_targets);
        let (widest, max_fanout) = targets
            .clone()
            .map(|t| (t, fanouts[t]))
            .max_by_key(|&(t, f)| (f, std::cmp::Reverse(t)))
            .expect("non-empty row group");
        let scratch = cfg.scratch_bytes(max_fanout);
        if scratch > cfg.scratch_limit_bytes {
            return Err(Error::Config(format!(
                "target {widest} has {max_fanout} neighbors; a tile of X={} needs {scratch} scratch bytes \
                 but the limit is {}; use a smaller X",
                cfg.x, cfg.scratch_limit_bytes
            )));
        }
        for d0 in (0..dim).step_by(cfg.y) {
            tiles.push(Tile {
                targets: targets.clone(),
                dims: d0..(d0 + cfg.y).min(dim),
                max_fanout,
                scratch_bytes: scratch,
            });
        }
    }
    Ok(AggregationPlan { config: *cfg, num_targets, dim, tiles })
}

/// Runs every tile of `plan`, parallel across row groups.
fn run_tiles(csr: &LocalCsr, src: &FeatureMatrix, plan: &AggregationPlan) -> FeatureMatrix {
    let d = src.dim();
    let (x, y) = (plan.config.x, plan.config.y);
    let mut out = FeatureMatrix::zeros(csr.num_targets(), d);
    if d == 0 || csr.num_targets() == 0 {
        return out;
    }
    let chunks = plan.dim_chunks();
    let x_data = src.data();
    out.data_mut().par_chunks_mut(x * d).enumerate().for_each(|(group, out_rows)| {
        let group_tiles = &plan.tiles[group * chunks..(group + 1) * chunks];
        let max_fanout = group_tiles[0].max_fanout;
        let mut partial = vec![0f32; x * y];
        let mut weights = vec![0f32; x * max_fanout];
        for tile in group_tiles {
            let c = tile.dims.len();
            for (i, t) in tile.targets.clone().enumerate() {
                let w = csr.weights(t);
                weights[i * max_fanout..i * max_fanout + w.len()].copy_from_slice(w);
            }
            partial.fill(0.0);
            for (i, t) in tile.targets.clone().enumerate() {
                let acc = &mut partial[i * y..i * y + c];
                for (k, &v) in csr.neighbors(t).iter().enumerate() {
                    let w = weights[i * max_fanout + k];
                    let row = v as usize * d + tile.dims.start;
                    for (a, &xv) in acc.iter_mut().zip(&x_data[row..row + c]) {
                        *a += w * xv;
                    }
                }
            }
            for i in 0..tile.targets.len() {
                let dst = i * d + tile.dims.start;
                out_rows[dst..dst + c].copy_from_slice(&partial[i * y..i * y + c]);
            }
        }
    });
    out
}

fn check_src(csr: &LocalCsr, src: &FeatureMatrix) -> Result<()> {
    if src.num_nodes() != csr.num_sources() {
        return Err(Error::validation(format!(
            "input has {} rows but the graph has {} sources",
            src.num_nodes(),
            csr.num_sources()
        )));
    }
    Ok(())
}

/// `h_u = sum_{v in N(u)} w_uv * x_v`, tile by tile.
pub fn aggregate_forward(csr: &LocalCsr, src: &FeatureMatrix, cfg: &TileConfig) -> Result<FeatureMatrix> {
    check_src(csr, src)?;
    let plan = plan_tiles(csr.num_targets(), src.dim(), &csr.fanouts(), cfg)?;
    Ok(run_tiles(csr, src, &plan))
}

/// Gradient of the aggregation with respect to its input. `csr_t` is the
/// transpose of the forward graph; the gather is the forward kernel run
/// over it, with the same weights.
pub fn aggregate_backward(csr_t: &LocalCsr, grad_out: &FeatureMatrix, cfg: &TileConfig) -> Result<FeatureMatrix> {
    aggregate_forward(csr_t, grad_out, cfg)
}

/// Untiled reference path: accumulates straight into the output rows.
/// Same per-element summation order as the tiled kernel.
pub fn aggregate_naive(csr: &LocalCsr, src: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_src(csr, src)?;
    let d = src.dim();
    let mut out = FeatureMatrix::zeros(csr.num_targets(), d);
    if d == 0 {
        return Ok(out);
    }
    out.data_mut().par_chunks_mut(d).enumerate().for_each(|(t, row)| {
        for (&v, &w) in csr.neighbors(t).iter().zip(csr.weights(t)) {
            for (a, &xv) in row.iter_mut().zip(src.row(v as usize)) {
                *a += w * xv;
            }
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

/// `act(h * W + bias)` with `W` stored as an `in_dim x out_dim` matrix.
pub fn dense_update(h: &FeatureMatrix, w: &FeatureMatrix, bias: &[f32], act: Activation) -> Result<FeatureMatrix> {
    if h.dim() != w.num_nodes() {
        return Err(Error::validation(format!(
            "cannot multiply {}x{} by {}x{}",
            h.num_nodes(),
            h.dim(),
            w.num_nodes(),
            w.dim()
        )));
    }
    if bias.len() != w.dim() {
        return Err(Error::validation(format!("bias has {} entries, expected {}", bias.len(), w.dim())));
    }
    let mut out = matmul(h, w)?;
    let m = w.dim();
    if m > 0 {
        out.data_mut().par_chunks_mut(m).for_each(|row| {
            for (o, &b) in row.iter_mut().zip(bias) {
                *o += b;
                if act == Activation::Relu && *o < 0.0 {
                    *o = 0.0;
                }
            }
        });
    }
    Ok(out)
}

/// `a * b`.
pub fn matmul(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if a.dim() != b.num_nodes() {
        return Err(Error::validation("inner dimensions do not match"));
    }
    let m = b.dim();
    let mut out = FeatureMatrix::zeros(a.num_nodes(), m);
    if m == 0 {
        return Ok(out);
    }
    out.data_mut().par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    });
    Ok(out)
}

/// `a^T * b` for `a: n x k`, `b: n x m`.
pub fn matmul_at_b(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if a.num_nodes() != b.num_nodes() {
        return Err(Error::validation("row counts do not match"));
    }
    let (k, m) = (a.dim(), b.dim());
    let mut out = FeatureMatrix::zeros(k, m);
    if m == 0 {
        return Ok(out);
    }
    out.data_mut().par_chunks_mut(m).enumerate().for_each(|(kk, row)| {
        for i in 0..a.num_nodes() {
            let aik = a.get(i, kk);
            if aik == 0.0 {
                continue;
            }
            for (o, &bij) in row.iter_mut().zip(b.row(i)) {
                *o += aik * bij;
            }
        }
    });
    Ok(out)
}

/// `a * b^T` for `a: n x m`, `b: k x m`.
pub fn matmul_a_bt(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::validation("column counts do not match"));
    }
    let k = b.num_nodes();
    let mut out = FeatureMatrix::zeros(a.num_nodes(), k);
    if k == 0 {
        return Ok(out);
    }
    out.data_mut().par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        let ai = a.row(i);
        for (kk, o) in row.iter_mut().enumerate() {
            *o = ai.iter().zip(b.row(kk)).map(|(x, y)| x * y).sum();
        }
    });
    Ok(out)
}
