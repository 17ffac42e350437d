//! Immutable CSR graphs, dense feature storage and graph ingestion.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Dense global node identifier.
pub type NodeId = u64;

/// Reserved key marking an empty hash-table slot. Never a valid node id.
pub const SENTINEL: NodeId = u64::MAX;

const MAGIC: &[u8; 4] = b"MGL1";
const FLAG_WEIGHTS: u8 = 0b01;
const FLAG_TRANSPOSE: u8 = 0b10;

/// Directed graph in compressed sparse row form with its exact transpose.
///
/// Row `u` of the forward adjacency lists the neighbors `N(u)` that `u`
/// aggregates from. Edge order inside a row is the insertion order, and the
/// transpose is built with a stable counting sort so it is a pure function
/// of the forward arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<u64>,
    col_indices: Vec<NodeId>,
    edge_weights: Option<Vec<f32>>,
    t_row_offsets: Vec<u64>,
    t_col_indices: Vec<NodeId>,
    t_edge_weights: Option<Vec<f32>>,
}

impl Graph {
    /// Builds a graph from `(u, v)` pairs, keeping duplicates and self-loops
    /// in input order.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(NodeId, NodeId)],
        weights: Option<Vec<f32>>,
    ) -> Result<Self> {
        if let Some(w) = &weights {
            if w.len() != edges.len() {
                return Err(Error::validation(format!(
                    "{} weights for {} edges",
                    w.len(),
                    edges.len()
                )));
            }
        }
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= num_nodes as u64 {
                    return Err(Error::validation(format!(
                        "node id {id} out of range for {num_nodes} nodes"
                    )));
                }
            }
        }
        let srcs: Vec<NodeId> = edges.iter().map(|e| e.0).collect();
        let dsts: Vec<NodeId> = edges.iter().map(|e| e.1).collect();
        let (row_offsets, col_indices, edge_weights) =
            bucket(num_nodes, &srcs, &dsts, weights.as_deref());
        Ok(Self::with_transpose(num_nodes, row_offsets, col_indices, edge_weights))
    }

    fn with_transpose(
        num_nodes: usize,
        row_offsets: Vec<u64>,
        col_indices: Vec<NodeId>,
        edge_weights: Option<Vec<f32>>,
    ) -> Self {
        let (t_row_offsets, t_col_indices, t_edge_weights) =
            transpose_arrays(num_nodes, &row_offsets, &col_indices, edge_weights.as_deref());
        Graph {
            num_nodes,
            row_offsets,
            col_indices,
            edge_weights,
            t_row_offsets,
            t_col_indices,
            t_edge_weights,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[u64] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[NodeId] {
        &self.col_indices
    }

    pub fn edge_weights(&self) -> Option<&[f32]> {
        self.edge_weights.as_deref()
    }

    pub fn t_row_offsets(&self) -> &[u64] {
        &self.t_row_offsets
    }

    pub fn t_col_indices(&self) -> &[NodeId] {
        &self.t_col_indices
    }

    pub fn t_edge_weights(&self) -> Option<&[f32]> {
        self.t_edge_weights.as_deref()
    }

    fn range(&self, u: NodeId) -> std::ops::Range<usize> {
        let u = u as usize;
        self.row_offsets[u] as usize..self.row_offsets[u + 1] as usize
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.col_indices[self.range(u)]
    }

    /// Weights of `u`'s out-edges, parallel to [`Graph::neighbors`].
    pub fn neighbor_weights(&self, u: NodeId) -> Option<&[f32]> {
        let r = self.range(u);
        self.edge_weights.as_ref().map(|w| &w[r])
    }

    /// Weight of the `i`-th edge in CSR order (1.0 when unweighted).
    pub fn weight_at(&self, edge: usize) -> f32 {
        self.edge_weights.as_ref().map_or(1.0, |w| w[edge])
    }

    pub fn edge_range(&self, u: NodeId) -> std::ops::Range<usize> {
        self.range(u)
    }

    pub fn degree(&self, u: NodeId) -> usize {
        let u = u as usize;
        (self.row_offsets[u + 1] - self.row_offsets[u]) as usize
    }

    pub fn in_degree(&self, u: NodeId) -> usize {
        let u = u as usize;
        (self.t_row_offsets[u + 1] - self.t_row_offsets[u]) as usize
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.row_offsets.windows(2).map(|w| (w[1] - w[0]) as usize).collect()
    }

    /// The reversed graph: every edge `(u, v)` becomes `(v, u)`.
    pub fn transpose(&self) -> Graph {
        Graph {
            num_nodes: self.num_nodes,
            row_offsets: self.t_row_offsets.clone(),
            col_indices: self.t_col_indices.clone(),
            edge_weights: self.t_edge_weights.clone(),
            t_row_offsets: self.row_offsets.clone(),
            t_col_indices: self.col_indices.clone(),
            t_edge_weights: self.edge_weights.clone(),
        }
    }

    /// Checks every structural invariant, including that the stored
    /// transpose is exactly the transpose of the forward arrays.
    pub fn validate(&self) -> Result<()> {
        check_csr(self.num_nodes, &self.row_offsets, &self.col_indices, "forward")?;
        check_csr(self.num_nodes, &self.t_row_offsets, &self.t_col_indices, "transpose")?;
        if self.edge_weights.is_some() != self.t_edge_weights.is_some() {
            return Err(Error::Format("weights present on one direction only".into()));
        }
        for w in [&self.edge_weights, &self.t_edge_weights].into_iter().flatten() {
            if w.len() != self.col_indices.len() {
                return Err(Error::Format("weight array length mismatch".into()));
            }
        }
        let expected = transpose_arrays(
            self.num_nodes,
            &self.row_offsets,
            &self.col_indices,
            self.edge_weights.as_deref(),
        );
        if expected.0 != self.t_row_offsets
            || expected.1 != self.t_col_indices
            || expected.2 != self.t_edge_weights
        {
            return Err(Error::Format("transpose does not match forward adjacency".into()));
        }
        Ok(())
    }
}

fn check_csr(n: usize, offsets: &[u64], indices: &[NodeId], which: &str) -> Result<()> {
    if offsets.len() != n + 1 || offsets[0] != 0 || offsets[n] as usize != indices.len() {
        return Err(Error::Format(format!("{which} offsets do not frame the index array")));
    }
    if offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Format(format!("{which} offsets decrease")));
    }
    if indices.iter().any(|&v| v >= n as u64) {
        return Err(Error::Format(format!("{which} index out of range")));
    }
    Ok(())
}

/// Stable counting sort of `(key, value)` pairs into CSR arrays.
fn bucket(
    n: usize,
    keys: &[NodeId],
    values: &[NodeId],
    weights: Option<&[f32]>,
) -> (Vec<u64>, Vec<NodeId>, Option<Vec<f32>>) {
    let mut offsets = vec![0u64; n + 1];
    for &k in keys {
        offsets[k as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor: Vec<u64> = offsets[..n].to_vec();
    let mut out = vec![0; values.len()];
    let mut out_w = weights.map(|_| vec![0f32; values.len()]);
    for (e, (&k, &v)) in keys.iter().zip(values).enumerate() {
        let slot = cursor[k as usize] as usize;
        cursor[k as usize] += 1;
        out[slot] = v;
        if let (Some(ow), Some(w)) = (out_w.as_mut(), weights) {
            ow[slot] = w[e];
        }
    }
    (offsets, out, out_w)
}

fn transpose_arrays(
    n: usize,
    offsets: &[u64],
    indices: &[NodeId],
    weights: Option<&[f32]>,
) -> (Vec<u64>, Vec<NodeId>, Option<Vec<f32>>) {
    let mut srcs = Vec::with_capacity(indices.len());
    for u in 0..n {
        for _ in offsets[u]..offsets[u + 1] {
            srcs.push(u as NodeId);
        }
    }
    bucket(n, indices, &srcs, weights)
}

/// Row-major matrix of 32-bit reals. Used for node features, hidden states
/// and dense layer parameters alike.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    num_nodes: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(num_nodes: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != num_nodes * dim {
            return Err(Error::validation(format!(
                "feature data has {} values, expected {num_nodes}x{dim}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("feature matrix contains non-finite values"));
        }
        Ok(FeatureMatrix { num_nodes, dim, data })
    }

    pub fn zeros(num_nodes: usize, dim: usize) -> Self {
        FeatureMatrix { num_nodes, dim, data: vec![0.0; num_nodes * dim] }
    }

    /// Standard-normal entries from a seeded stream.
    pub fn random(num_nodes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let data = (0..num_nodes * dim).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
        FeatureMatrix { num_nodes, dim, data }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.dim + j]
    }

    /// Copies the listed rows into a new matrix, in order.
    pub fn gather(&self, rows: impl IntoIterator<Item = usize>) -> FeatureMatrix {
        let mut data = Vec::new();
        let mut n = 0;
        for r in rows {
            data.extend_from_slice(self.row(r));
            n += 1;
        }
        FeatureMatrix { num_nodes: n, dim: self.dim, data }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum GraphModel {
    /// Undirected G(n, p) with `p = avg_degree / (n - 1)`.
    ErdosRenyi { avg_degree: f64 },
    /// Undirected Chung-Lu graph whose expected degrees follow a power law
    /// with the given exponent.
    PowerLaw { avg_degree: f64, exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphGenSpec {
    #[serde(flatten)]
    pub model: GraphModel,
    pub num_nodes: usize,
    pub seed: u64,
}

/// Generates a synthetic undirected graph. Both directions of every edge are
/// stored and each adjacency row is sorted, so `num_edges` counts directed
/// entries and equals `num_nodes * avg_degree` in expectation.
pub fn generate(spec: &GraphGenSpec) -> Result<Graph> {
    let n = spec.num_nodes;
    if n == 0 {
        return Err(Error::validation("graph must have at least one node"));
    }
    if n as u64 >= SENTINEL {
        return Err(Error::validation("node count collides with the sentinel id"));
    }
    let mut rng = rng::seeded(spec.seed);
    let pairs = match spec.model {
        GraphModel::ErdosRenyi { avg_degree } => {
            if !(avg_degree >= 0.0 && avg_degree.is_finite()) {
                return Err(Error::validation("avg_degree must be a finite non-negative number"));
            }
            erdos_renyi_pairs(n, avg_degree, &mut rng)
        }
        GraphModel::PowerLaw { avg_degree, exponent } => {
            if !(avg_degree >= 0.0 && avg_degree.is_finite()) {
                return Err(Error::validation("avg_degree must be a finite non-negative number"));
            }
            if !(exponent > 1.0 && exponent.is_finite()) {
                return Err(Error::validation("power-law exponent must exceed 1"));
            }
            chung_lu_pairs(n, avg_degree, exponent, &mut rng)
        }
    };
    let mut edges = Vec::with_capacity(pairs.len() * 2);
    for (u, v) in pairs {
        edges.push((u, v));
        edges.push((v, u));
    }
    edges.sort_unstable();
    Graph::from_edges(n, &edges, None)
}

// Batagelj-Brandes geometric skipping over the pairs v > w.
fn erdos_renyi_pairs(n: usize, avg_degree: f64, rng: &mut rng::Rng) -> Vec<(NodeId, NodeId)> {
    let mut pairs = Vec::new();
    if n < 2 || avg_degree == 0.0 {
        return pairs;
    }
    let p = avg_degree / (n as f64 - 1.0);
    if p >= 1.0 {
        for v in 1..n {
            for w in 0..v {
                pairs.push((v as NodeId, w as NodeId));
            }
        }
        return pairs;
    }
    let log_q = (1.0 - p).ln();
    let (mut v, mut w) = (1i64, -1i64);
    let n = n as i64;
    while v < n {
        let r: f64 = rng.random();
        w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
        while w >= v && v < n {
            w -= v;
            v += 1;
        }
        if v < n {
            pairs.push((v as NodeId, w as NodeId));
        }
    }
    pairs
}

fn chung_lu_pairs(
    n: usize,
    avg_degree: f64,
    exponent: f64,
    rng: &mut rng::Rng,
) -> Vec<(NodeId, NodeId)> {
    let target = (n as f64 * avg_degree / 2.0).round() as usize;
    let max_pairs = n * (n - 1) / 2;
    let target = target.min(max_pairs);
    if target == 0 {
        return Vec::new();
    }
    let alpha = 1.0 / (exponent - 1.0);
    let mut cumulative = Vec::with_capacity(n);
    let mut total = 0.0f64;
    for i in 0..n {
        total += ((i + 1) as f64).powf(-alpha);
        cumulative.push(total);
    }
    // Node labels are shuffled so degree is not correlated with id.
    let mut label: Vec<NodeId> = (0..n as NodeId).collect();
    label.shuffle(rng);

    let draw = |rng: &mut rng::Rng| -> usize {
        let x = rng.random::<f64>() * total;
        cumulative.partition_point(|&c| c <= x).min(n - 1)
    };
    let mut seen = HashSet::with_capacity(target);
    let mut pairs = Vec::with_capacity(target);
    let max_attempts = target.saturating_mul(20);
    let mut attempts = 0;
    while pairs.len() < target && attempts < max_attempts {
        attempts += 1;
        let a = draw(rng);
        let b = draw(rng);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push((label[key.0], label[key.1]));
        }
    }
    pairs
}

/// Reads a whitespace-separated `u v [w]` edge list. Lines starting with
/// `#` and blank lines are skipped. When any line carries a weight, edges
/// without one get weight 1.
pub fn load_edge_list(path: impl AsRef<Path>, num_nodes: usize) -> Result<Graph> {
    let file = File::open(path)?;
    parse_edge_list(BufReader::new(file), num_nodes)
}

pub fn parse_edge_list(reader: impl BufRead, num_nodes: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut weights: Vec<Option<f32>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `u v [w]`, got {} fields", fields.len()),
            });
        }
        let id = |s: &str| -> Result<NodeId> {
            s.parse::<NodeId>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("bad node id `{s}`: {e}"),
            })
        };
        let (u, v) = (id(fields[0])?, id(fields[1])?);
        for x in [u, v] {
            if x >= num_nodes as u64 {
                return Err(Error::validation(format!(
                    "line {lineno}: node id {x} out of range for {num_nodes} nodes"
                )));
            }
        }
        let w = match fields.get(2) {
            Some(s) => {
                let w: f32 = s.parse().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad weight `{s}`: {e}"),
                })?;
                if !w.is_finite() {
                    return Err(Error::Parse { line: lineno, message: "weight is not finite".into() });
                }
                Some(w)
            }
            None => None,
        };
        edges.push((u, v));
        weights.push(w);
    }
    let weights = if weights.iter().any(Option::is_some) {
        Some(weights.into_iter().map(|w| w.unwrap_or(1.0)).collect())
    } else {
        None
    };
    Graph::from_edges(num_nodes, &edges, weights)
}

/// Writes the graph in the `MGL1` little-endian binary layout.
pub fn save_binary(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_binary(g, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_binary(g: &Graph, w: &mut impl Write) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(g.num_nodes as u64).to_le_bytes())?;
    w.write_all(&(g.num_edges() as u64).to_le_bytes())?;
    let mut flags = FLAG_TRANSPOSE;
    if g.edge_weights.is_some() {
        flags |= FLAG_WEIGHTS;
    }
    w.write_all(&[flags])?;
    let put_u64 = |w: &mut dyn Write, xs: &[u64]| -> io::Result<()> {
        for x in xs {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    };
    let put_f32 = |w: &mut dyn Write, xs: &[f32]| -> io::Result<()> {
        for x in xs {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    };
    put_u64(w, &g.row_offsets)?;
    put_u64(w, &g.col_indices)?;
    if let Some(ws) = &g.edge_weights {
        put_f32(w, ws)?;
    }
    put_u64(w, &g.t_row_offsets)?;
    put_u64(w, &g.t_col_indices)?;
    if let Some(ws) = &g.t_edge_weights {
        put_f32(w, ws)?;
    }
    Ok(())
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<Graph> {
    let mut r = BufReader::new(File::open(path)?);
    read_binary(&mut r)
}

pub fn read_binary(r: &mut impl Read) -> Result<Graph> {
    let truncated = |e: io::Error| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Format("file is truncated".into())
        } else {
            Error::Io(e)
        }
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected MGL1")));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(truncated)?;
    let num_nodes = u64::from_le_bytes(word);
    r.read_exact(&mut word).map_err(truncated)?;
    let num_edges = u64::from_le_bytes(word);
    let mut flags = [0u8; 1];
    r.read_exact(&mut flags).map_err(truncated)?;
    let flags = flags[0];
    if flags & !(FLAG_WEIGHTS | FLAG_TRANSPOSE) != 0 {
        return Err(Error::Format(format!("unknown flag bits {flags:#04b}")));
    }
    if num_nodes >= SENTINEL {
        return Err(Error::Format("node count out of range".into()));
    }
    let n = usize::try_from(num_nodes).map_err(|_| Error::Format("node count too large".into()))?;
    let m = usize::try_from(num_edges).map_err(|_| Error::Format("edge count too large".into()))?;

    let get_u64 = |r: &mut dyn Read, len: usize| -> Result<Vec<u64>> {
        let mut buf = vec![0u8; len.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?];
        r.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let get_f32 = |r: &mut dyn Read, len: usize| -> Result<Vec<f32>> {
        let mut buf = vec![0u8; len.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?];
        r.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    };

    let row_offsets = get_u64(r, n + 1)?;
    let col_indices = get_u64(r, m)?;
    let edge_weights = if flags & FLAG_WEIGHTS != 0 { Some(get_f32(r, m)?) } else { None };
    check_csr(n, &row_offsets, &col_indices, "forward")?;

    let g = if flags & FLAG_TRANSPOSE != 0 {
        let t_row_offsets = get_u64(r, n + 1)?;
        let t_col_indices = get_u64(r, m)?;
        let t_edge_weights = if flags & FLAG_WEIGHTS != 0 { Some(get_f32(r, m)?) } else { None };
        let g = Graph {
            num_nodes: n,
            row_offsets,
            col_indices,
            edge_weights,
            t_row_offsets,
            t_col_indices,
            t_edge_weights,
        };
        g.validate()?;
        g
    } else {
        Graph::with_transpose(n, row_offsets, col_indices, edge_weights)
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after graph payload".into()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Graph {
        parse_edge_list("0 1\n1 2\n2 0".as_bytes(), 3).unwrap()
    }

    #[test]
    fn ring_edge_list() {
        let g = ring();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.row_offsets(), &[0, 1, 2, 3]);
        assert_eq!(g.t_col_indices(), &[2, 0, 1]);
        g.validate().unwrap();
    }

    #[test]
    fn empty_edge_list() {
        let g = parse_edge_list("".as_bytes(), 4).unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.row_offsets(), &[0, 0, 0, 0, 0]);
    }

    #[test]
    fn out_of_range_id_is_validation_error() {
        let err = parse_edge_list("0 5".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_edge_list("# header\n0 1\n1 x\n".as_bytes(), 3).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let err = parse_edge_list("0 1 2 3".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn weights_duplicates_and_self_loops_preserved() {
        let g = parse_edge_list("0 1 0.5\n0 1\n2 2 3\n".as_bytes(), 3).unwrap();
        assert_eq!(g.neighbors(0), &[1, 1]);
        assert_eq!(g.neighbor_weights(0).unwrap(), &[0.5, 1.0]);
        assert_eq!(g.neighbors(2), &[2]);
        assert_eq!(g.t_edge_weights().unwrap().len(), 3);
        g.validate().unwrap();
    }

    #[test]
    fn binary_round_trip_and_truncation() {
        let g = parse_edge_list("0 1 0.25\n1 2\n2 0 2".as_bytes(), 3).unwrap();
        let mut buf = Vec::new();
        write_binary(&g, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"MGL1");
        let back = read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, g);

        let cut = &buf[..buf.len() - 3];
        assert!(matches!(read_binary(&mut &cut[..]), Err(Error::Format(_))));

        let mut bad = buf.clone();
        bad[3] = b'9';
        assert!(matches!(read_binary(&mut bad.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn zero_nodes_rejected() {
        let spec = GraphGenSpec {
            model: GraphModel::ErdosRenyi { avg_degree: 1.0 },
            num_nodes: 0,
            seed: 1,
        };
        assert!(matches!(generate(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn edgeless_er() {
        let spec = GraphGenSpec {
            model: GraphModel::ErdosRenyi { avg_degree: 0.0 },
            num_nodes: 100,
            seed: 1,
        };
        let g = generate(&spec).unwrap();
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.num_nodes(), 100);
    }

    #[test]
    fn transpose_is_involution() {
        let spec = GraphGenSpec {
            model: GraphModel::PowerLaw { avg_degree: 6.0, exponent: 2.3 },
            num_nodes: 500,
            seed: 4,
        };
        let g = generate(&spec).unwrap();
        assert_eq!(g.transpose().transpose(), g);
        let out: usize = g.degrees().iter().sum();
        let inn: usize = (0..g.num_nodes() as u64).map(|u| g.in_degree(u)).sum();
        assert_eq!(out, g.num_edges());
        assert_eq!(inn, g.num_edges());
    }

    #[test]
    fn feature_matrix_rejects_bad_shapes() {
        assert!(FeatureMatrix::new(2, 3, vec![0.0; 5]).is_err());
        assert!(FeatureMatrix::new(1, 1, vec![f32::NAN]).is_err());
        let m = FeatureMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.gather([1, 0]).data(), &[3.0, 4.0, 1.0, 2.0]);
    }
}
