//! Inhomogeneous random graphs: each pair `{i,j}` is an edge independently
//! with probability `min{c K̃_N(i,j)/N, 1}`.
//!
//! Pair uniforms come from one ChaCha stream per row `i` (draws for `j > i` in
//! order), so a graph is a pure function of `(kernel, N, c, seed)` and two
//! kernels sampled with the same seed are maximally coupled.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{block_average_matrix, Kernel};
use crate::rng::stream_rng;

pub use crate::species::{species_partition, SpeciesPartition, SpeciesStructure};

/// Simple undirected graph on vertices `0..n` with a CSR neighbor index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Graph {
    /// Build from arbitrary pairs; loops are rejected, duplicates merged.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!("edge ({a},{b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at vertex {a}")));
            }
            edges.push((a.min(b) as u32, a.max(b) as u32));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted(n, edges))
    }

    fn from_sorted(n: usize, edges: Vec<(u32, u32)>) -> Self {
        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; offsets[n]];
        for &(a, b) in &edges {
            neighbors[fill[a as usize]] = b;
            fill[a as usize] += 1;
            neighbors[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        Self { n, edges, offsets, neighbors }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n as u32).flat_map(|a| (a + 1..n as u32).map(move |b| (a, b))).collect();
        Self::from_sorted(n, edges)
    }

    pub fn cycle(n: usize) -> Self {
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple for n ≥ 3")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted, deduplicated `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).contains(&(b as u32))
    }

    /// Edge-list text: header `N M`, then one 1-based `i j` per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::with_capacity(12 * (self.edges.len() + 1));
        let _ = writeln!(s, "{} {}", self.n, self.edges.len());
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "{} {}", a + 1, b + 1);
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty edge list".into()))?;
        let (n, m) = parse_pair(header)?;
        let mut pairs = Vec::with_capacity(m);
        for line in lines {
            let (a, b) = parse_pair(line)?;
            if a == 0 || b == 0 {
                return Err(Error::InvalidInput(format!("edge `{line}` is not 1-based")));
            }
            pairs.push((a - 1, b - 1));
        }
        if pairs.len() != m {
            return Err(Error::InvalidInput(format!("header announces {m} edges, found {}", pairs.len())));
        }
        Self::from_edges(n, pairs)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_edge_list())?)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::InvalidInput(format!("expected two integers, got `{line}`"))),
    }
}

/// Pair probabilities `p_ij = min{c K̃_N(i,j)/N, 1}` for `i < j`, row-major
/// upper triangle.
#[derive(Debug, Clone)]
pub struct EdgeProbabilities {
    n: usize,
    probs: Vec<f64>,
}

impl EdgeProbabilities {
    pub fn new(kernel: &Kernel, n: usize, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::InvalidInput(format!("degree parameter c = {c} must be ≥ 0")));
        }
        let avg = block_average_matrix(kernel, n)?;
        let mut probs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                probs.push((c * avg[i * n + j] / n as f64).min(1.0));
            }
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row_start(&self, i: usize) -> usize {
        i * (2 * self.n - i - 1) / 2
    }

    /// Probability of pair `{i,j}`, 0-based, `i ≠ j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        self.probs[self.row_start(a) + (b - a - 1)]
    }

    /// `Σ_{i<j} p_ij`.
    pub fn expected_edges(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Expected degree of vertex `v`.
    pub fn expected_degree(&self, v: usize) -> f64 {
        (0..self.n).filter(|&u| u != v).map(|u| self.get(u, v)).sum()
    }

    pub fn sample(&self, seed: u64) -> Graph {
        let tables = [self];
        let mut out = sample_rows(&tables, seed);
        Graph::from_sorted(self.n, out.pop().expect("one table"))
    }
}

/// Edges of each table driven by shared per-row uniforms.
fn sample_rows(tables: &[&EdgeProbabilities], seed: u64) -> Vec<Vec<(u32, u32)>> {
    let n = tables[0].n;
    let rows: Vec<Vec<Vec<(u32, u32)>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut out = vec![Vec::new(); tables.len()];
            let start: Vec<usize> = tables.iter().map(|t| t.row_start(i)).collect();
            for j in i + 1..n {
                let u: f64 = rng.random();
                for (t, table) in tables.iter().enumerate() {
                    if u < table.probs[start[t] + (j - i - 1)] {
                        out[t].push((i as u32, j as u32));
                    }
                }
            }
            out
        })
        .collect();
    (0..tables.len()).map(|t| rows.iter().flat_map(|r| r[t].iter().copied()).collect()).collect()
}

/// One draw of the inhomogeneous random graph.
pub fn sample_graph(kernel: &Kernel, n: usize, c: f64, seed: u64) -> Result<Graph> {
    Ok(EdgeProbabilities::new(kernel, n, c)?.sample(seed))
}

/// Maximally coupled draws from two kernels: pair `{i,j}` is present in each
/// graph iff the shared uniform `U_ij` is below that graph's probability.
pub fn sample_coupled(a: &EdgeProbabilities, b: &EdgeProbabilities, seed: u64) -> Result<(Graph, Graph)> {
    if a.n != b.n {
        return Err(Error::LengthMismatch { expected: a.n, got: b.n });
    }
    let mut out = sample_rows(&[a, b], seed);
    let gb = Graph::from_sorted(b.n, out.pop().expect("two tables"));
    let ga = Graph::from_sorted(a.n, out.pop().expect("two tables"));
    Ok((ga, gb))
}

/// Kernel-level convenience wrapper around [`sample_coupled`].
pub fn sample_coupled_kernels(ka: &Kernel, kb: &Kernel, n: usize, c: f64, seed: u64) -> Result<(Graph, Graph)> {
    sample_coupled(&EdgeProbabilities::new(ka, n, c)?, &EdgeProbabilities::new(kb, n, c)?, seed)
}

/// `Σ_{i<j} min{c K̃_N(i,j)/N, 1}`.
pub fn expected_edges(kernel: &Kernel, n: usize, c: f64) -> Result<f64> {
    Ok(EdgeProbabilities::new(kernel, n, c)?.expected_edges())
}
