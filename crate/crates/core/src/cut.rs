//! Cut values and Max κ-cut solvers.
//!
//! Both solvers work on any symmetric pair-weighted objective
//! `Σ_{i<j} w_ij 1(σ_i ≠ σ_j)` through [`CutObjective`]; a [`Graph`] is the unit
//! weight case and the Gaussian surrogate in `spinglass` is a dense one.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{sample_graph, Graph};
use crate::kernel::Kernel;
use crate::rng::{derive_seed, stream_rng};
use crate::stats::Estimate;
pub use crate::species::{empirical_proportions, ConstrainedSpace, ProportionConstraint};

/// Default cap on enumerated states.
pub const ENUMERATION_BUDGET: f64 = 1e8;

const GAIN_EPS: f64 = 1e-10;

/// A κ-coloring of the vertices, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutAssignment {
    pub sigma: Vec<usize>,
    pub kappa: usize,
}

impl CutAssignment {
    pub fn new(sigma: Vec<usize>, kappa: usize) -> Result<Self> {
        if let Some(&bad) = sigma.iter().find(|&&k| k >= kappa) {
            return Err(Error::InvalidInput(format!("color {bad} out of range for κ = {kappa}")));
        }
        Ok(Self { sigma, kappa })
    }

    /// From colors written `1..=κ`.
    pub fn from_one_based(sigma: &[usize], kappa: usize) -> Result<Self> {
        if sigma.contains(&0) {
            return Err(Error::InvalidInput("colors are 1-based".into()));
        }
        Self::new(sigma.iter().map(|k| k - 1).collect(), kappa)
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.sigma.iter().map(|k| k + 1).collect()
    }
}

/// Symmetric pair weights `w_ij`, `i ≠ j`.
pub trait CutObjective: Sync {
    fn n(&self) -> usize;

    /// Visit `(u, w_vu)` for every `u ≠ v` with nonzero weight.
    fn for_each_neighbor<F: FnMut(usize, f64)>(&self, v: usize, f: F);

    fn weight(&self, u: usize, v: usize) -> f64;

    /// `Σ_{i<j} w_ij 1(σ_i ≠ σ_j)`.
    fn cut_weight(&self, sigma: &[usize]) -> f64 {
        let mut total = 0.0;
        for v in 0..self.n() {
            self.for_each_neighbor(v, |u, w| {
                if u > v && sigma[u] != sigma[v] {
                    total += w;
                }
            });
        }
        total
    }
}

impl CutObjective for Graph {
    fn n(&self) -> usize {
        Graph::n(self)
    }

    fn for_each_neighbor<F: FnMut(usize, f64)>(&self, v: usize, mut f: F) {
        for &u in self.neighbors(v) {
            f(u as usize, 1.0);
        }
    }

    fn weight(&self, u: usize, v: usize) -> f64 {
        if self.has_edge(u, v) {
            1.0
        } else {
            0.0
        }
    }
}

/// Dense symmetric weights, row-major `n × n` (diagonal ignored).
#[derive(Debug, Clone)]
pub struct DenseWeights {
    n: usize,
    w: Vec<f64>,
}

impl DenseWeights {
    pub fn new(n: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: w.len() });
        }
        for i in 0..n {
            for j in i + 1..n {
                if w[i * n + j] != w[j * n + i] {
                    return Err(Error::NonSymmetric { row: i, col: j, a: w[i * n + j], b: w[j * n + i] });
                }
            }
        }
        Ok(Self { n, w })
    }
}

impl CutObjective for DenseWeights {
    fn n(&self) -> usize {
        self.n
    }

    fn for_each_neighbor<F: FnMut(usize, f64)>(&self, v: usize, mut f: F) {
        let row = &self.w[v * self.n..(v + 1) * self.n];
        for (u, &w) in row.iter().enumerate() {
            if u != v {
                f(u, w);
            }
        }
    }

    fn weight(&self, u: usize, v: usize) -> f64 {
        if u == v {
            0.0
        } else {
            self.w[u * self.n + v]
        }
    }
}

/// Number of edges `{i,j}` with `σ_i ≠ σ_j`.
pub fn cut_value(graph: &Graph, assignment: &CutAssignment) -> Result<usize> {
    if assignment.sigma.len() != graph.n() {
        return Err(Error::LengthMismatch { expected: graph.n(), got: assignment.sigma.len() });
    }
    let s = &assignment.sigma;
    Ok(graph.edges().iter().filter(|(a, b)| s[*a as usize] != s[*b as usize]).count())
}

/// Best value found and a maximizing assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSolution {
    pub value: f64,
    pub assignment: CutAssignment,
}

/// Visit every admissible state with its objective value, in lexicographic
/// order. Without a constraint σ_1 is pinned to the first color, so each
/// color-relabeling orbit is visited `1/κ` as often.
pub(crate) fn enumerate<O: CutObjective, F: FnMut(f64, &[usize])>(
    obj: &O,
    kappa: usize,
    space: Option<&ConstrainedSpace>,
    budget: f64,
    mut visit: F,
) -> Result<()> {
    let n = obj.n();
    check_space(n, kappa, space)?;
    let free = if space.is_none() && n > 0 { n - 1 } else { n };
    let states = (kappa as f64).powi(free as i32);
    if states > budget {
        return Err(Error::BudgetExceeded { states, budget });
    }
    let start = n - free;
    let mut sigma = vec![0usize; n];
    let mut value = 0.0;
    let mut counts = space.map(|s| s.counts_of(&sigma));
    let mut seen = false;
    loop {
        let ok = match (space, &counts) {
            (Some(s), Some(c)) => s.windows.admits(c),
            _ => true,
        };
        if ok {
            seen = true;
            visit(value, &sigma);
        }
        // odometer step, last position fastest
        let Some(p) = (start..n).rev().find(|&p| sigma[p] + 1 < kappa) else { break };
        for q in (p..n).rev() {
            let old = sigma[q];
            let new = if q == p { old + 1 } else { 0 };
            obj.for_each_neighbor(q, |u, w| {
                if sigma[u] == old {
                    value += w;
                } else if sigma[u] == new {
                    value -= w;
                }
            });
            sigma[q] = new;
            if let (Some(s), Some(c)) = (space, counts.as_mut()) {
                let sp = s.partition.species_of(q);
                c[sp * kappa + old] -= 1;
                c[sp * kappa + new] += 1;
            }
        }
    }
    if seen {
        Ok(())
    } else {
        Err(Error::EmptyConstraintSet)
    }
}

/// Exact maximum of `Σ_{i<j} w_ij 1(σ_i≠σ_j)` by enumeration.
///
/// The first maximizer in lexicographic order is kept. Without a constraint
/// σ_1 is pinned to the first color.
pub fn exhaustive_max<O: CutObjective>(
    obj: &O,
    kappa: usize,
    space: Option<&ConstrainedSpace>,
    budget: f64,
) -> Result<CutSolution> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    enumerate(obj, kappa, space, budget, |value, sigma| {
        if best.as_ref().is_none_or(|(b, _)| value > *b + GAIN_EPS) {
            best = Some((value, sigma.to_vec()));
        }
    })?;
    let (_, sigma) = best.ok_or(Error::EmptyConstraintSet)?;
    Ok(CutSolution { value: obj.cut_weight(&sigma), assignment: CutAssignment { sigma, kappa } })
}

fn check_space(n: usize, kappa: usize, space: Option<&ConstrainedSpace>) -> Result<()> {
    if kappa == 0 {
        return Err(Error::InvalidInput("κ must be ≥ 1".into()));
    }
    if let Some(s) = space {
        if s.partition.n() != n {
            return Err(Error::LengthMismatch { expected: n, got: s.partition.n() });
        }
        if s.kappa() != kappa {
            return Err(Error::LengthMismatch { expected: kappa, got: s.kappa() });
        }
    }
    Ok(())
}

/// Max κ-cut of a graph by enumeration.
pub fn maxcut_exhaustive(graph: &Graph, kappa: usize, space: Option<&ConstrainedSpace>) -> Result<CutSolution> {
    exhaustive_max(graph, kappa, space, ENUMERATION_BUDGET)
}

/// Incremental local-search state: `field[v*κ + k] = Σ_u w_vu 1(σ_u = k)`.
struct Search<'a, O> {
    obj: &'a O,
    kappa: usize,
    sigma: Vec<usize>,
    field: Vec<f64>,
}

impl<'a, O: CutObjective> Search<'a, O> {
    fn new(obj: &'a O, kappa: usize, sigma: Vec<usize>) -> Self {
        let mut field = vec![0.0; obj.n() * kappa];
        for v in 0..obj.n() {
            obj.for_each_neighbor(v, |u, w| field[v * kappa + sigma[u]] += w);
        }
        Self { obj, kappa, sigma, field }
    }

    /// Gain of recoloring `v` to `b`.
    fn gain(&self, v: usize, b: usize) -> f64 {
        let a = self.sigma[v];
        self.field[v * self.kappa + a] - self.field[v * self.kappa + b]
    }

    fn recolor(&mut self, v: usize, b: usize) {
        let a = self.sigma[v];
        let k = self.kappa;
        let field = &mut self.field;
        self.obj.for_each_neighbor(v, |u, w| {
            field[u * k + a] -= w;
            field[u * k + b] += w;
        });
        self.sigma[v] = b;
    }

    /// Steepest single recolors until none improves.
    fn descend_free(&mut self) {
        loop {
            let mut best = (GAIN_EPS, usize::MAX, 0);
            for v in 0..self.sigma.len() {
                for b in 0..self.kappa {
                    if b != self.sigma[v] {
                        let g = self.gain(v, b);
                        if g > best.0 {
                            best = (g, v, b);
                        }
                    }
                }
            }
            if best.1 == usize::MAX {
                return;
            }
            self.recolor(best.1, best.2);
        }
    }

    /// Steepest moves that stay inside the count windows: recolors (only when
    /// the window is not exact) and same-species swaps.
    fn descend_constrained(&mut self, space: &ConstrainedSpace) {
        let n = self.sigma.len();
        let k = self.kappa;
        let mut counts = space.counts_of(&self.sigma);
        let exact = space.windows.is_exact();
        loop {
            // (gain, u, v or color, is_swap)
            let mut best: Option<(f64, usize, usize, bool)> = None;
            let better = |g: f64, best: &Option<(f64, usize, usize, bool)>| g > best.map_or(GAIN_EPS, |b| b.0);
            if !exact {
                for v in 0..n {
                    let s = space.partition.species_of(v);
                    let a = self.sigma[v];
                    if counts[s * k + a] == space.windows.lo[s * k + a] {
                        continue;
                    }
                    for b in 0..k {
                        if b != a && counts[s * k + b] < space.windows.hi[s * k + b] {
                            let g = self.gain(v, b);
                            if better(g, &best) {
                                best = Some((g, v, b, false));
                            }
                        }
                    }
                }
            }
            for u in 0..n {
                for v in u + 1..n {
                    let (a, b) = (self.sigma[u], self.sigma[v]);
                    if a == b || space.partition.species_of(u) != space.partition.species_of(v) {
                        continue;
                    }
                    let g = self.gain(u, b) + self.gain(v, a) + 2.0 * self.obj.weight(u, v);
                    if better(g, &best) {
                        best = Some((g, u, v, true));
                    }
                }
            }
            match best {
                None => return,
                Some((_, u, v, true)) => {
                    let (a, b) = (self.sigma[u], self.sigma[v]);
                    self.recolor(u, b);
                    self.recolor(v, a);
                }
                Some((_, v, b, false)) => {
                    let s = space.partition.species_of(v);
                    counts[s * k + self.sigma[v]] -= 1;
                    counts[s * k + b] += 1;
                    self.recolor(v, b);
                }
            }
        }
    }
}

fn random_start<R: Rng>(n: usize, kappa: usize, space: Option<&ConstrainedSpace>, rng: &mut R) -> Vec<usize> {
    match space {
        None => (0..n).map(|_| rng.random_range(0..kappa)).collect(),
        Some(s) => {
            let counts = s.windows.representative();
            let mut sigma = vec![0; n];
            for sp in 0..s.partition.species_count() {
                let mut members: Vec<usize> = (0..n).filter(|&i| s.partition.species_of(i) == sp).collect();
                members.shuffle(rng);
                let mut it = members.into_iter();
                for k in 0..kappa {
                    for v in it.by_ref().take(counts[sp * kappa + k]) {
                        sigma[v] = k;
                    }
                }
            }
            sigma
        }
    }
}

/// Best of `restarts` steepest-ascent runs from seeded random starts.
///
/// Restart `r` uses stream `r` of `seed`, so the value is nondecreasing in
/// `restarts`; ties go to the lowest restart index.
pub fn local_search_max<O: CutObjective>(
    obj: &O,
    kappa: usize,
    restarts: usize,
    seed: u64,
    space: Option<&ConstrainedSpace>,
) -> Result<CutSolution> {
    check_space(obj.n(), kappa, space)?;
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let n = obj.n();
    let runs: Vec<(f64, Vec<usize>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let sigma = random_start(n, kappa, space, &mut rng);
            let mut search = Search::new(obj, kappa, sigma);
            match space {
                None => search.descend_free(),
                Some(s) => search.descend_constrained(s),
            }
            (obj.cut_weight(&search.sigma), search.sigma)
        })
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 + GAIN_EPS {
            best = i;
        }
    }
    let (value, sigma) = runs.into_iter().nth(best).expect("at least one restart");
    Ok(CutSolution { value, assignment: CutAssignment { sigma, kappa } })
}

/// Heuristic Max κ-cut of a graph.
pub fn maxcut_localsearch(
    graph: &Graph,
    kappa: usize,
    restarts: usize,
    seed: u64,
    space: Option<&ConstrainedSpace>,
) -> Result<CutSolution> {
    local_search_max(graph, kappa, restarts, seed, space)
}

/// `E MaxCut/N` over `replicas` sampled graphs, each solved by
/// [`maxcut_localsearch`]. Replica `i` draws its graph from
/// `derive_seed(seed, 2i)` and its starts from `derive_seed(seed, 2i+1)`.
pub fn maxcut_replicas(
    kernel: &Kernel,
    n: usize,
    c: f64,
    kappa: usize,
    replicas: usize,
    restarts: usize,
    seed: u64,
) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one vertex".into()));
    }
    let values = (0..replicas as u64)
        .map(|i| {
            let g = sample_graph(kernel, n, c, derive_seed(seed, 2 * i))?;
            let best = maxcut_localsearch(&g, kappa, restarts, derive_seed(seed, 2 * i + 1), None)?;
            Ok(best.value / n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::{Proportions, SpeciesPartition};

    fn triangle() -> Graph {
        Graph::complete(3)
    }

    #[test]
    fn cut_value_examples() {
        let t = triangle();
        assert_eq!(cut_value(&t, &CutAssignment::from_one_based(&[1, 1, 2], 2).unwrap()).unwrap(), 2);
        assert_eq!(cut_value(&t, &CutAssignment::from_one_based(&[1, 2, 3], 3).unwrap()).unwrap(), 3);
        assert_eq!(cut_value(&Graph::empty(4), &CutAssignment::new(vec![0, 1, 0, 1], 2).unwrap()).unwrap(), 0);
        assert!(matches!(
            cut_value(&t, &CutAssignment::new(vec![0, 1], 2).unwrap()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn exhaustive_fixtures() {
        assert_eq!(maxcut_exhaustive(&triangle(), 2, None).unwrap().value, 2.0);
        let k4 = maxcut_exhaustive(&Graph::complete(4), 3, None).unwrap();
        assert_eq!(k4.value, 5.0);
        assert_eq!(k4.assignment.sigma, vec![0, 0, 1, 2]);
        let c5 = maxcut_exhaustive(&Graph::cycle(5), 2, None).unwrap();
        assert_eq!(c5.value, 4.0);
        assert_eq!(c5.assignment.sigma, vec![0, 0, 1, 0, 1]);
        assert_eq!(maxcut_exhaustive(&Graph::complete(9), 3, None).unwrap().value, 27.0);
    }

    #[test]
    fn budget_is_enforced() {
        let g = Graph::empty(30);
        assert!(matches!(maxcut_exhaustive(&g, 3, None), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn local_search_fixtures() {
        assert_eq!(maxcut_localsearch(&triangle(), 2, 1, 0, None).unwrap().value, 2.0);
        assert_eq!(maxcut_localsearch(&Graph::complete(9), 3, 10, 0, None).unwrap().value, 27.0);
        assert_eq!(maxcut_localsearch(&Graph::complete(4), 3, 10, 0, None).unwrap().value, 5.0);
        assert_eq!(maxcut_localsearch(&Graph::cycle(5), 2, 10, 0, None).unwrap().value, 4.0);
    }

    #[test]
    fn constrained_search_respects_counts() {
        let g = Graph::complete(6);
        let space = ConstrainedSpace::new(
            SpeciesPartition::single(6),
            &ProportionConstraint::exact(Proportions::new(vec![vec![2.0 / 3.0, 1.0 / 3.0]]).unwrap()),
        )
        .unwrap();
        let ls = maxcut_localsearch(&g, 2, 5, 1, Some(&space)).unwrap();
        let ex = maxcut_exhaustive(&g, 2, Some(&space)).unwrap();
        assert!(space.contains(&ls.assignment.sigma));
        assert_eq!(ls.value, 8.0);
        assert_eq!(ex.value, 8.0);
        assert_eq!(ex.assignment.sigma, vec![0, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn dense_weights_agree_with_graph() {
        let g = Graph::cycle(7);
        let mut w = vec![0.0; 49];
        for &(a, b) in g.edges() {
            w[a as usize * 7 + b as usize] = 1.0;
            w[b as usize * 7 + a as usize] = 1.0;
        }
        let d = DenseWeights::new(7, w).unwrap();
        assert_eq!(exhaustive_max(&d, 3, None, 1e8).unwrap().value, maxcut_exhaustive(&g, 3, None).unwrap().value);
    }
}
