//! Species partitions of the vertex set, proportions `d ∈ 𝒟` and the count
//! windows that realise the constrained spaces `Σ^ε_N(d)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::BlockSpec;

/// Assignment of vertices `0..n` to species `0..m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesPartition {
    assignment: Vec<usize>,
    counts: Vec<usize>,
}

impl SpeciesPartition {
    pub fn from_assignment(assignment: Vec<usize>, species: usize) -> Result<Self> {
        let mut counts = vec![0; species];
        for &s in &assignment {
            if s >= species {
                return Err(Error::InvalidInput(format!("species index {s} out of range 0..{species}")));
            }
            counts[s] += 1;
        }
        Ok(Self { assignment, counts })
    }

    /// All `n` vertices in one species.
    pub fn single(n: usize) -> Self {
        Self { assignment: vec![0; n], counts: vec![n] }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn species_count(&self) -> usize {
        self.counts.len()
    }

    pub fn species_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// `N_s`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `ρ_N^s = N_s / N`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Contiguous partition: vertex `i` (1-based) joins block `s` iff
/// `(i−1)/N ∈ [t_{s−1}, t_s)`, with floor rounding of `N t_s` and the
/// remainder in the last block.
pub fn species_partition(blocks: &BlockSpec, n: usize) -> Result<SpeciesPartition> {
    let m = blocks.len();
    if n < m {
        return Err(Error::InvalidInput(format!("{n} vertices cannot fill {m} species")));
    }
    let b = blocks.boundaries();
    let mut cuts: Vec<usize> = b.iter().map(|t| ((n as f64 * t) + 1e-9).floor() as usize).collect();
    cuts[m] = n;
    let mut assignment = Vec::with_capacity(n);
    for s in 0..m {
        assignment.extend(std::iter::repeat_n(s, cuts[s + 1].saturating_sub(cuts[s])));
    }
    let part = SpeciesPartition::from_assignment(assignment, m)?;
    if let Some(s) = part.counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!("species {s} is empty at N = {n}")));
    }
    Ok(part)
}

/// Partition plus the interaction matrix `Δ²_{s,t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesStructure {
    pub partition: SpeciesPartition,
    pub delta2: DMatrix<f64>,
}

impl SpeciesStructure {
    pub fn new(partition: SpeciesPartition, delta2: DMatrix<f64>) -> Result<Self> {
        let m = partition.species_count();
        if delta2.nrows() != m || delta2.ncols() != m {
            return Err(Error::LengthMismatch { expected: m, got: delta2.nrows() });
        }
        for s in 0..m {
            for t in 0..m {
                if delta2[(s, t)] != delta2[(t, s)] {
                    return Err(Error::NonSymmetric { row: s, col: t, a: delta2[(s, t)], b: delta2[(t, s)] });
                }
                if !(delta2[(s, t)] >= 0.0) {
                    return Err(Error::InvalidInput(format!("Δ²[{s},{t}] must be ≥ 0")));
                }
            }
        }
        Ok(Self { partition, delta2 })
    }

    /// Single species with interaction `Δ²`.
    pub fn homogeneous(n: usize, delta2: f64) -> Self {
        Self { partition: SpeciesPartition::single(n), delta2: DMatrix::from_element(1, 1, delta2) }
    }

    pub fn n(&self) -> usize {
        self.partition.n()
    }
}

/// Per-species probability vectors over `κ` colors: an element of 𝒟.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Proportions(pub Vec<Vec<f64>>);

impl Proportions {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let kappa = d.first().map(Vec::len).unwrap_or(0);
        if kappa == 0 {
            return Err(Error::InvalidInput("proportions need at least one species and color".into()));
        }
        for (s, ds) in d.iter().enumerate() {
            if ds.len() != kappa {
                return Err(Error::LengthMismatch { expected: kappa, got: ds.len() });
            }
            if ds.iter().any(|x| !(*x >= 0.0)) || (ds.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("d^{s} = {ds:?} is not a probability vector")));
            }
        }
        Ok(Self(d))
    }

    pub fn uniform(species: usize, kappa: usize) -> Self {
        Self(vec![vec![1.0 / kappa as f64; kappa]; species])
    }

    pub fn species_count(&self) -> usize {
        self.0.len()
    }

    pub fn kappa(&self) -> usize {
        self.0[0].len()
    }

    pub fn species(&self, s: usize) -> &[f64] {
        &self.0[s]
    }
}

/// `Σ^ε_N(d)`: per-species color frequencies within `ε` of `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionConstraint {
    pub d: Proportions,
    pub epsilon: f64,
}

impl ProportionConstraint {
    pub fn exact(d: Proportions) -> Self {
        Self { d, epsilon: 0.0 }
    }

    /// Integer count windows on `partition`. With `ε = 0` the window is the
    /// single vector from [`feasible_counts`].
    pub fn windows(&self, partition: &SpeciesPartition) -> Result<CountWindows> {
        let m = partition.species_count();
        if self.d.species_count() != m {
            return Err(Error::LengthMismatch { expected: m, got: self.d.species_count() });
        }
        let kappa = self.d.kappa();
        let mut lo = vec![0; m * kappa];
        let mut hi = vec![0; m * kappa];
        if self.epsilon == 0.0 {
            let exact = feasible_counts(&self.d, partition);
            for s in 0..m {
                for k in 0..kappa {
                    lo[s * kappa + k] = exact[s][k];
                    hi[s * kappa + k] = exact[s][k];
                }
            }
        } else {
            for s in 0..m {
                let ns = partition.counts()[s] as f64;
                for k in 0..kappa {
                    let d = self.d.species(s)[k];
                    let a = ((d - self.epsilon) * ns - 1e-9).ceil().max(0.0);
                    let b = ((d + self.epsilon) * ns + 1e-9).floor().min(ns);
                    if b < a {
                        return Err(Error::EmptyConstraintSet);
                    }
                    lo[s * kappa + k] = a as usize;
                    hi[s * kappa + k] = b as usize;
                }
            }
        }
        let w = CountWindows { kappa, lo, hi, species_sizes: partition.counts().to_vec() };
        if !w.is_feasible() {
            return Err(Error::EmptyConstraintSet);
        }
        Ok(w)
    }
}

/// Allowed color counts `lo[s,k] ≤ #{i ∈ I_s : σ_i = k} ≤ hi[s,k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountWindows {
    pub kappa: usize,
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub species_sizes: Vec<usize>,
}

impl CountWindows {
    pub fn admits(&self, counts: &[usize]) -> bool {
        counts.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (l, h))| l <= c && c <= h)
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    fn is_feasible(&self) -> bool {
        self.species_sizes.iter().enumerate().all(|(s, &ns)| {
            let r = s * self.kappa..(s + 1) * self.kappa;
            self.lo[r.clone()].iter().sum::<usize>() <= ns && self.hi[r].iter().sum::<usize>() >= ns
        })
    }

    /// A count vector inside the window closest to the lower bounds.
    pub fn representative(&self) -> Vec<usize> {
        let mut counts = self.lo.clone();
        for (s, &ns) in self.species_sizes.iter().enumerate() {
            let mut need = ns - counts[s * self.kappa..(s + 1) * self.kappa].iter().sum::<usize>();
            for k in 0..self.kappa {
                let idx = s * self.kappa + k;
                let add = need.min(self.hi[idx] - counts[idx]);
                counts[idx] += add;
                need -= add;
            }
        }
        counts
    }
}

/// A species partition together with the count windows of a constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSpace {
    pub partition: SpeciesPartition,
    pub windows: CountWindows,
}

impl ConstrainedSpace {
    pub fn new(partition: SpeciesPartition, constraint: &ProportionConstraint) -> Result<Self> {
        let windows = constraint.windows(&partition)?;
        Ok(Self { partition, windows })
    }

    pub fn kappa(&self) -> usize {
        self.windows.kappa
    }

    /// Per-(species, color) counts of a 0-based assignment.
    pub fn counts_of(&self, sigma: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.partition.species_count() * self.kappa()];
        for (i, &k) in sigma.iter().enumerate() {
            c[self.partition.species_of(i) * self.kappa() + k] += 1;
        }
        c
    }

    pub fn contains(&self, sigma: &[usize]) -> bool {
        sigma.len() == self.partition.n() && self.windows.admits(&self.counts_of(sigma))
    }
}

/// Integer color counts per species closest to `N_s d^s` with `Σ_k = N_s`
/// (largest-remainder rounding; zero proportions stay zero).
pub fn feasible_counts(d: &Proportions, partition: &SpeciesPartition) -> Vec<Vec<usize>> {
    partition
        .counts()
        .iter()
        .enumerate()
        .map(|(s, &ns)| largest_remainder(d.species(s), ns))
        .collect()
}

fn largest_remainder(p: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = p.iter().map(|x| x * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).filter(|&k| p[k] > 0.0).collect();
    // largest fractional part first, ties to the lowest color
    order.sort_by(|&a, &b| {
        let fa = raw[a] - counts[a] as f64;
        let fb = raw[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Per-species empirical color law of a 0-based assignment.
pub fn empirical_proportions(sigma: &[usize], kappa: usize, partition: &SpeciesPartition) -> Result<Proportions> {
    if sigma.len() != partition.n() {
        return Err(Error::LengthMismatch { expected: partition.n(), got: sigma.len() });
    }
    let m = partition.species_count();
    let mut d = vec![vec![0.0; kappa]; m];
    for (i, &k) in sigma.iter().enumerate() {
        d[partition.species_of(i)][k] += 1.0;
    }
    for (s, ds) in d.iter_mut().enumerate() {
        let ns = partition.counts()[s] as f64;
        ds.iter_mut().for_each(|x| *x /= ns);
    }
    Ok(Proportions(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        let p = species_partition(&BlockSpec::new(vec![0.0, 0.5, 1.0]).unwrap(), 10).unwrap();
        assert_eq!(p.counts(), &[5, 5]);
        let p = species_partition(&BlockSpec::new(vec![0.0, 0.3, 1.0]).unwrap(), 10).unwrap();
        assert_eq!(p.counts(), &[3, 7]);
        assert_eq!(&p.assignment()[..4], &[0, 0, 0, 1]);
        let p = species_partition(&BlockSpec::new(vec![0.0, 1.0]).unwrap(), 7).unwrap();
        assert_eq!(p.counts(), &[7]);
        assert_eq!(p.proportions(), vec![1.0]);
    }

    #[test]
    fn partition_rate() {
        let blocks = BlockSpec::new(vec![0.0, 0.1, 0.45, 0.7, 1.0]).unwrap();
        let rho = blocks.rho();
        for n in [13, 100, 997] {
            let p = species_partition(&blocks, n).unwrap();
            for (a, b) in p.proportions().iter().zip(&rho) {
                assert!((a - b).abs() <= 4.0 / n as f64);
            }
        }
    }

    #[test]
    fn feasible_counts_examples() {
        let part = SpeciesPartition::single(4);
        let c = |d: Vec<f64>| feasible_counts(&Proportions::new(vec![d]).unwrap(), &part)[0].clone();
        assert_eq!(c(vec![0.5, 0.5]), vec![2, 2]);
        assert_eq!(c(vec![1.0 / 3.0; 3]), vec![2, 1, 1]);
        assert_eq!(c(vec![1.0, 0.0]), vec![4, 0]);
        let part = SpeciesPartition::single(9);
        assert_eq!(feasible_counts(&Proportions::new(vec![vec![0.0, 0.25, 0.75]]).unwrap(), &part)[0], vec![0, 2, 7]);
    }

    #[test]
    fn empirical_examples() {
        let one = SpeciesPartition::single(4);
        assert_eq!(empirical_proportions(&[0, 0, 1, 1], 2, &one).unwrap().0, vec![vec![0.5, 0.5]]);
        assert_eq!(empirical_proportions(&[0, 0, 0, 0], 3, &one).unwrap().0, vec![vec![1.0, 0.0, 0.0]]);
        let two = SpeciesPartition::from_assignment(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(empirical_proportions(&[0, 1, 1, 1], 2, &two).unwrap().0, vec![vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert!(matches!(empirical_proportions(&[0], 2, &two), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn windows() {
        let part = SpeciesPartition::single(10);
        let d = Proportions::new(vec![vec![0.5, 0.5]]).unwrap();
        let w = ProportionConstraint { d: d.clone(), epsilon: 0.1 }.windows(&part).unwrap();
        assert_eq!((w.lo.clone(), w.hi.clone()), (vec![4, 4], vec![6, 6]));
        assert!(w.admits(&[4, 6]) && !w.admits(&[3, 7]));
        let w = ProportionConstraint::exact(d).windows(&part).unwrap();
        assert!(w.is_exact() && w.representative() == vec![5, 5]);
        let d = Proportions::new(vec![vec![0.55, 0.45]]).unwrap();
        assert!(matches!(
            ProportionConstraint { d, epsilon: 0.01 }.windows(&SpeciesPartition::single(4)),
            Err(Error::EmptyConstraintSet)
        ));
    }
}
