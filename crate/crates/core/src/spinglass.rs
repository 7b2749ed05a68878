//! The multi-species Potts Hamiltonian, overlaps, exact enumeration at small
//! `N`, replica estimators, and the Gaussian surrogate of the cut problem.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cut::{enumerate, exhaustive_max, local_search_max, DenseWeights, ENUMERATION_BUDGET};
use crate::error::{Error, Result};
use crate::kernel::{block_average_matrix, Kernel};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::Estimate;
pub use crate::species::{feasible_counts, ConstrainedSpace, ProportionConstraint, SpeciesPartition, SpeciesStructure};

/// Gaussian couplings `g_ij` over all ordered pairs, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderMatrix {
    n: usize,
    g: Vec<f64>,
}

impl DisorderMatrix {
    /// Row-major `n × n` entries.
    pub fn new(n: usize, g: Vec<f64>) -> Result<Self> {
        if g.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: g.len() });
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("disorder entries must be finite".into()));
        }
        Ok(Self { n, g })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, g: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.g
    }

    /// Cut weights `w_ij = -(g_ij + g_ji)` and the offset `Σ_ij g_ij`, so that
    /// `√N·H(σ) = offset + cut_w(σ)`.
    fn as_cut(&self) -> (DenseWeights, f64) {
        let n = self.n;
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    w[i * n + j] = -(self.g[i * n + j] + self.g[j * n + i]);
                }
            }
        }
        let total = self.g.iter().sum();
        (DenseWeights::new(n, w).expect("symmetric by construction"), total)
    }
}

/// `g_ij ~ N(0, Δ²_{s(i),s(j)})` independently; row `i` uses stream `i`.
pub fn sample_disorder(species: &SpeciesStructure, seed: u64) -> Result<DisorderMatrix> {
    let n = species.n();
    let part = &species.partition;
    let sd = species.delta2.map(f64::sqrt);
    let g: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let si = part.species_of(i);
            let sd = &sd;
            (0..n).map(move |j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd[(si, part.species_of(j))] * z
            })
        })
        .collect();
    DisorderMatrix::new(n, g)
}

/// `H(σ) = N^{-1/2} Σ_{i,j} g_ij 1(σ_i = σ_j)` with 0-based colors.
pub fn hamiltonian(g: &DisorderMatrix, sigma: &[usize]) -> Result<f64> {
    let n = g.n;
    if sigma.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: sigma.len() });
    }
    let mut total = 0.0;
    for i in 0..n {
        let row = &g.g[i * n..(i + 1) * n];
        for (j, &gij) in row.iter().enumerate() {
            if sigma[i] == sigma[j] {
                total += gij;
            }
        }
    }
    Ok(total / (n as f64).sqrt())
}

/// Per-species `κ × κ` overlap matrices `R^s(k,k')`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSet {
    pub kappa: usize,
    pub matrices: Vec<DMatrix<f64>>,
}

impl OverlapSet {
    /// `N Σ_{s,t} Δ²_st ρ_N^s ρ_N^t (R^s, R^t)`, the covariance of `H(σ¹)` and `H(σ²)`.
    pub fn covariance(&self, species: &SpeciesStructure) -> f64 {
        let n = species.n() as f64;
        let rho = species.partition.proportions();
        let m = self.matrices.len();
        let mut total = 0.0;
        for s in 0..m {
            for t in 0..m {
                total += species.delta2[(s, t)] * rho[s] * rho[t] * self.matrices[s].dot(&self.matrices[t]);
            }
        }
        n * total
    }

    pub fn transpose(&self) -> Self {
        Self { kappa: self.kappa, matrices: self.matrices.iter().map(|r| r.transpose()).collect() }
    }
}

pub fn overlap(sigma1: &[usize], sigma2: &[usize], kappa: usize, partition: &SpeciesPartition) -> Result<OverlapSet> {
    let n = partition.n();
    for s in [sigma1, sigma2] {
        if s.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: s.len() });
        }
        if s.iter().any(|&k| k >= kappa) {
            return Err(Error::InvalidInput(format!("color out of range for κ = {kappa}")));
        }
    }
    let mut matrices = vec![DMatrix::zeros(kappa, kappa); partition.species_count()];
    for i in 0..n {
        matrices[partition.species_of(i)][(sigma1[i], sigma2[i])] += 1.0;
    }
    for (r, &ns) in matrices.iter_mut().zip(partition.counts()) {
        *r /= ns as f64;
    }
    Ok(OverlapSet { kappa, matrices })
}

/// `(1/N) log Σ_{σ ∈ A} exp(β H(σ))` by enumeration.
pub fn free_energy_enum(g: &DisorderMatrix, kappa: usize, beta: f64, space: Option<&ConstrainedSpace>) -> Result<f64> {
    let n = g.n();
    let (weights, offset) = g.as_cut();
    let scale = beta / (n as f64).sqrt();
    // streaming log-sum-exp
    let mut shift = f64::NEG_INFINITY;
    let mut acc = 0.0;
    enumerate(&weights, kappa, space, ENUMERATION_BUDGET, |cut, _| {
        let e = scale * cut;
        if e > shift {
            acc = acc * (shift - e).exp() + 1.0;
            shift = e;
        } else {
            acc += (e - shift).exp();
        }
    })?;
    let pinned = if space.is_none() && n > 0 { (kappa as f64).ln() } else { 0.0 };
    Ok((scale * offset + shift + acc.ln() + pinned) / n as f64)
}

/// Exact `max_{σ∈A} H(σ)`; ties go to the lexicographically first maximizer.
pub fn ground_state_enum(g: &DisorderMatrix, kappa: usize, space: Option<&ConstrainedSpace>) -> Result<(f64, Vec<usize>)> {
    let (weights, _) = g.as_cut();
    let best = exhaustive_max(&weights, kappa, space, ENUMERATION_BUDGET)?;
    let sigma = best.assignment.sigma;
    Ok((hamiltonian(g, &sigma)?, sigma))
}

/// Replica average of `free_energy_enum` over fresh disorder.
pub fn free_energy_replicas(
    species: &SpeciesStructure,
    kappa: usize,
    beta: f64,
    constraint: Option<&ProportionConstraint>,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    let space = constraint.map(|c| ConstrainedSpace::new(species.partition.clone(), c)).transpose()?;
    let values = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let g = sample_disorder(species, derive_seed(seed, r as u64))?;
            free_energy_enum(&g, kappa, beta, space.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&values))
}

/// Replica average of `ground_state_enum / N`.
pub fn ground_state_replicas(
    species: &SpeciesStructure,
    kappa: usize,
    constraint: Option<&ProportionConstraint>,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    let space = constraint.map(|c| ConstrainedSpace::new(species.partition.clone(), c)).transpose()?;
    let n = species.n() as f64;
    let values = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let g = sample_disorder(species, derive_seed(seed, r as u64))?;
            Ok(ground_state_enum(&g, kappa, space.as_ref())?.0 / n)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&values))
}

/// How the surrogate maximum is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "solver")]
pub enum Solver {
    Exhaustive,
    LocalSearch { restarts: usize },
}

/// One draw of the Gaussian surrogate: block averages `K̃_N` and a symmetric
/// `J` with `J_ij ~ N(0, K̃_N(i,j))` for `i < j`.
#[derive(Debug, Clone)]
pub struct SurrogateInstance {
    pub n: usize,
    pub c: f64,
    pub block_avg: Vec<f64>,
    pub j: Vec<f64>,
}

impl SurrogateInstance {
    pub fn sample(kernel: &Kernel, n: usize, c: f64, seed: u64) -> Result<Self> {
        let block_avg = block_average_matrix(kernel, n)?;
        let mut j = vec![0.0; n * n];
        for i in 0..n {
            let mut rng = stream_rng(seed, i as u64);
            for l in i + 1..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v = z * block_avg[i * n + l].sqrt();
                j[i * n + l] = v;
                j[l * n + i] = v;
            }
        }
        Ok(Self { n, c, block_avg, j })
    }

    /// Same instance with `J ≡ 0`.
    pub fn without_disorder(mut self) -> Self {
        self.j.iter_mut().for_each(|v| *v = 0.0);
        self
    }

    /// Pair weights `(c/N) K̃_ij + √c J_ij/√N`.
    pub fn weights(&self) -> DenseWeights {
        let n = self.n as f64;
        let mut w: Vec<f64> = self
            .block_avg
            .iter()
            .zip(&self.j)
            .map(|(k, j)| self.c / n * k + self.c.sqrt() * j / n.sqrt())
            .collect();
        for i in 0..self.n {
            w[i * self.n + i] = 0.0;
        }
        DenseWeights::new(self.n, w).expect("symmetric by construction")
    }

    /// `Z̃_N`: the maximum of the pair-weight cut divided by `N`.
    pub fn value(&self, kappa: usize, solver: Solver, seed: u64) -> Result<f64> {
        if self.n == 0 || self.c == 0.0 {
            return Ok(0.0);
        }
        let w = self.weights();
        let best = match solver {
            Solver::Exhaustive => exhaustive_max(&w, kappa, None, ENUMERATION_BUDGET)?,
            Solver::LocalSearch { restarts } => local_search_max(&w, kappa, restarts, seed, None)?,
        };
        Ok(best.value / self.n as f64)
    }
}

/// `Z̃_N` for one seeded surrogate draw.
pub fn surrogate_value(kernel: &Kernel, n: usize, c: f64, kappa: usize, seed: u64, solver: Solver) -> Result<f64> {
    SurrogateInstance::sample(kernel, n, c, seed)?.value(kappa, solver, derive_seed(seed, 1))
}

/// `E Z̃_N` over `replicas` surrogate draws seeded by `derive_seed(seed, i)`.
pub fn surrogate_replicas(
    kernel: &Kernel,
    n: usize,
    c: f64,
    kappa: usize,
    replicas: usize,
    seed: u64,
    solver: Solver,
) -> Result<Estimate> {
    let values = (0..replicas as u64)
        .map(|i| surrogate_value(kernel, n, c, kappa, derive_seed(seed, i), solver))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::Proportions;

    fn single(n: usize, delta2: f64) -> SpeciesStructure {
        SpeciesStructure::homogeneous(n, delta2)
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian(&DisorderMatrix::zeros(3), &[0, 1, 2]).unwrap(), 0.0);
        let g1 = DisorderMatrix::new(1, vec![0.7]).unwrap();
        assert_eq!(hamiltonian(&g1, &[0]).unwrap(), 0.7);
        assert_eq!(hamiltonian(&g1, &[3]).unwrap(), 0.7);
        let g2 = DisorderMatrix::new(2, vec![0.3, -1.0, 2.0, 0.5]).unwrap();
        assert!((hamiltonian(&g2, &[0, 1]).unwrap() - 0.8 / 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(hamiltonian(&g2, &[0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn overlap_examples() {
        let p = SpeciesPartition::single(4);
        let r = overlap(&[0, 0, 1, 1], &[0, 1, 0, 1], 2, &p).unwrap();
        assert_eq!(r.matrices[0], DMatrix::from_element(2, 2, 0.25));
        let r = overlap(&[0; 4], &[1; 4], 2, &p).unwrap();
        assert_eq!(r.matrices[0], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn disorder_zero_and_reproducible() {
        let g = sample_disorder(&single(5, 0.0), 3).unwrap();
        assert!(g.entries().iter().all(|&x| x == 0.0));
        let s = single(6, 1.0);
        assert_eq!(sample_disorder(&s, 9).unwrap(), sample_disorder(&s, 9).unwrap());
    }

    #[test]
    fn free_energy_examples() {
        let g = sample_disorder(&single(6, 1.0), 1).unwrap();
        assert!((free_energy_enum(&g, 3, 0.0, None).unwrap() - 3f64.ln()).abs() < 1e-12);
        // β = 0 under exact counts: multinomial(6; 3, 3) = 20
        let space = ConstrainedSpace::new(
            SpeciesPartition::single(6),
            &ProportionConstraint::exact(Proportions::uniform(1, 2)),
        )
        .unwrap();
        assert!((free_energy_enum(&g, 2, 0.0, Some(&space)).unwrap() - 20f64.ln() / 6.0).abs() < 1e-12);
        let g1 = DisorderMatrix::new(1, vec![-0.4]).unwrap();
        assert!((free_energy_enum(&g1, 3, 2.0, None).unwrap() - (3f64.ln() - 0.8)).abs() < 1e-12);
    }

    #[test]
    fn free_energy_matches_direct_sum() {
        let g = sample_disorder(&single(5, 1.0), 4).unwrap();
        let beta = 1.3;
        let mut z = 0.0;
        for code in 0..3usize.pow(5) {
            let sigma: Vec<usize> = (0..5).map(|i| code / 3usize.pow(i) % 3).collect();
            z += (beta * hamiltonian(&g, &sigma).unwrap()).exp();
        }
        assert!((free_energy_enum(&g, 3, beta, None).unwrap() - z.ln() / 5.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_examples() {
        assert_eq!(ground_state_enum(&DisorderMatrix::zeros(3), 2, None).unwrap().0, 0.0);
        let g = DisorderMatrix::new(2, vec![1.0; 4]).unwrap();
        let (v, s) = ground_state_enum(&g, 2, None).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s, vec![0, 0]);
        let space = ConstrainedSpace::new(
            SpeciesPartition::single(2),
            &ProportionConstraint::exact(Proportions::uniform(1, 2)),
        )
        .unwrap();
        let (v, s) = ground_state_enum(&g, 2, Some(&space)).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s, vec![0, 1]);
    }

    #[test]
    fn surrogate_examples() {
        let k = Kernel::constant(1.0);
        assert_eq!(surrogate_value(&k, 8, 0.0, 2, 1, Solver::Exhaustive).unwrap(), 0.0);
        // J ≡ 0, K ≡ 1: balanced split cuts (c/N)(N/2)² edges of weight
        let inst = SurrogateInstance::sample(&k, 10, 3.0, 5).unwrap().without_disorder();
        let v = inst.value(2, Solver::Exhaustive, 0).unwrap();
        assert!((v - 3.0 / 4.0).abs() < 1e-12);
    }
}
