//! Ruelle probability cascades: truncated weight sampling and Monte Carlo
//! estimates of `E log Σ_α v_α exp(payoff(α))`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::min_eigenvalue;
use crate::quadrature::psd_factor;
use crate::rng::stream_rng;
use crate::stats::Estimate;

/// Default children kept per node.
pub const DEFAULT_TRUNCATION: usize = 256;

/// Cascade of depth `r = x.len()` with parameters `0 < x_0 < … < x_{r-1} < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub x: Vec<f64>,
    pub truncation: usize,
    /// Account for the atoms beyond the truncation by one pseudo-child
    /// carrying their expected mass.
    #[serde(default = "yes")]
    pub tail_correction: bool,
}

fn yes() -> bool {
    true
}

impl CascadeSpec {
    pub fn new(x: Vec<f64>, truncation: usize) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("cascade depth must be ≥ 1".into()));
        }
        let mut prev = 0.0;
        for &v in &x {
            if !(v > prev && v < 1.0) {
                return Err(Error::InvalidInput(format!("x must be strictly increasing in (0,1), got {x:?}")));
            }
            prev = v;
        }
        if truncation < 2 {
            return Err(Error::InvalidInput("truncation must be ≥ 2".into()));
        }
        Ok(Self { x, truncation, tail_correction: true })
    }

    pub fn depth(&self) -> usize {
        self.x.len()
    }
}

/// Normalized leaf weights in lexicographic order of `α ∈ [n]^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSample {
    pub depth: usize,
    pub truncation: usize,
    pub weights: Vec<f64>,
}

impl CascadeSample {
    pub fn leaf(&self, alpha: &[usize]) -> f64 {
        let idx = alpha.iter().fold(0, |acc, &a| acc * self.truncation + a);
        self.weights[idx]
    }
}

/// Log-atoms `-log(Γ_j)/x` of a Poisson process with intensity
/// `x t^{-1-x} dt`, decreasing, plus the log of the expected mass beyond
/// the last kept atom, `Γ_n^{1-1/x} x/(1-x)`.
fn log_atoms<R: Rng>(x: f64, n: usize, rng: &mut R) -> (Vec<f64>, f64) {
    let mut gamma = 0.0;
    let atoms: Vec<f64> = (0..n)
        .map(|_| {
            gamma += <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
            -f64::ln(gamma) / x
        })
        .collect();
    let tail = (1.0 - 1.0 / x) * gamma.ln() + (x / (1.0 - x)).ln();
    (atoms, tail)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

/// One truncated cascade, normalized.
pub fn sample_cascade(spec: &CascadeSpec, seed: u64) -> CascadeSample {
    let mut rng = stream_rng(seed, 0);
    let n = spec.truncation;
    let mut logw = vec![0.0];
    for &x in &spec.x {
        let mut next = Vec::with_capacity(logw.len() * n);
        for &parent in &logw {
            let (atoms, _) = log_atoms(x, n, &mut rng);
            next.extend(atoms.iter().map(|a| parent + a));
        }
        logw = next;
    }
    let z = log_sum_exp(&logw);
    CascadeSample {
        depth: spec.depth(),
        truncation: n,
        weights: logw.iter().map(|w| (w - z).exp()).collect(),
    }
}

struct Tree<'a, F> {
    spec: &'a CascadeSpec,
    factors: Vec<DMatrix<f64>>,
    payoff: &'a F,
}

impl<F: Fn(&[f64]) -> f64> Tree<'_, F> {
    /// `(log Σ u·e^{payoff}, log Σ u)` over the subtree below a node at
    /// `level`, where `base` is the sum of increments along its path.
    fn node<R: Rng>(&self, level: usize, base: &[f64], rng: &mut R) -> (f64, f64) {
        if level == self.spec.depth() {
            return ((self.payoff)(base), 0.0);
        }
        let (atoms, tail) = log_atoms(self.spec.x[level], self.spec.truncation, rng);
        let f = &self.factors[level];
        let mut child = base.to_vec();
        let mut xi = vec![0.0; f.ncols()];
        let mut vals = Vec::with_capacity(atoms.len() + 1);
        let mut norms = Vec::with_capacity(atoms.len() + 1);
        for a in &atoms {
            xi.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
            for (r, c) in child.iter_mut().enumerate() {
                *c = base[r] + (0..xi.len()).map(|j| f[(r, j)] * xi[j]).sum::<f64>();
            }
            let (v, w) = self.node(level + 1, &child, rng);
            vals.push(a + v);
            norms.push(a + w);
        }
        if self.spec.tail_correction {
            // expected mass of the dropped atoms times the mean kept child
            let ln_n = (atoms.len() as f64).ln();
            let mean_v = log_sum_exp(&vals.iter().zip(&atoms).map(|(v, a)| v - a).collect::<Vec<_>>()) - ln_n;
            let mean_w = log_sum_exp(&norms.iter().zip(&atoms).map(|(v, a)| v - a).collect::<Vec<_>>()) - ln_n;
            vals.push(tail + mean_v);
            norms.push(tail + mean_w);
        }
        (log_sum_exp(&vals), log_sum_exp(&norms))
    }
}

/// Monte Carlo estimate of `E log Σ_α v_α exp(payoff(Σ_p z_p(α)))`, where
/// `z_p` is attached to each depth-`p` edge with covariance `increments[p-1]`.
pub fn cascade_log_sum<F>(
    spec: &CascadeSpec,
    increments: &[DMatrix<f64>],
    payoff: F,
    samples: usize,
    seed: u64,
) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if increments.len() != spec.depth() {
        return Err(Error::LengthMismatch { expected: spec.depth(), got: increments.len() });
    }
    let dim = increments[0].nrows();
    let factors = increments.iter().map(psd_factor).collect::<Result<Vec<_>>>()?;
    if factors.iter().any(|f| f.nrows() != dim) {
        return Err(Error::InvalidInput("increments must share one dimension".into()));
    }
    let tree = Tree { spec, factors, payoff: &payoff };
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let (v, w) = tree.node(0, &vec![0.0; dim], &mut rng);
            v - w
        })
        .collect();
    Ok(Estimate::from_samples(&values))
}

/// `y(Q) = Σ_{s,t} Δ²_st ρ^s ρ^t (Q^s, Q^t)`.
pub fn y_of(q: &[&DMatrix<f64>], rho: &[f64], delta2: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for s in 0..q.len() {
        for t in 0..q.len() {
            total += delta2[(s, t)] * rho[s] * rho[t] * q[s].dot(q[t]);
        }
    }
    total
}

/// Levels `y(Q_p)` for `p = 0..=r`, with `Q_0 = 0`; `q[s][p-1]` is `Q_p^s`.
/// Fails unless every increment `Q_p^s - Q_{p-1}^s` is PSD.
pub fn y_levels(q: &[Vec<DMatrix<f64>>], rho: &[f64], delta2: &DMatrix<f64>) -> Result<Vec<f64>> {
    let r = q.first().map_or(0, |v| v.len());
    let kappa = q.first().and_then(|v| v.first()).map_or(0, |m| m.nrows());
    let zero = DMatrix::zeros(kappa, kappa);
    for qs in q {
        if qs.len() != r {
            return Err(Error::LengthMismatch { expected: r, got: qs.len() });
        }
        let mut prev = &zero;
        for (p, cur) in qs.iter().enumerate() {
            let inc = cur - prev;
            let scale = cur.amax().max(1.0);
            let m = min_eigenvalue(&((&inc + inc.transpose()) * 0.5));
            if m < -1e-8 * scale {
                return Err(Error::NonMonotoneQ { level: p + 1, min_eigenvalue: m });
            }
            prev = cur;
        }
    }
    let mut levels = vec![0.0];
    for p in 0..r {
        let at: Vec<&DMatrix<f64>> = q.iter().map(|qs| &qs[p]).collect();
        levels.push(y_of(&at, rho, delta2));
    }
    Ok(levels)
}

/// `½ Σ_{ℓ<r} x_ℓ (y(Q_{ℓ+1}) - y(Q_ℓ))`.
pub fn y_term_closed_form(x: &[f64], q: &[Vec<DMatrix<f64>>], rho: &[f64], delta2: &DMatrix<f64>) -> Result<f64> {
    let levels = y_levels(q, rho, delta2)?;
    if levels.len() != x.len() + 1 {
        return Err(Error::LengthMismatch { expected: x.len(), got: levels.len() - 1 });
    }
    Ok(0.5 * x.iter().enumerate().map(|(l, xl)| xl * (levels[l + 1] - levels[l])).sum::<f64>())
}

/// Per-level variances of the scalar process `Y^α`, for use as `1 × 1`
/// increments in [`cascade_log_sum`] with the identity payoff.
pub fn y_increments(q: &[Vec<DMatrix<f64>>], rho: &[f64], delta2: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let levels = y_levels(q, rho, delta2)?;
    Ok(levels.windows(2).map(|w| DMatrix::from_element(1, 1, w[1] - w[0])).collect())
}
