//! Minimization of the functional at fixed depth and the `β → ∞` limit.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{nelder_mead, NelderMeadOptions};
use super::{diag, functional, functional_fast, ModelSpec, ParisiParams, ParisiValue, Scheme};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::species::Proportions;
use crate::stats::linear_fit;

/// Floor for `log d_k` when a proportion is zero.
const LOG_D_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    /// Independent starts when no warm start is given.
    pub restarts: usize,
    /// Extra random starts next to a warm start.
    pub warm_restarts: usize,
    /// Gauss–Hermite nodes per dimension inside the optimizer; `None` uses
    /// 40 for `κ = 2` and 10 otherwise.
    pub nodes: Option<usize>,
    /// Rule for the reported value; `None` picks [`Scheme::auto`].
    pub scheme: Option<Scheme>,
    pub max_evals: usize,
    pub ftol: f64,
    pub seed: u64,
    /// Allowed increase of `value(β)/β` between grid points before
    /// [`ground_state`] reports a non-monotone sequence.
    pub monotone_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            warm_restarts: 2,
            nodes: None,
            scheme: None,
            max_evals: 3000,
            ftol: 1e-9,
            seed: 0,
            monotone_tol: 2e-3,
        }
    }
}

/// Result of [`minimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimized {
    pub params: ParisiParams,
    pub value: ParisiValue,
    /// The best run hit its evaluation budget before converging.
    pub stalled: bool,
    pub evaluations: usize,
    /// Unconstrained coordinates of `params`, usable as a warm start.
    pub theta: Vec<f64>,
}

/// Map between unconstrained coordinates and `ParisiParams`.
///
/// Layout: `r` logits for `x` (a further logit fixed at 0 closes the
/// softmax), then per species and level the lower triangle of `A_p`, then per
/// species `κ-1` offsets `μ` with `λ = log d + (0, μ)`.
#[derive(Debug, Clone)]
struct Layout {
    r: usize,
    kappa: usize,
    species: usize,
}

impl Layout {
    fn tri(&self) -> usize {
        self.kappa * (self.kappa + 1) / 2
    }

    fn q_offset(&self, s: usize, p: usize) -> usize {
        self.r + (s * self.r + p) * self.tri()
    }

    fn mu_offset(&self, s: usize) -> usize {
        self.r + self.species * self.r * self.tri() + s * (self.kappa - 1)
    }

    fn len(&self) -> usize {
        self.mu_offset(self.species)
    }

    fn decode(&self, theta: &[f64], d: &Proportions) -> ParisiParams {
        let (r, k) = (self.r, self.kappa);
        let m = theta[..r].iter().cloned().fold(0.0f64, f64::max);
        let e: Vec<f64> = theta[..r].iter().map(|t| (t - m).exp()).chain(std::iter::once((-m).exp())).collect();
        let total: f64 = e.iter().sum();
        let mut acc = 0.0;
        let x = e[..r]
            .iter()
            .map(|v| {
                acc += v / total;
                acc.min(1.0)
            })
            .collect();

        let mut q = Vec::with_capacity(self.species);
        let mut lambda = Vec::with_capacity(self.species);
        for s in 0..self.species {
            let ds = d.species(s);
            let grams: Vec<DMatrix<f64>> = (0..r)
                .map(|p| {
                    let mut a = DMatrix::zeros(k, k);
                    let mut idx = self.q_offset(s, p);
                    for i in 0..k {
                        for j in 0..=i {
                            a[(i, j)] = theta[idx];
                            idx += 1;
                        }
                    }
                    &a * a.transpose()
                })
                .collect();
            let sum: DMatrix<f64> = grams.iter().fold(DMatrix::zeros(k, k), |acc, g| acc + g);
            let ridge = 1e-12 * (1.0 + sum.trace());
            let eig = SymmetricEigen::new(sum + DMatrix::identity(k, k) * ridge);
            let inv_sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.max(ridge).sqrt()))
                * eig.eigenvectors.transpose();
            let scale = diag(&ds.iter().map(|v| v.sqrt()).collect::<Vec<_>>()) * inv_sqrt;
            let mut level = DMatrix::zeros(k, k);
            let mut qs = Vec::with_capacity(r);
            for (p, g) in grams.iter().enumerate() {
                if p + 1 == r {
                    qs.push(diag(ds));
                } else {
                    let inc = &scale * g * scale.transpose();
                    level += (&inc + inc.transpose()) * 0.5;
                    qs.push(level.clone());
                }
            }
            q.push(qs);
            let off = self.mu_offset(s);
            lambda.push(
                (0..k)
                    .map(|i| ds[i].max(LOG_D_FLOOR).ln() + if i == 0 { 0.0 } else { theta[off + i - 1] })
                    .collect(),
            );
        }
        ParisiParams { x, q, lambda }
    }

    /// Coordinates for given `x` and `λ` with every `A_p = I/√r`.
    fn encode(&self, x: &[f64], lambda: &[Vec<f64>], d: &Proportions, a_from: Option<&[f64]>) -> Vec<f64> {
        let mut theta = vec![0.0; self.len()];
        let mut prev = 0.0;
        let last = (1.0 - x[self.r - 1]).max(1e-12);
        for (i, &xi) in x.iter().enumerate() {
            theta[i] = ((xi - prev).max(1e-12) / last).ln();
            prev = xi;
        }
        let start = self.q_offset(0, 0);
        let end = self.mu_offset(0);
        match a_from {
            Some(src) => theta[start..end].copy_from_slice(&src[start..end]),
            None => {
                for s in 0..self.species {
                    for p in 0..self.r {
                        let mut idx = self.q_offset(s, p);
                        for i in 0..self.kappa {
                            for j in 0..=i {
                                theta[idx] = if i == j { 1.0 / (self.r as f64).sqrt() } else { 0.0 };
                                idx += 1;
                            }
                        }
                    }
                }
            }
        }
        for s in 0..self.species {
            let ds = d.species(s);
            let mu: Vec<f64> = (0..self.kappa).map(|i| lambda[s][i] - ds[i].max(LOG_D_FLOOR).ln()).collect();
            let off = self.mu_offset(s);
            for i in 1..self.kappa {
                theta[off + i - 1] = mu[i] - mu[0];
            }
        }
        theta
    }

    fn default_start(&self, d: &Proportions) -> Vec<f64> {
        let x: Vec<f64> = (1..=self.r).map(|i| i as f64 / (self.r + 1) as f64).collect();
        let lambda: Vec<Vec<f64>> = (0..self.species).map(|s| d.species(s).iter().map(|v| v.max(LOG_D_FLOOR).ln()).collect()).collect();
        self.encode(&x, &lambda, d, None)
    }

    fn random_start<R: Rng>(&self, d: &Proportions, beta: f64, rng: &mut R) -> Vec<f64> {
        let mut theta = self.default_start(d);
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        for t in theta[..self.r].iter_mut() {
            *t += normal();
        }
        for s in 0..self.species {
            for p in 0..self.r {
                let mut idx = self.q_offset(s, p);
                for i in 0..self.kappa {
                    for j in 0..=i {
                        theta[idx] = if i == j { theta[idx] * (0.5 * normal()).exp() } else { 0.3 * normal() };
                        idx += 1;
                    }
                }
            }
        }
        let spread = 0.5 * beta.max(1.0);
        for t in theta[self.mu_offset(0)..].iter_mut() {
            *t += spread * normal();
        }
        theta
    }
}

fn optimizer_scheme(kappa: usize, r: usize, nodes: Option<usize>, seed: u64) -> Scheme {
    match Scheme::auto(kappa, r) {
        Scheme::GaussHermite { .. } => Scheme::gauss_hermite(nodes.unwrap_or(if kappa <= 2 { 40 } else { 10 })),
        Scheme::QuasiMc { points, .. } => Scheme::QuasiMc { points: (points / 2).max(32), shifts: 1, seed },
    }
}

/// Approximate infimum of the functional over `(x, Q, λ)` at depth `r`.
pub fn minimize(model: &ModelSpec, d: &Proportions, r: usize, opts: &MinimizeOptions) -> Result<Minimized> {
    minimize_from(model, d, r, opts, None)
}

pub(crate) fn minimize_from(
    model: &ModelSpec,
    d: &Proportions,
    r: usize,
    opts: &MinimizeOptions,
    warm: Option<&[f64]>,
) -> Result<Minimized> {
    if r == 0 {
        return Err(Error::InvalidInput("depth r must be ≥ 1".into()));
    }
    if d.species_count() != model.species_count() || d.kappa() != model.kappa {
        return Err(Error::LengthMismatch { expected: model.species_count() * model.kappa, got: d.species_count() * d.kappa() });
    }
    let layout = Layout { r, kappa: model.kappa, species: model.species_count() };
    let inner = optimizer_scheme(model.kappa, r, opts.nodes, opts.seed);
    let objective = |theta: &[f64]| -> f64 {
        functional_fast(&layout.decode(theta, d), model, d, &inner).unwrap_or(f64::INFINITY)
    };

    let mut starts = Vec::new();
    let mut rng = stream_rng(opts.seed, 0);
    let randoms = match warm {
        Some(w) => {
            starts.push(w.to_vec());
            opts.warm_restarts
        }
        None => {
            starts.push(layout.default_start(d));
            opts.restarts.saturating_sub(1)
        }
    };
    for _ in 0..randoms {
        starts.push(layout.random_start(d, model.beta, &mut rng));
    }

    let nm = NelderMeadOptions { step: 0.4, max_evals: opts.max_evals, ftol: opts.ftol, xtol: 1e-7 };
    let runs: Vec<_> = starts
        .into_par_iter()
        .map(|start| {
            let first = nelder_mead(objective, &start, nm);
            // a fresh simplex around the incumbent guards against collapse
            let second = nelder_mead(objective, &first.x, NelderMeadOptions { step: 0.1, ..nm });
            let evals = first.evals + second.evals;
            let best = if second.value <= first.value { second } else { first };
            (best, evals)
        })
        .collect();
    let evaluations = runs.iter().map(|r| r.1).sum();
    let (best, _) = runs
        .into_iter()
        .min_by(|a, b| a.0.value.total_cmp(&b.0.value))
        .expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::InvalidInput("functional is not finite at any start".into()));
    }
    let params = layout.decode(&best.x, d);
    let scheme = opts.scheme.unwrap_or_else(|| Scheme::auto(model.kappa, r));
    let value = functional(&params, model, d, &scheme)?;
    Ok(Minimized { params, value, stalled: !best.converged, evaluations, theta: best.x })
}

/// Carry optimized coordinates from `β_prev` to `β`: `x` scales by
/// `β_prev/β` and `λ` by `β/β_prev`, the `Q` factors are kept.
fn rescale_theta(theta: &[f64], layout: &Layout, d: &Proportions, ratio: f64) -> Vec<f64> {
    let p = layout.decode(theta, d);
    let x: Vec<f64> = p.x.iter().map(|v| (v / ratio).min(1.0 - 1e-9)).collect();
    let lambda: Vec<Vec<f64>> = p.lambda.iter().map(|l| l.iter().map(|v| v * ratio).collect()).collect();
    layout.encode(&x, &lambda, d, Some(theta))
}

/// Zero-temperature extrapolation of `inf 𝒫_β / β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    /// `a` in the fit `value(β)/β ≈ a + b/β`: the estimate of `𝒫(d)`.
    pub value: f64,
    pub slope: f64,
    pub residual: f64,
    pub betas: Vec<f64>,
    /// Minimized functional at each `β`.
    pub values: Vec<f64>,
    /// Quadrature error of each entry of `values`.
    pub errs: Vec<f64>,
    pub stalled: bool,
}

/// `𝒫(d)` from minimizing at each `β` in `beta_grid` (with `Δ` scaled to
/// `β²Δ`) and fitting `value(β)/β = a + b/β`.
///
/// `value(β)/β` must be nonincreasing in `β` up to `opts.monotone_tol`;
/// otherwise the optimizer is assumed to have failed.
pub fn ground_state(
    model: &ModelSpec,
    d: &Proportions,
    beta_grid: &[f64],
    r: usize,
    opts: &MinimizeOptions,
) -> Result<GroundState> {
    if beta_grid.len() < 3 || beta_grid.windows(2).any(|w| !(w[1] > w[0])) || beta_grid[0] <= 0.0 {
        return Err(Error::InvalidInput(format!("β grid must be positive, increasing, ≥ 3 points: {beta_grid:?}")));
    }
    let layout = Layout { r, kappa: model.kappa, species: model.species_count() };
    let mut values = Vec::with_capacity(beta_grid.len());
    let mut errs = Vec::with_capacity(beta_grid.len());
    let mut stalled = false;
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for &beta in beta_grid {
        let m = model.with_beta(beta);
        let start = warm.as_ref().map(|(b, t)| rescale_theta(t, &layout, d, beta / b));
        let res = minimize_from(&m, d, r, opts, start.as_deref())?;
        stalled |= res.stalled;
        values.push(res.value.value);
        errs.push(res.value.err);
        warm = Some((beta, res.theta));
    }
    let ys: Vec<f64> = values.iter().zip(beta_grid).map(|(v, b)| v / b).collect();
    for (i, w) in ys.windows(2).enumerate() {
        if w[1] > w[0] + opts.monotone_tol * (1.0 + w[0].abs()) {
            return Err(Error::NonMonotoneSequence(format!(
                "value/β rises from {:.6} at β={} to {:.6} at β={}",
                w[0],
                beta_grid[i],
                w[1],
                beta_grid[i + 1]
            )));
        }
    }
    let xs: Vec<f64> = beta_grid.iter().map(|b| 1.0 / b).collect();
    let (a, b, residual) = linear_fit(&xs, &ys);
    Ok(GroundState { value: a, slope: b, residual, betas: beta_grid.to_vec(), values, errs, stalled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parisi::{annealed_value, entropy};

    #[test]
    fn decode_hits_d_and_is_monotone() {
        let layout = Layout { r: 3, kappa: 3, species: 2 };
        let d = Proportions::new(vec![vec![0.2, 0.3, 0.5], vec![0.0, 0.6, 0.4]]).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            let theta = layout.random_start(&d, 1.0, &mut rng);
            let p = layout.decode(&theta, &d);
            assert!(p.x.windows(2).all(|w| w[0] < w[1]) && p.x[2] < 1.0);
            for (s, qs) in p.q.iter().enumerate() {
                assert_eq!(qs[2], diag(d.species(s)));
                let mut prev = DMatrix::zeros(3, 3);
                for q in qs {
                    assert!(crate::kernel::min_eigenvalue(&(q - &prev)) > -1e-10);
                    prev = q.clone();
                }
            }
        }
    }

    #[test]
    fn encode_roundtrip() {
        let layout = Layout { r: 2, kappa: 2, species: 1 };
        let d = Proportions::new(vec![vec![0.3, 0.7]]).unwrap();
        let theta = layout.encode(&[0.2, 0.65], &[vec![0.1, 0.9]], &d, None);
        let p = layout.decode(&theta, &d);
        assert!((p.x[0] - 0.2).abs() < 1e-12 && (p.x[1] - 0.65).abs() < 1e-12);
        // λ is recovered up to a common shift
        assert!(((p.lambda[0][1] - p.lambda[0][0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn beta_zero_gives_entropy() {
        let model = ModelSpec::single(3, 1.0, 0.0).unwrap();
        let d = Proportions::new(vec![vec![0.2, 0.3, 0.5]]).unwrap();
        let opts = MinimizeOptions { restarts: 2, ..Default::default() };
        let m = minimize(&model, &d, 1, &opts).unwrap();
        assert!((m.value.value - entropy(&model, &d)).abs() < 1e-6, "{:?}", m.value);
    }

    #[test]
    fn high_temperature_is_annealed() {
        let beta = 0.2;
        let model = ModelSpec::single(2, 1.0, beta).unwrap();
        let d = Proportions::uniform(1, 2);
        let m = minimize(&model, &d, 1, &MinimizeOptions { restarts: 3, ..Default::default() }).unwrap();
        let v = m.value.value;
        assert!(v >= 2f64.ln() - 1e-9 && v <= 2f64.ln() + beta * beta / 4.0 + 1e-9, "{v}");
        assert!((v - annealed_value(&model, &d)).abs() < 1e-3);
    }

    #[test]
    fn zero_interaction_ground_state() {
        let model = ModelSpec::single(2, 0.0, 1.0).unwrap();
        let d = Proportions::uniform(1, 2);
        let opts = MinimizeOptions { restarts: 1, warm_restarts: 0, ..Default::default() };
        let gs = ground_state(&model, &d, &[2.0, 4.0, 8.0], 1, &opts).unwrap();
        assert!(gs.value.abs() < 1e-6, "{gs:?}");
        assert!((gs.slope - 2f64.ln()).abs() < 1e-6);
    }
}
