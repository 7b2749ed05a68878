//! The multi-species Potts Parisi functional: evaluation through the level
//! recursion, minimization at fixed depth, the zero-temperature limit, and
//! the Max κ-cut prediction assembled from it.

mod minimize;
mod nelder_mead;
mod predict;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::min_eigenvalue;
use crate::quadrature::{psd_factor, GaussianRule};
use crate::rng::stream_rng;
use crate::rpc::y_term_closed_form;
use crate::species::Proportions;
use crate::stats::Estimate;

pub use minimize::{ground_state, minimize, GroundState, MinimizeOptions, Minimized};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use predict::{
    free_energy_unconstrained, model_for_kernel, predict_curve, predict_maxcut, simplex_grid, Prediction, PredictOptions,
    Unconstrained,
};

/// Below this, `x_k` is treated as zero and the level uses `E_k X_{k+1}`.
pub const X_ZERO: f64 = 1e-6;

/// Colors, species proportions, interaction matrix `Δ²` and inverse
/// temperature. The functional sees `β²Δ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kappa: usize,
    pub rho: Vec<f64>,
    pub delta2: DMatrix<f64>,
    pub beta: f64,
}

impl ModelSpec {
    pub fn new(kappa: usize, rho: Vec<f64>, delta2: DMatrix<f64>, beta: f64) -> Result<Self> {
        let m = rho.len();
        if kappa == 0 || m == 0 {
            return Err(Error::InvalidInput("need κ ≥ 1 and at least one species".into()));
        }
        if delta2.nrows() != m || delta2.ncols() != m {
            return Err(Error::LengthMismatch { expected: m, got: delta2.nrows() });
        }
        if rho.iter().any(|&p| !(p >= 0.0)) || (rho.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("ρ must be a probability vector, got {rho:?}")));
        }
        for s in 0..m {
            for t in 0..s {
                if (delta2[(s, t)] - delta2[(t, s)]).abs() > 1e-12 {
                    return Err(Error::NonSymmetric { row: s, col: t, a: delta2[(s, t)], b: delta2[(t, s)] });
                }
            }
        }
        let min = min_eigenvalue(&delta2);
        if min < -1e-10 * delta2.amax().max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidInput("β must be ≥ 0".into()));
        }
        Ok(Self { kappa, rho, delta2, beta })
    }

    /// One species with interaction `Δ²`.
    pub fn single(kappa: usize, delta2: f64, beta: f64) -> Result<Self> {
        Self::new(kappa, vec![1.0], DMatrix::from_element(1, 1, delta2), beta)
    }

    pub fn species_count(&self) -> usize {
        self.rho.len()
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    /// `β² Δ²`.
    pub fn effective_delta2(&self) -> DMatrix<f64> {
        &self.delta2 * (self.beta * self.beta)
    }
}

/// `(x, Q, λ)` at depth `r = x.len()`.
///
/// `x[k]` is `x_k` for `k < r` (with `x_{-1} = 0`, `x_r = 1` implicit),
/// `q[s][p-1]` is `Q_p^s` for `p = 1..=r` (with `Q_0 = 0`), and `lambda[s]`
/// is `λ^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiParams {
    pub x: Vec<f64>,
    pub q: Vec<Vec<DMatrix<f64>>>,
    pub lambda: Vec<Vec<f64>>,
}

impl ParisiParams {
    /// Depth one with `Q_1 = D`: the replica-symmetric point.
    pub fn replica_symmetric(x0: f64, d: &Proportions, lambda: Vec<Vec<f64>>) -> Self {
        let q = (0..d.species_count()).map(|s| vec![diag(d.species(s))]).collect();
        Self { x: vec![x0], q, lambda }
    }

    pub fn r(&self) -> usize {
        self.x.len()
    }

    fn validate(&self, model: &ModelSpec, d: Option<&Proportions>) -> Result<()> {
        let (m, k, r) = (model.species_count(), model.kappa, self.r());
        if r == 0 {
            return Err(Error::InvalidInput("depth r must be ≥ 1".into()));
        }
        let mut prev = 0.0;
        for &x in &self.x {
            // weak monotonicity: equal neighbours are the merged-level limit
            if !(x >= prev && x <= 1.0) {
                return Err(Error::InvalidInput(format!("x must be nondecreasing in [0,1], got {:?}", self.x)));
            }
            prev = x;
        }
        if self.q.len() != m || self.lambda.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: self.q.len().min(self.lambda.len()) });
        }
        for s in 0..m {
            if self.q[s].len() != r {
                return Err(Error::LengthMismatch { expected: r, got: self.q[s].len() });
            }
            if self.lambda[s].len() != k || self.q[s].iter().any(|q| q.nrows() != k || q.ncols() != k) {
                return Err(Error::LengthMismatch { expected: k, got: self.lambda[s].len() });
            }
        }
        if let Some(d) = d {
            if d.species_count() != m || d.kappa() != k {
                return Err(Error::LengthMismatch { expected: m * k, got: d.species_count() * d.kappa() });
            }
            for s in 0..m {
                let gap = (&self.q[s][r - 1] - diag(d.species(s))).amax();
                if gap > 1e-12 {
                    return Err(Error::InvalidInput(format!("Q_r of species {s} differs from diag(d) by {gap:e}")));
                }
            }
        }
        Ok(())
    }

    /// Jointly permute color labels: new color `k` is old color `perm[k]`.
    pub fn permute_colors(&self, perm: &[usize]) -> Self {
        let k = perm.len();
        Self {
            x: self.x.clone(),
            q: self
                .q
                .iter()
                .map(|qs| qs.iter().map(|q| DMatrix::from_fn(k, k, |a, b| q[(perm[a], perm[b])])).collect())
                .collect(),
            lambda: self.lambda.iter().map(|l| perm.iter().map(|&p| l[p]).collect()).collect(),
        }
    }
}

pub(crate) fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

/// How the Gaussian expectation at each level is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum Scheme {
    /// Tensor Gauss–Hermite on whitened increments, product weights below
    /// `prune` dropped.
    GaussHermite { nodes: usize, prune: f64 },
    /// Randomly shifted Halton points per level (shared by all nodes of the
    /// level), repeated over `shifts` independent shifts.
    QuasiMc { points: usize, shifts: usize, seed: u64 },
}

impl Scheme {
    pub fn gauss_hermite(nodes: usize) -> Self {
        Scheme::GaussHermite { nodes, prune: 1e-14 }
    }

    /// Gauss–Hermite for `κ ≤ 3` and `r ≤ 3` (the cubature runs in `κ-1`
    /// dimensions: 96 nodes for `κ = 2`, 20 per dimension for `κ = 3`),
    /// otherwise quasi-Monte Carlo with at least `2^14` points in total.
    pub fn auto(kappa: usize, r: usize) -> Self {
        if kappa <= 3 && r <= 3 {
            Self::gauss_hermite(if kappa <= 2 { 96 } else { 20 })
        } else {
            let per_level = (16384f64.powf(1.0 / r as f64)).ceil() as usize;
            Scheme::QuasiMc { points: per_level.max(64), shifts: 8, seed: 0 }
        }
    }

    /// A cheaper rule of the same kind for error estimation.
    fn coarser(&self) -> Self {
        match *self {
            Scheme::GaussHermite { nodes, prune } => Scheme::GaussHermite { nodes: (nodes * 2 / 3).max(2), prune },
            q => q,
        }
    }
}

/// Covariance `C_p^s` of the level-`p` increment of species `s` and a factor
/// `F` with `F Fᵀ = C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Increment {
    pub cov: DMatrix<f64>,
    pub factor: DMatrix<f64>,
}

/// `C_p^s = 2 Σ_t β²Δ²_st ρ^t (Q_p^t - Q_{p-1}^t)`, indexed `[s][p-1]`.
pub fn increment_covariances(params: &ParisiParams, model: &ModelSpec) -> Result<Vec<Vec<Increment>>> {
    params.validate(model, None)?;
    let (m, k) = (model.species_count(), model.kappa);
    let delta2 = model.effective_delta2();
    let zero = DMatrix::zeros(k, k);
    (0..m)
        .map(|s| {
            (0..params.r())
                .map(|p| {
                    let mut cov = DMatrix::zeros(k, k);
                    for t in 0..m {
                        let w = 2.0 * delta2[(s, t)] * model.rho[t];
                        if w != 0.0 {
                            let prev = if p == 0 { &zero } else { &params.q[t][p - 1] };
                            cov += (&params.q[t][p] - prev) * w;
                        }
                    }
                    let factor = psd_factor(&cov)?;
                    Ok(Increment { cov, factor })
                })
                .collect()
        })
        .collect()
}

/// Cubature for one level after splitting the increment as `z = a𝟙 + w`
/// with `w ⊥ 𝟙`.
///
/// Every `X_k` is translation-equivariant, `X_k(b + c𝟙) = X_k(b) + c`, so
/// conditionally on `w` the common mode `a = γᵀw + e`, `e ~ N(0, s²)`,
/// integrates in closed form: the level reduces to a `κ-1` dimensional
/// expectation of `exp(x(γᵀw + X_{k+1}(b + w)))` plus `x s²/2`.
struct LevelRule {
    dim: usize,
    /// Points `w_i`, `dim` coordinates each.
    shifts: Vec<f64>,
    /// `γᵀ w_i`.
    tilt: Vec<f64>,
    log_w: Vec<f64>,
    half_var: f64,
}

/// Factor of the `𝟙^⊥` part of `cov`, the regression `γ` of the common mode
/// on it, and the residual variance `s²`.
fn split_common_mode(cov: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, f64) {
    let k = cov.nrows();
    let kf = k as f64;
    let proj = DMatrix::identity(k, k) - DMatrix::from_element(k, k, 1.0 / kf);
    let ones = DVector::from_element(k, 1.0 / kf);
    let cww = &proj * cov * &proj;
    let cww = (&cww + cww.transpose()) * 0.5;
    let caw = &proj * (cov * &ones);
    let var_a = (ones.transpose() * cov * &ones)[(0, 0)];
    let eig = nalgebra::SymmetricEigen::new(cww.clone());
    let scale = eig.eigenvalues.amax().max(1e-300);
    let mut gamma = DVector::zeros(k);
    for i in 0..k {
        let l = eig.eigenvalues[i];
        if l > 1e-12 * scale {
            let v = eig.eigenvectors.column(i);
            gamma += v * (v.dot(&caw) / l);
        }
    }
    let resid = (var_a - gamma.dot(&(&cww * &gamma))).max(0.0);
    let factor = psd_factor(&cww).unwrap_or_else(|_| DMatrix::zeros(k, 0));
    (factor, gamma, resid)
}

impl LevelRule {
    fn new(cov: &DMatrix<f64>, scheme: &Scheme, rng_stream: (u64, u64)) -> Self {
        let dim = cov.nrows();
        let (factor, gamma, resid) = split_common_mode(cov);
        let rank = factor.ncols();
        let rule = match *scheme {
            Scheme::GaussHermite { nodes, prune } => GaussianRule::tensor_hermite(rank, nodes, prune),
            Scheme::QuasiMc { points, .. } => {
                let mut rng: ChaCha8Rng = stream_rng(rng_stream.0, rng_stream.1);
                GaussianRule::shifted_halton(rank, points, &mut rng)
            }
        };
        let mut shifts = Vec::with_capacity(rule.len() * dim);
        let mut tilt = Vec::with_capacity(rule.len());
        for i in 0..rule.len() {
            let xi = rule.point(i);
            let mut t = 0.0;
            for r in 0..dim {
                let w = (0..rank).map(|j| factor[(r, j)] * xi[j]).sum::<f64>();
                t += gamma[r] * w;
                shifts.push(w);
            }
            tilt.push(t);
        }
        Self { dim, shifts, tilt, log_w: rule.weights.iter().map(|w| w.ln()).collect(), half_var: 0.5 * resid }
    }

    fn len(&self) -> usize {
        self.log_w.len()
    }
}

struct Recursion<'a> {
    x: &'a [f64],
    lambda: &'a [f64],
    levels: Vec<LevelRule>,
}

impl Recursion<'_> {
    fn run(&self) -> f64 {
        let k = self.lambda.len();
        let r = self.x.len();
        let mut bufs = vec![vec![0.0; k]; r + 1];
        let mut vals = vec![Vec::new(); r];
        self.level(0, &mut bufs, &mut vals)
    }

    fn level(&self, p: usize, bufs: &mut [Vec<f64>], vals: &mut [Vec<f64>]) -> f64 {
        let r = self.x.len();
        if p == r {
            return log_sum_exp_shifted(&bufs[r], self.lambda);
        }
        let rule = &self.levels[p];
        let x = self.x[p];
        let mut out = std::mem::take(&mut vals[p]);
        out.clear();
        for i in 0..rule.len() {
            let (head, tail) = bufs.split_at_mut(p + 1);
            let shift = &rule.shifts[i * rule.dim..(i + 1) * rule.dim];
            for ((c, b), s) in tail[0].iter_mut().zip(&head[p]).zip(shift) {
                *c = b + s;
            }
            let v = self.level(p + 1, bufs, vals);
            out.push(v + rule.tilt[i]);
        }
        let value = if x < X_ZERO {
            out.iter().zip(&rule.log_w).map(|(v, lw)| v * lw.exp()).sum()
        } else {
            let m = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = out.iter().zip(&rule.log_w).map(|(v, lw)| (x * (v - m) + lw).exp()).sum();
            x * rule.half_var + m + s.ln() / x
        };
        vals[p] = out;
        value
    }
}

fn log_sum_exp_shifted(z: &[f64], lambda: &[f64]) -> f64 {
    let m = z.iter().zip(lambda).map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().zip(lambda).map(|(a, b)| (a + b - m).exp()).sum::<f64>().ln()
}

fn rules_for(incs: &[Increment], scheme: &Scheme, shift: usize) -> Vec<LevelRule> {
    let seed = match *scheme {
        Scheme::QuasiMc { seed, .. } => seed,
        _ => 0,
    };
    incs.iter()
        .enumerate()
        .map(|(p, inc)| LevelRule::new(&inc.cov, scheme, (seed, (shift * 1024 + p) as u64)))
        .collect()
}

/// `X_0^s` with its Monte Carlo standard error (zero for Gauss–Hermite).
fn x0_with_error(params: &ParisiParams, incs: &[Increment], s: usize, scheme: &Scheme) -> (f64, f64) {
    let eval = |shift| Recursion { x: &params.x, lambda: &params.lambda[s], levels: rules_for(incs, scheme, shift) }.run();
    match *scheme {
        Scheme::GaussHermite { .. } => (eval(0), 0.0),
        Scheme::QuasiMc { shifts, .. } => {
            let v: Vec<f64> = (0..shifts.max(1)).map(eval).collect();
            let e = Estimate::from_samples(&v);
            (e.mean, if e.stderr.is_finite() { e.stderr } else { 0.0 })
        }
    }
}

/// `X_0^s` from the level recursion.
pub fn recursion_x0(params: &ParisiParams, model: &ModelSpec, s: usize, scheme: &Scheme) -> Result<f64> {
    if s >= model.species_count() {
        return Err(Error::InvalidInput(format!("species {s} out of range")));
    }
    let incs = increment_covariances(params, model)?;
    Ok(x0_with_error(params, &incs[s], s, scheme).0)
}

/// A functional value with its three summands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiValue {
    pub value: f64,
    pub x0: Vec<f64>,
    /// `Σ_s ρ^s X_0^s`.
    pub x0_term: f64,
    /// `Σ_s ρ^s ⟨λ^s, d^s⟩`.
    pub lambda_term: f64,
    /// `½ Σ_ℓ x_ℓ Σ_{s,t} β²Δ²_st ρ^s ρ^t ((Q_{ℓ+1}^s,Q_{ℓ+1}^t) - (Q_ℓ^s,Q_ℓ^t))`.
    pub y_term: f64,
    /// Quadrature error estimate (coarser-rule difference or QMC stderr).
    pub err: f64,
}

fn assemble(params: &ParisiParams, model: &ModelSpec, d: &Proportions, x0: Vec<f64>, err: f64) -> Result<ParisiValue> {
    let m = model.species_count();
    let x0_term = (0..m).map(|s| model.rho[s] * x0[s]).sum::<f64>();
    let lambda_term = (0..m)
        .map(|s| {
            let ld: f64 = params.lambda[s].iter().zip(d.species(s)).filter(|(_, &dk)| dk > 0.0).map(|(l, dk)| l * dk).sum();
            model.rho[s] * ld
        })
        .sum::<f64>();
    let y_term = y_term_closed_form(&params.x, &params.q, &model.rho, &model.effective_delta2())?;
    Ok(ParisiValue { value: x0_term - lambda_term - y_term, x0, x0_term, lambda_term, y_term, err })
}

/// `𝒫(r, x, d, λ, Q)` with an error estimate.
pub fn functional(params: &ParisiParams, model: &ModelSpec, d: &Proportions, scheme: &Scheme) -> Result<ParisiValue> {
    params.validate(model, Some(d))?;
    let incs = increment_covariances(params, model)?;
    let m = model.species_count();
    let mut x0 = Vec::with_capacity(m);
    let mut err = 0.0;
    for s in 0..m {
        let (v, e) = x0_with_error(params, &incs[s], s, scheme);
        let e = match scheme {
            Scheme::GaussHermite { .. } => (v - x0_with_error(params, &incs[s], s, &scheme.coarser()).0).abs(),
            Scheme::QuasiMc { .. } => e,
        };
        err += model.rho[s] * e;
        x0.push(v);
    }
    assemble(params, model, d, x0, err)
}

/// The functional without error estimation, for use inside optimizers.
pub(crate) fn functional_fast(
    params: &ParisiParams,
    model: &ModelSpec,
    d: &Proportions,
    scheme: &Scheme,
) -> Result<f64> {
    let incs = increment_covariances(params, model)?;
    let x0 = (0..model.species_count()).map(|s| x0_with_error(params, &incs[s], s, scheme).0).collect();
    Ok(assemble(params, model, d, x0, 0.0)?.value)
}

/// `log κ + (β²/2) Σ_{s,t} Δ²_st ρ^s ρ^t ⟨d^s, d^t⟩`: the functional at
/// `r = 1`, `x_0 = 1`, `λ = 0`.
pub fn annealed_value(model: &ModelSpec, d: &Proportions) -> f64 {
    let m = model.species_count();
    let delta2 = model.effective_delta2();
    let mut q = 0.0;
    for s in 0..m {
        for t in 0..m {
            let dot: f64 = d.species(s).iter().zip(d.species(t)).map(|(a, b)| a * b).sum();
            q += delta2[(s, t)] * model.rho[s] * model.rho[t] * dot;
        }
    }
    (model.kappa as f64).ln() + 0.5 * q
}

/// `Σ_s ρ^s H(d^s)`, the value at `β = 0`.
pub fn entropy(model: &ModelSpec, d: &Proportions) -> f64 {
    (0..model.species_count())
        .map(|s| model.rho[s] * d.species(s).iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum::<f64>())
        .sum()
}
