//! Quadrature rules: Gauss–Hermite for Gaussian expectations, Gauss–Legendre
//! for bounded intervals, globally adaptive cubature for kernel integrals, and
//! randomly shifted Halton points for quasi-Monte Carlo.

use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point rule for E f(Z), Z ~ N(0,1).
///
/// Computed by Golub–Welsch on the probabilists' Hermite Jacobi matrix.
/// Weights sum to one.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    golub_welsch(&vec![0.0; n], &off, 1.0)
}

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&vec![0.0; n], &off, 2.0)
}

fn golub_welsch(diag: &[f64], off: &[f64], mass: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = diag[i];
    }
    for (i, b) in off.iter().enumerate() {
        jac[(i, i + 1)] = *b;
        jac[(i + 1, i)] = *b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mass * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize: both rules are even
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w * mass / total)).unzip()
}

/// Factor `F` (`n × rank`) with `F Fᵀ = cov` from the eigendecomposition.
///
/// Eigenvalues in `[-1e-8·scale, 0]` are clipped to zero and directions below
/// `1e-13·scale` are dropped, so an exactly zero matrix has rank zero.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if n == 0 || cov.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(n, 0));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.min();
    if min < -1e-8 * scale {
        return Err(Error::DegenerateCovariance { min_eigenvalue: min });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-13 * scale).collect();
    let mut f = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let sd = eig.eigenvalues[i].sqrt();
        for r in 0..n {
            f[(r, c)] = eig.eigenvectors[(r, i)] * sd;
        }
    }
    Ok(f)
}

/// A cubature rule for standard Gaussian vectors in `dim` dimensions.
#[derive(Debug, Clone)]
pub struct GaussianRule {
    pub dim: usize,
    /// Flattened points, `dim` coordinates each.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Single point at the origin (used for zero-covariance levels).
    pub fn degenerate() -> Self {
        Self { dim: 0, points: Vec::new(), weights: vec![1.0] }
    }

    /// Tensor-product Gauss–Hermite rule, dropping product weights below
    /// `prune` and renormalising.
    pub fn tensor_hermite(dim: usize, nodes: usize, prune: f64) -> Self {
        if dim == 0 {
            return Self::degenerate();
        }
        let (x, w) = gauss_hermite(nodes);
        let total = nodes.pow(dim as u32);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let wt: f64 = idx.iter().map(|&i| w[i]).product();
            if wt >= prune {
                points.extend(idx.iter().map(|&i| x[i]));
                weights.push(wt);
            }
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < nodes {
                    break;
                }
                *slot = 0;
            }
        }
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        Self { dim, points, weights }
    }

    /// Randomly shifted Halton points mapped through the normal quantile.
    pub fn shifted_halton<R: Rng>(dim: usize, count: usize, rng: &mut R) -> Self {
        if dim == 0 {
            return Self::degenerate();
        }
        let std = Normal::standard();
        let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let mut points = Vec::with_capacity(dim * count);
        for i in 0..count {
            for (d, s) in shift.iter().enumerate() {
                let mut u = radical_inverse(i as u64 + 1, PRIMES[d % PRIMES.len()]) + s;
                u -= u.floor();
                let u = u.clamp(1e-15, 1.0 - 1e-15);
                points.push(std.inverse_cdf(u));
            }
        }
        Self { dim, points, weights: vec![1.0 / count as f64; count] }
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveTolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_cells: usize,
}

impl Default for AdaptiveTolerance {
    fn default() -> Self {
        Self { relative: 1e-6, absolute: 1e-12, max_cells: 400_000 }
    }
}

struct Cell {
    err: f64,
    val: f64,
    bounds: [f64; 4],
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Legendre cubature of `f` over `[x0,x1]×[y0,y1]`.
///
/// Each cell compares a 4-point product rule with the same rule on its four
/// quadrants; the cell with the largest discrepancy is split until the summed
/// discrepancy is below tolerance.
pub fn integrate_2d<F>(f: F, x0: f64, x1: f64, y0: f64, y1: f64, tol: AdaptiveTolerance) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if x1 <= x0 || y1 <= y0 {
        return Ok(0.0);
    }
    let (gx, gw) = gauss_legendre(4);
    let rule = |b: &[f64; 4]| -> f64 {
        let (cx, hx) = (0.5 * (b[0] + b[1]), 0.5 * (b[1] - b[0]));
        let (cy, hy) = (0.5 * (b[2] + b[3]), 0.5 * (b[3] - b[2]));
        let mut s = 0.0;
        for (xi, wi) in gx.iter().zip(&gw) {
            for (yj, wj) in gx.iter().zip(&gw) {
                s += wi * wj * f(cx + hx * xi, cy + hy * yj);
            }
        }
        s * hx * hy
    };
    let quads = |b: &[f64; 4]| -> [[f64; 4]; 4] {
        let mx = 0.5 * (b[0] + b[1]);
        let my = 0.5 * (b[2] + b[3]);
        [
            [b[0], mx, b[2], my],
            [mx, b[1], b[2], my],
            [b[0], mx, my, b[3]],
            [mx, b[1], my, b[3]],
        ]
    };
    let make = |b: [f64; 4]| -> Cell {
        let coarse = rule(&b);
        let fine: f64 = quads(&b).iter().map(|q| rule(q)).sum();
        Cell { err: (fine - coarse).abs(), val: fine, bounds: b }
    };
    let mut heap = BinaryHeap::new();
    let first = make([x0, x1, y0, y1]);
    let (mut total, mut err) = (first.val, first.err);
    heap.push(first);
    let mut cells = 1;
    while err > tol.absolute.max(tol.relative * total.abs()) {
        if cells >= tol.max_cells {
            return Err(Error::QuadratureFailure(format!(
                "2-d cubature stopped at {cells} cells with error {err:.3e} on value {total:.6e}"
            )));
        }
        let cell = heap.pop().expect("heap never empties");
        total -= cell.val;
        err -= cell.err;
        for q in quads(&cell.bounds) {
            let c = make(q);
            total += c.val;
            err += c.err;
            heap.push(c);
        }
        cells += 3;
        // guard against drift from repeated subtraction
        if cells % 4096 == 1 {
            err = heap.iter().map(|c| c.err).sum();
            total = heap.iter().map(|c| c.val).sum();
        }
    }
    Ok(total)
}

/// Globally adaptive Gauss–Legendre quadrature of `f` over `[a, b]`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, tol: AdaptiveTolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return Ok(0.0);
    }
    let (gx, gw) = gauss_legendre(5);
    let rule = |lo: f64, hi: f64| -> f64 {
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        gx.iter().zip(&gw).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    };
    let make = |lo: f64, hi: f64| -> Cell {
        let mid = 0.5 * (lo + hi);
        let coarse = rule(lo, hi);
        let fine = rule(lo, mid) + rule(mid, hi);
        Cell { err: (fine - coarse).abs(), val: fine, bounds: [lo, hi, 0.0, 0.0] }
    };
    let mut heap = BinaryHeap::new();
    let first = make(a, b);
    let (mut total, mut err) = (first.val, first.err);
    heap.push(first);
    let mut cells = 1;
    while err > tol.absolute.max(tol.relative * total.abs()) {
        if cells >= tol.max_cells {
            return Err(Error::QuadratureFailure(format!(
                "1-d quadrature stopped at {cells} cells with error {err:.3e}"
            )));
        }
        let cell = heap.pop().expect("heap never empties");
        total -= cell.val;
        err -= cell.err;
        let mid = 0.5 * (cell.bounds[0] + cell.bounds[1]);
        for c in [make(cell.bounds[0], mid), make(mid, cell.bounds[1])] {
            total += c.val;
            err += c.err;
            heap.push(c);
        }
        cells += 1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let m = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!(m(1).abs() < 1e-14);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(8) - 105.0).abs() < 1e-8);
        // E e^Z = e^{1/2}
        let mgf: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((mgf - 0.5f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((int - 2.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn tensor_rule_covariance() {
        let rule = GaussianRule::tensor_hermite(2, 12, 1e-13);
        let mut cov = [0.0; 3];
        for i in 0..rule.len() {
            let p = rule.point(i);
            cov[0] += rule.weights[i] * p[0] * p[0];
            cov[1] += rule.weights[i] * p[0] * p[1];
            cov[2] += rule.weights[i] * p[1] * p[1];
        }
        assert!((cov[0] - 1.0).abs() < 1e-10 && cov[1].abs() < 1e-12 && (cov[2] - 1.0).abs() < 1e-10);
        assert!(rule.len() < 144);
    }

    #[test]
    fn adaptive_handles_corner_singularity() {
        // ∫∫_{[0,1]²} 1/max(x,y) = 2
        let v = integrate_2d(|x, y| 1.0 / x.max(y), 0.0, 1.0, 0.0, 1.0, AdaptiveTolerance::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-5, "{v}");
        let v = integrate_1d(|x| x.sqrt(), 0.0, 1.0, AdaptiveTolerance::default()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn halton_mean_near_zero() {
        let mut rng = crate::rng::stream_rng(1, 0);
        let rule = GaussianRule::shifted_halton(3, 4096, &mut rng);
        for d in 0..3 {
            let m: f64 = (0..rule.len()).map(|i| rule.weights[i] * rule.point(i)[d]).sum();
            assert!(m.abs() < 0.01);
        }
    }
}
