//! Symmetric nonnegative kernels on [0,1]² and their cell averages.
//!
//! A kernel sets the law of the random graph through its cell averages
//! `K̃_N(i,j) = N² ∫_{cell(i,j)} K`. Three families are supported: block
//! constant kernels (exact arithmetic), rank-one kernels `ψ(x)ψ(y)`
//! (separable, exact for piecewise-linear ψ) and the Dubins kernel
//! `1/max(x,y)` (closed-form antiderivative, so the singular corner is exact).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, integrate_2d, AdaptiveTolerance};

/// Minimal eigenvalue threshold used by [`psd_check`].
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Block widths of a partition of [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    boundaries: Vec<f64>,
}

impl BlockSpec {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        validate_boundaries(&boundaries)?;
        Ok(Self { boundaries })
    }

    /// `m` blocks of equal width.
    pub fn uniform(m: usize) -> Self {
        Self { boundaries: (0..=m).map(|i| i as f64 / m as f64).collect() }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Block widths ρ^s = t_s − t_{s−1}.
    pub fn rho(&self) -> Vec<f64> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn validate_boundaries(b: &[f64]) -> Result<()> {
    if b.len() < 2 {
        return Err(Error::BadBoundaries("need at least the two endpoints 0 and 1".into()));
    }
    if b[0] != 0.0 || b[b.len() - 1] != 1.0 {
        return Err(Error::BadBoundaries(format!("endpoints must be 0 and 1, got {} and {}", b[0], b[b.len() - 1])));
    }
    if let Some(w) = b.windows(2).find(|w| w[1] <= w[0] || !w[1].is_finite()) {
        return Err(Error::BadBoundaries(format!("not strictly increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// Block-constant kernel: value `values[(s,t)]` on `[t_{s−1},t_s]×[t_{t−1},t_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockKernel {
    blocks: BlockSpec,
    values: DMatrix<f64>,
}

impl BlockKernel {
    pub fn blocks(&self) -> &BlockSpec {
        &self.blocks
    }

    /// The M×M matrix 𝐊 of block values.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn value(&self, s: usize, t: usize) -> f64 {
        self.values[(s, t)]
    }

    fn block_of(&self, x: f64) -> usize {
        let b = &self.blocks.boundaries;
        match b[1..].iter().position(|&t| x < t) {
            Some(s) => s,
            None => b.len() - 2,
        }
    }

    fn cell_integral(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let b = &self.blocks.boundaries;
        let mut total = 0.0;
        for s in 0..self.blocks.len() {
            let wx = (x1.min(b[s + 1]) - x0.max(b[s])).max(0.0);
            if wx == 0.0 {
                continue;
            }
            for t in 0..self.blocks.len() {
                let wy = (y1.min(b[t + 1]) - y0.max(b[t])).max(0.0);
                total += self.values[(s, t)] * wx * wy;
            }
        }
        total
    }
}

/// The activity function of a rank-one kernel.
#[derive(Clone)]
pub enum Psi {
    /// Linear interpolation through `(knots[i], vals[i])`, knots spanning [0,1].
    PiecewiseLinear { knots: Vec<f64>, vals: Vec<f64> },
    /// Arbitrary nonnegative function, integrated adaptively.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psi::PiecewiseLinear { knots, vals } => f
                .debug_struct("PiecewiseLinear")
                .field("knots", knots)
                .field("vals", vals)
                .finish(),
            Psi::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Psi {
    pub fn piecewise(knots: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        validate_boundaries(&knots).map_err(|e| Error::InvalidInput(format!("psi knots: {e}")))?;
        if vals.len() != knots.len() {
            return Err(Error::LengthMismatch { expected: knots.len(), got: vals.len() });
        }
        if vals.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("psi values must be finite and nonnegative".into()));
        }
        Ok(Psi::PiecewiseLinear { knots, vals })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Psi::PiecewiseLinear { knots, vals } => {
                let i = match knots[1..].iter().position(|&t| x <= t) {
                    Some(i) => i,
                    None => knots.len() - 2,
                };
                let (a, b) = (knots[i], knots[i + 1]);
                let w = ((x - a) / (b - a)).clamp(0.0, 1.0);
                vals[i] * (1.0 - w) + vals[i + 1] * w
            }
            Psi::Function(f) => f(x),
        }
    }

    fn integral(&self, a: f64, b: f64, tol: AdaptiveTolerance) -> Result<f64> {
        match self {
            Psi::PiecewiseLinear { knots, .. } => {
                let mut total = 0.0;
                for w in knots.windows(2) {
                    let lo = a.max(w[0]);
                    let hi = b.min(w[1]);
                    if hi > lo {
                        total += 0.5 * (hi - lo) * (self.eval(lo) + self.eval(hi));
                    }
                }
                Ok(total)
            }
            Psi::Function(f) => integrate_1d(|x| f(x), a, b, tol),
        }
    }
}

/// Rank-one kernel `K(x,y) = ψ(x)ψ(y)`.
#[derive(Debug, Clone)]
pub struct Rank1Kernel {
    pub psi: Psi,
    pub tolerance: AdaptiveTolerance,
}

/// A symmetric nonnegative kernel on [0,1]².
#[derive(Debug, Clone)]
pub enum Kernel {
    BlockConstant(BlockKernel),
    Rank1(Rank1Kernel),
    /// `K(x,y) = 1/max{x,y}`.
    Dubins,
}

/// Build a block-constant kernel; rejects asymmetric or negative values.
pub fn block_kernel_new(boundaries: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Kernel> {
    let blocks = BlockSpec::new(boundaries)?;
    let m = blocks.len();
    if values.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: values.len() });
    }
    if let Some(row) = values.iter().find(|r| r.len() != m) {
        return Err(Error::LengthMismatch { expected: m, got: row.len() });
    }
    for s in 0..m {
        for t in 0..m {
            let v = values[s][t];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("kernel value ({s},{t}) = {v} must be finite and ≥ 0")));
            }
            if t > s && values[s][t] != values[t][s] {
                return Err(Error::NonSymmetric { row: s, col: t, a: values[s][t], b: values[t][s] });
            }
        }
    }
    let values = DMatrix::from_fn(m, m, |s, t| values[s][t]);
    Ok(Kernel::BlockConstant(BlockKernel { blocks, values }))
}

/// `G(a,b) = ∫_0^a∫_0^b 1/max(x,y) dy dx = 2m + m ln(M/m)`, m = min, M = max.
fn dubins_corner(a: f64, b: f64) -> f64 {
    let (m, big) = if a <= b { (a, b) } else { (b, a) };
    if m <= 0.0 {
        0.0
    } else {
        2.0 * m + m * (big / m).ln()
    }
}

impl Kernel {
    /// Homogeneous kernel `K ≡ c`.
    pub fn constant(c: f64) -> Self {
        block_kernel_new(vec![0.0, 1.0], vec![vec![c]]).expect("constant kernel is valid")
    }

    pub fn rank1(psi: Psi) -> Self {
        Kernel::Rank1(Rank1Kernel { psi, tolerance: AdaptiveTolerance::default() })
    }

    pub fn as_block(&self) -> Option<&BlockKernel> {
        match self {
            Kernel::BlockConstant(b) => Some(b),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::BlockConstant(b) => b.values[(b.block_of(x), b.block_of(y))],
            Kernel::Rank1(r) => r.psi.eval(x) * r.psi.eval(y),
            Kernel::Dubins => 1.0 / x.max(y),
        }
    }

    /// `∫_{[x0,x1]×[y0,y1]} K`.
    pub fn cell_integral(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<f64> {
        match self {
            Kernel::BlockConstant(b) => Ok(b.cell_integral(x0, x1, y0, y1)),
            Kernel::Rank1(r) => {
                let ix = r.psi.integral(x0, x1, r.tolerance)?;
                let iy = if (x0, x1) == (y0, y1) { ix } else { r.psi.integral(y0, y1, r.tolerance)? };
                Ok(ix * iy)
            }
            Kernel::Dubins => Ok((dubins_corner(x1, y1) - dubins_corner(x0, y1) - dubins_corner(x1, y0)
                + dubins_corner(x0, y0))
            .max(0.0)),
        }
    }

    /// Total mass `∫∫ K`.
    pub fn integral(&self) -> Result<f64> {
        self.cell_integral(0.0, 1.0, 0.0, 1.0)
    }

    /// Boundaries at which the kernel may be discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Kernel::BlockConstant(b) => b.blocks.boundaries.clone(),
            Kernel::Rank1(Rank1Kernel { psi: Psi::PiecewiseLinear { knots, .. }, .. }) => knots.clone(),
            _ => vec![0.0, 1.0],
        }
    }
}

/// `K̃_N(i,j) = N² ∫_{[(i−1)/N, i/N]×[(j−1)/N, j/N]} K` for 1-based `i, j`.
pub fn block_average(kernel: &Kernel, n: usize, i: usize, j: usize) -> Result<f64> {
    if i == 0 || j == 0 || i > n || j > n {
        return Err(Error::InvalidInput(format!("cell ({i},{j}) outside 1..={n}")));
    }
    let nf = n as f64;
    let (x0, x1) = ((i - 1) as f64 / nf, i as f64 / nf);
    let (y0, y1) = ((j - 1) as f64 / nf, j as f64 / nf);
    Ok(nf * nf * kernel.cell_integral(x0, x1, y0, y1)?)
}

/// All cell averages `K̃_N(i,j)`, row-major with 0-based indices.
pub fn block_average_matrix(kernel: &Kernel, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = block_average(kernel, n, i + 1, j + 1)?;
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    Ok(out)
}

/// Block-constant kernel on the uniform `m`-grid with the cell means of `kernel`.
pub fn coarsen(kernel: &Kernel, m: usize) -> Result<Kernel> {
    if m == 0 {
        return Err(Error::InvalidInput("coarsening needs at least one block".into()));
    }
    let mut values = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = block_average(kernel, m, i + 1, j + 1)?;
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    block_kernel_new(BlockSpec::uniform(m).boundaries, values)
}

/// `∫∫ |K₁ − K₂|`: exact for two block kernels, adaptive cubature otherwise.
pub fn l1_distance(k1: &Kernel, k2: &Kernel) -> Result<f64> {
    let mut grid: Vec<f64> = k1.breakpoints().into_iter().chain(k2.breakpoints()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    if let (Kernel::BlockConstant(a), Kernel::BlockConstant(b)) = (k1, k2) {
        let mut total = 0.0;
        for wx in grid.windows(2) {
            let mx = 0.5 * (wx[0] + wx[1]);
            for wy in grid.windows(2) {
                let my = 0.5 * (wy[0] + wy[1]);
                let diff = a.values[(a.block_of(mx), a.block_of(my))] - b.values[(b.block_of(mx), b.block_of(my))];
                total += diff.abs() * (wx[1] - wx[0]) * (wy[1] - wy[0]);
            }
        }
        return Ok(total);
    }
    // |K1 − K2| is symmetric, so integrate the upper triangle of cells twice
    let tol = AdaptiveTolerance { relative: 1e-6, absolute: 1e-10, max_cells: 200_000 };
    let mut total = 0.0;
    for (a, wx) in grid.windows(2).enumerate() {
        for (b, wy) in grid.windows(2).enumerate().skip(a) {
            let v = integrate_2d(|x, y| (k1.eval(x, y) - k2.eval(x, y)).abs(), wx[0], wx[1], wy[0], wy[1], tol)?;
            total += if a == b { v } else { 2.0 * v };
        }
    }
    Ok(total)
}

/// Outcome of [`psd_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue within tolerance of zero: PSD but not definite.
    pub singular: bool,
}

/// Positive-semidefiniteness of the block matrix 𝐊.
pub fn psd_check(kernel: &Kernel) -> Result<PsdReport> {
    let b = kernel.as_block().ok_or(Error::WrongVariant { expected: "block-constant" })?;
    let min_eigenvalue = min_eigenvalue(b.values());
    Ok(PsdReport {
        is_psd: min_eigenvalue > -PSD_TOLERANCE,
        min_eigenvalue,
        singular: min_eigenvalue.abs() <= PSD_TOLERANCE,
    })
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// JSON literal for kernels in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelLiteral {
    Block { boundaries: Vec<f64>, values: Vec<Vec<f64>> },
    Dubins {},
    Rank1 { psi: String, knots: Vec<f64>, vals: Vec<f64> },
}

impl TryFrom<&KernelLiteral> for Kernel {
    type Error = Error;

    fn try_from(lit: &KernelLiteral) -> Result<Kernel> {
        match lit {
            KernelLiteral::Block { boundaries, values } => block_kernel_new(boundaries.clone(), values.clone()),
            KernelLiteral::Dubins {} => Ok(Kernel::Dubins),
            KernelLiteral::Rank1 { psi, knots, vals } => {
                if psi != "piecewise" {
                    return Err(Error::ConfigInvalid(format!("unknown psi kind `{psi}` (expected \"piecewise\")")));
                }
                Ok(Kernel::rank1(Psi::piecewise(knots.clone(), vals.clone())?))
            }
        }
    }
}
