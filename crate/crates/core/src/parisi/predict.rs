//! Outer supremum over proportions and the Max κ-cut prediction.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minimize::{ground_state, minimize, GroundState, MinimizeOptions};
use super::ModelSpec;
use crate::error::{Error, Result};
use crate::kernel::{min_eigenvalue, Kernel, PSD_TOLERANCE};
use crate::species::Proportions;

/// All `d` with every `d^s` on the simplex mesh `1/mesh`.
pub fn simplex_grid(species: usize, kappa: usize, mesh: usize) -> Vec<Proportions> {
    let one = compositions(kappa, mesh);
    let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for _ in 0..species {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                one.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.push(c.iter().map(|&v| v as f64 / mesh as f64).collect());
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(Proportions).collect()
}

fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(parts - 1, total - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Integer key of `d` on mesh `1/mesh` with colors sorted, so that
/// color-relabelings of the same `d` share a key.
fn canonical_key(d: &Proportions, mesh: usize) -> Vec<Vec<i64>> {
    let k = d.kappa();
    let mut cols: Vec<Vec<i64>> = (0..k)
        .map(|c| (0..d.species_count()).map(|s| (d.species(s)[c] * mesh as f64).round() as i64).collect())
        .collect();
    cols.sort();
    cols
}

/// Grid points near `center` on the finer mesh `1/fine`, within one coarse
/// step `1/coarse` in every coordinate.
fn refinement(center: &Proportions, coarse: usize, fine: usize) -> Vec<Proportions> {
    let radius = 1.0 / coarse as f64 + 1e-12;
    simplex_grid(center.species_count(), center.kappa(), fine)
        .into_iter()
        .filter(|d| {
            (0..d.species_count()).all(|s| d.species(s).iter().zip(center.species(s)).all(|(a, b)| (a - b).abs() <= radius))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unconstrained {
    pub d: Proportions,
    pub value: f64,
    /// Every probed `(d, value)` pair.
    pub probes: Vec<(Proportions, f64)>,
}

/// `sup_d inf 𝒫` over the mesh-`1/mesh` grid, refined once at mesh `1/100`
/// around the incumbent.
pub fn free_energy_unconstrained(model: &ModelSpec, mesh: usize, r: usize, opts: &MinimizeOptions) -> Result<Unconstrained> {
    if mesh == 0 {
        return Err(Error::InvalidInput("mesh must be ≥ 1".into()));
    }
    let eval = |grid: Vec<Proportions>, cache: &mut HashMap<Vec<Vec<i64>>, f64>, fine: usize| -> Result<Vec<(Proportions, f64)>> {
        let fresh: Vec<Proportions> = {
            let mut seen = std::collections::HashSet::new();
            grid.iter()
                .filter(|d| {
                    let key = canonical_key(d, fine);
                    !cache.contains_key(&key) && seen.insert(key)
                })
                .cloned()
                .collect()
        };
        let vals = fresh
            .par_iter()
            .map(|d| minimize(model, d, r, opts).map(|m| m.value.value))
            .collect::<Result<Vec<_>>>()?;
        for (d, v) in fresh.iter().zip(vals) {
            cache.insert(canonical_key(d, fine), v);
        }
        Ok(grid.into_iter().map(|d| {
            let v = cache[&canonical_key(&d, fine)];
            (d, v)
        }).collect())
    };
    let fine = 100usize.max(mesh);
    let mut cache = HashMap::new();
    let mut probes = eval(simplex_grid(model.species_count(), model.kappa, mesh), &mut cache, fine)?;
    let best = argmax(&probes).0.clone();
    probes.extend(eval(refinement(&best, mesh, fine), &mut cache, fine)?);
    let (d, value) = argmax(&probes).clone();
    Ok(Unconstrained { d, value, probes })
}

fn argmax<T>(v: &[(T, f64)]) -> &(T, f64) {
    // first maximizer in grid order
    v.iter().fold(&v[0], |best, x| if x.1 > best.1 + 1e-12 { x } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictOptions {
    pub mesh: usize,
    /// Refine once at mesh `1/100` around the incumbent.
    pub refine: bool,
    pub r: usize,
    pub beta_grid: Vec<f64>,
    pub minimize: MinimizeOptions,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self { mesh: 20, refine: true, r: 2, beta_grid: vec![2.0, 4.0, 8.0, 16.0], minimize: MinimizeOptions::default() }
    }
}

/// The prediction at one `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub c: f64,
    pub d: Proportions,
    pub value: f64,
    /// `(c/2) Σ 𝐊 ρρ (1 - ⟨d^s,d^t⟩)`.
    pub leading: f64,
    /// `𝒫(d)` at the argmax.
    pub parisi: f64,
    pub ground_state: GroundState,
}

fn leading_term(k: &DMatrix<f64>, rho: &[f64], d: &Proportions, c: f64) -> f64 {
    let m = rho.len();
    let mut total = 0.0;
    for s in 0..m {
        for t in 0..m {
            let dot: f64 = d.species(s).iter().zip(d.species(t)).map(|(a, b)| a * b).sum();
            total += k[(s, t)] * rho[s] * rho[t] * (1.0 - dot);
        }
    }
    0.5 * c * total
}

/// Species model behind a block kernel: `ρ` from the block widths and
/// `Δ² = 2𝐊`, the variance of `g_ij + g_ji` matching a symmetric coupling of
/// variance `𝐊`.
pub fn model_for_kernel(kernel: &Kernel, kappa: usize) -> Result<ModelSpec> {
    let block = kernel.as_block().ok_or(Error::WrongVariant { expected: "block-constant" })?;
    let values = block.values().clone();
    let min = min_eigenvalue(&values);
    if min < -PSD_TOLERANCE * values.amax().max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    ModelSpec::new(kappa, block.blocks().rho(), values * 2.0, 1.0)
}

/// Predictions for several `c` sharing one set of `𝒫(d)` evaluations.
pub fn predict_curve(kernel: &Kernel, cs: &[f64], kappa: usize, opts: &PredictOptions) -> Result<Vec<Prediction>> {
    let model = model_for_kernel(kernel, kappa)?;
    let k = kernel.as_block().expect("checked above").values().clone();
    let rho = model.rho.clone();
    let fine = 100usize.max(opts.mesh);
    let mut cache: HashMap<Vec<Vec<i64>>, GroundState> = HashMap::new();
    let fill = |grid: &[Proportions], cache: &mut HashMap<Vec<Vec<i64>>, GroundState>| -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        let fresh: Vec<&Proportions> =
            grid.iter().filter(|d| { let key = canonical_key(d, fine); !cache.contains_key(&key) && seen.insert(key) }).collect();
        let results = fresh
            .par_iter()
            .map(|d| ground_state(&model, d, &opts.beta_grid, opts.r, &opts.minimize))
            .collect::<Result<Vec<_>>>()?;
        for (d, g) in fresh.into_iter().zip(results) {
            cache.insert(canonical_key(d, fine), g);
        }
        Ok(())
    };
    let coarse = simplex_grid(model.species_count(), kappa, opts.mesh);
    fill(&coarse, &mut cache)?;
    let best_on = |grid: &[Proportions], cache: &HashMap<Vec<Vec<i64>>, GroundState>, c: f64| -> (Proportions, f64) {
        let scored: Vec<(Proportions, f64)> = grid
            .iter()
            .map(|d| {
                let p = cache[&canonical_key(d, fine)].value;
                (d.clone(), leading_term(&k, &rho, d, c) + 0.5 * c.sqrt() * p)
            })
            .collect();
        argmax(&scored).clone()
    };
    let mut out = Vec::with_capacity(cs.len());
    for &c in cs {
        if c < 0.0 {
            return Err(Error::InvalidInput("c must be ≥ 0".into()));
        }
        let (mut d, _) = best_on(&coarse, &cache, c);
        if opts.refine {
            let mut grid = refinement(&d, opts.mesh, fine);
            fill(&grid, &mut cache)?;
            grid.push(d.clone());
            d = best_on(&grid, &cache, c).0;
        }
        let gs = cache[&canonical_key(&d, fine)].clone();
        let leading = leading_term(&k, &rho, &d, c);
        out.push(Prediction { c, value: leading + 0.5 * c.sqrt() * gs.value, leading, parisi: gs.value, d, ground_state: gs });
    }
    Ok(out)
}

/// `sup_d [(c/2) Σ 𝐊 ρρ (1 - ⟨d^s,d^t⟩) + (√c/2) 𝒫(d)]` over the grid.
pub fn predict_maxcut(kernel: &Kernel, c: f64, kappa: usize, opts: &PredictOptions) -> Result<Prediction> {
    Ok(predict_curve(kernel, &[c], kappa, opts)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(1, 2, 20).len(), 21);
        assert_eq!(simplex_grid(1, 3, 20).len(), 231);
        assert_eq!(simplex_grid(2, 2, 4).len(), 25);
    }

    #[test]
    fn canonical_key_ignores_color_order() {
        let a = Proportions::new(vec![vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        let b = Proportions::new(vec![vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        assert_eq!(canonical_key(&a, 100), canonical_key(&b, 100));
    }

    #[test]
    fn leading_term_examples() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let best = |k: usize| {
            simplex_grid(1, k, 6).iter().map(|d| leading_term(&one, &[1.0], d, 8.0)).fold(f64::MIN, f64::max)
        };
        assert!((best(2) - 2.0).abs() < 1e-12);
        assert!((best(3) - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_at_beta_zero() {
        let model = ModelSpec::single(2, 1.0, 0.0).unwrap();
        let opts = MinimizeOptions { restarts: 1, ..Default::default() };
        let u = free_energy_unconstrained(&model, 4, 1, &opts).unwrap();
        assert_eq!(u.d.species(0), &[0.5, 0.5]);
        assert!((u.value - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn non_psd_kernel_is_rejected() {
        let k = crate::kernel::block_kernel_new(vec![0.0, 0.5, 1.0], vec![vec![1.0, 4.0], vec![4.0, 1.0]]).unwrap();
        assert!(matches!(predict_maxcut(&k, 1.0, 2, &PredictOptions::default()), Err(Error::NotPsd { .. })));
    }
}
