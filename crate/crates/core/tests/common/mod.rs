//! Property checks shared by the invariant tests and the acceptance runner.
#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};

use potts::cli::suites::random_instance;
use potts::parisi::{functional, minimize, MinimizeOptions, ModelSpec, ParisiParams, Scheme};
use potts::rng::stream_rng;
use potts::species::{empirical_proportions, Proportions, SpeciesPartition, SpeciesStructure};
use potts::spinglass::{hamiltonian, overlap, sample_disorder};
use potts::stats::Estimate;

/// Run `prop` on `cases` inputs from a fixed-seed runner.
pub fn run<S, F>(cases: u32, strategy: S, prop: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config, rng);
    match runner.run(&strategy, prop) {
        Ok(()) => Ok(()),
        Err(TestError::Fail(why, input)) => Err(format!("{why} for input {input:?}")),
        Err(TestError::Abort(why)) => Err(format!("aborted: {why}")),
    }
}

/// A sample of `strategy` from a fixed seed, for one-off use.
pub fn draw<S: Strategy>(strategy: S) -> S::Value {
    let mut runner = TestRunner::deterministic();
    strategy.new_tree(&mut runner).expect("strategy").current()
}

/// `(n, κ, species assignment, σ¹, σ²)` with every species nonempty.
pub fn configuration_pair(max_n: usize, max_kappa: usize, max_species: usize) -> impl Strategy<Value = (usize, usize, Vec<usize>, Vec<usize>, Vec<usize>)> {
    (1..=max_species, 1..=max_kappa).prop_flat_map(move |(m, k)| {
        (m.max(2)..=max_n).prop_flat_map(move |n| {
            (
                Just(n),
                Just(k),
                proptest::collection::vec(0..m, n - m).prop_map(move |mut rest| {
                    let mut a: Vec<usize> = (0..m).collect();
                    a.append(&mut rest);
                    a
                }),
                proptest::collection::vec(0..k, n),
                proptest::collection::vec(0..k, n),
            )
        })
    })
}

pub fn overlap_normalization() -> Result<(), String> {
    run(200, configuration_pair(12, 4, 3), |(_, k, species, s1, s2)| {
        let m = species.iter().max().unwrap() + 1;
        let part = SpeciesPartition::from_assignment(species, m).unwrap();
        let r = overlap(&s1, &s2, k, &part).unwrap();
        for mat in &r.matrices {
            prop_assert!((mat.sum() - 1.0).abs() < 1e-12);
            prop_assert!(mat.iter().all(|&v| v >= 0.0));
        }
        let back = overlap(&s2, &s1, k, &part).unwrap();
        prop_assert_eq!(back, r.transpose());
        let own = overlap(&s1, &s1, k, &part).unwrap();
        let emp = empirical_proportions(&s1, k, &part).unwrap();
        for (s, mat) in own.matrices.iter().enumerate() {
            for a in 0..k {
                for b in 0..k {
                    let want = if a == b { emp.species(s)[a] } else { 0.0 };
                    prop_assert!((mat[(a, b)] - want).abs() < 1e-12);
                }
            }
        }
        Ok(())
    })
}

/// Empirical `Cov(H(σ¹), H(σ²))` over `replicas` disorder draws against
/// `N ΣΔ²ρρ(R^s,R^t)`, for `pairs` random configuration pairs on two species.
pub fn covariance_identity(pairs: u32, replicas: u64) -> Result<(), String> {
    let delta2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.7]);
    run(pairs, (configuration_pair(8, 3, 2), any::<u64>()), move |((n, k, species, s1, s2), seed)| {
        let m = species.iter().max().unwrap() + 1;
        let part = SpeciesPartition::from_assignment(species, m).unwrap();
        let d2 = if m == 1 { DMatrix::from_element(1, 1, 1.0) } else { delta2.clone() };
        let structure = SpeciesStructure::new(part.clone(), d2).unwrap();
        let target = overlap(&s1, &s2, k, &part).unwrap().covariance(&structure);
        // E H = 0, so the mean of H¹H² estimates the covariance
        let products: Vec<f64> = (0..replicas)
            .map(|i| {
                let g = sample_disorder(&structure, seed ^ i.wrapping_mul(0x9E37_79B9)).unwrap();
                hamiltonian(&g, &s1).unwrap() * hamiltonian(&g, &s2).unwrap()
            })
            .collect();
        let e = Estimate::from_samples(&products);
        prop_assert!(
            (e.mean - target).abs() <= 4.0 * e.stderr,
            "N={n}: empirical {} ± {}, identity {target}",
            e.mean,
            e.stderr
        );
        Ok(())
    })
}

/// Model, proportions and parameters from a seed.
pub fn instance(seed: u64, kappa: usize, species: usize, r: usize, beta: f64) -> (ModelSpec, Proportions, ParisiParams) {
    random_instance(kappa, species, r, beta, &mut stream_rng(seed, 0)).unwrap()
}

fn shape() -> impl Strategy<Value = (u64, usize, usize, usize, f64)> {
    (any::<u64>(), 1usize..=3, 1usize..=2, 1usize..=3, 0.3f64..1.5)
}

/// Functional invariant under a joint relabeling of colors.
pub fn color_permutation_symmetry() -> Result<(), String> {
    let strategy = shape().prop_flat_map(|(seed, k, m, r, beta)| {
        (Just((seed, k, m, r, beta)), Just((0..k).collect::<Vec<usize>>()).prop_shuffle())
    });
    run(24, strategy, |((seed, k, m, r, beta), perm)| {
        let (model, d, params) = instance(seed, k, m, r, beta);
        let scheme = Scheme::auto(k, r);
        let base = functional(&params, &model, &d, &scheme).unwrap();
        let d2 = Proportions::new(d.0.iter().map(|ds| perm.iter().map(|&p| ds[p]).collect()).collect()).unwrap();
        let moved = functional(&params.permute_colors(&perm), &model, &d2, &scheme).unwrap();
        let tol = 1e-9 + 2.0 * (base.err + moved.err);
        prop_assert!((base.value - moved.value).abs() <= tol, "{} vs {} (tol {tol:e})", base.value, moved.value);
        Ok(())
    })
}

/// Functional invariant under relabeling species.
pub fn species_permutation_symmetry() -> Result<(), String> {
    run(16, (any::<u64>(), 1usize..=3, 1usize..=3, 0.3f64..1.5), |(seed, k, r, beta)| {
        let (model, d, params) = instance(seed, k, 2, r, beta);
        let scheme = Scheme::auto(k, r);
        let base = functional(&params, &model, &d, &scheme).unwrap().value;
        let perm = [1usize, 0];
        let swapped_model = ModelSpec::new(
            k,
            perm.iter().map(|&s| model.rho[s]).collect(),
            DMatrix::from_fn(2, 2, |a, b| model.delta2[(perm[a], perm[b])]),
            beta,
        )
        .unwrap();
        let swapped_d = Proportions::new(perm.iter().map(|&s| d.0[s].clone()).collect()).unwrap();
        let swapped = ParisiParams {
            x: params.x.clone(),
            q: perm.iter().map(|&s| params.q[s].clone()).collect(),
            lambda: perm.iter().map(|&s| params.lambda[s].clone()).collect(),
        };
        let moved = functional(&swapped, &swapped_model, &swapped_d, &scheme).unwrap().value;
        prop_assert!((base - moved).abs() < 1e-10, "{base} vs {moved}");
        Ok(())
    })
}

/// Inserting a zero increment (a repeated `Q`) with any admissible `x`
/// leaves the functional unchanged.
pub fn level_merging_invariance() -> Result<(), String> {
    let strategy = (any::<u64>(), 1usize..=3, 1usize..=2, 1usize..=2, 0.3f64..1.5)
        .prop_flat_map(|(seed, k, m, r, beta)| (Just((seed, k, m, r, beta)), 0..=r, 0.0f64..=1.0));
    run(24, strategy, |((seed, k, m, r, beta), at, t)| {
        let (model, d, params) = instance(seed, k, m, r, beta);
        let lo = if at == 0 { 0.0 } else { params.x[at - 1] };
        let hi = if at == r { 1.0 } else { params.x[at] };
        let mut x = params.x.clone();
        x.insert(at, lo + t * (hi - lo));
        let q = params
            .q
            .iter()
            .map(|qs| {
                let mut qs = qs.clone();
                let repeat = if at == 0 { DMatrix::zeros(k, k) } else { qs[at - 1].clone() };
                qs.insert(at, repeat);
                qs
            })
            .collect();
        let merged = ParisiParams { x, q, lambda: params.lambda.clone() };
        // both depths must use the same rule on the shared levels
        let scheme = Scheme::gauss_hermite(if k <= 2 { 48 } else { 12 });
        let a = functional(&params, &model, &d, &scheme).unwrap().value;
        let b = functional(&merged, &model, &d, &scheme).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        Ok(())
    })
}

/// `minimize(r = 2) ≤ minimize(r = 1)` up to quadrature error.
pub fn minimize_monotone_in_r(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 2usize..=3, 0.5f64..2.0), |(seed, k, beta)| {
        let (model, d, _) = instance(seed, k, 1, 1, beta);
        let opts = MinimizeOptions { restarts: 4, seed, ..Default::default() };
        let one = minimize(&model, &d, 1, &opts).unwrap().value;
        let two = minimize(&model, &d, 2, &opts).unwrap().value;
        let tol = 1e-7 + one.err + two.err;
        prop_assert!(two.value <= one.value + tol, "r=1: {} r=2: {} (tol {tol:e})", one.value, two.value);
        Ok(())
    })
}
