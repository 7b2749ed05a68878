mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use potts::cut::{cut_value, maxcut_exhaustive, maxcut_localsearch, CutAssignment};
use potts::graph::{sample_coupled, sample_graph, EdgeProbabilities, Graph};
use potts::kernel::{block_kernel_new, Kernel};
use potts::parisi::{annealed_value, functional, minimize, MinimizeOptions, ModelSpec, Scheme};
use potts::rng::derive_seed;
use potts::rpc::{cascade_log_sum, sample_cascade, CascadeSpec};
use potts::species::{ConstrainedSpace, ProportionConstraint, Proportions, SpeciesPartition, SpeciesStructure};
use potts::spinglass::{free_energy_enum, free_energy_replicas, ground_state_enum, hamiltonian, sample_disorder};
use potts::stats::{chi_square, ks_two_sample, Estimate};

use common::{draw, run};

#[test]
fn overlaps_are_normalized() {
    common::overlap_normalization().unwrap();
}

#[test]
fn covariance_identity() {
    common::covariance_identity(10, 10_000).unwrap();
}

#[test]
fn color_permutation_symmetry() {
    common::color_permutation_symmetry().unwrap();
}

#[test]
fn species_permutation_symmetry() {
    common::species_permutation_symmetry().unwrap();
}

#[test]
fn level_merging() {
    common::level_merging_invariance().unwrap();
}

#[test]
fn deeper_is_no_worse() {
    common::minimize_monotone_in_r(3).unwrap();
}

#[test]
fn parts_recombine() {
    run(32, (any::<u64>(), 1usize..=3, 1usize..=2, 1usize..=3, 0.0f64..2.0), |(seed, k, m, r, beta)| {
        let (model, d, params) = common::instance(seed, k, m, r, beta);
        let v = functional(&params, &model, &d, &Scheme::auto(k, r)).unwrap();
        prop_assert!((v.value - (v.x0_term - v.lambda_term - v.y_term)).abs() <= 1e-12);
        Ok(())
    })
    .unwrap();
}

#[test]
fn minimum_below_annealed() {
    run(4, (any::<u64>(), 2usize..=3, 1usize..=2, 0.3f64..1.5), |(seed, k, m, beta)| {
        let (model, d, _) = common::instance(seed, k, m, 1, beta);
        let v = minimize(&model, &d, 1, &MinimizeOptions { restarts: 3, seed, ..Default::default() }).unwrap().value;
        prop_assert!(v.value <= annealed_value(&model, &d) + 1e-9 + v.err);
        Ok(())
    })
    .unwrap();
}

fn small_graph() -> impl Strategy<Value = Graph> {
    (3usize..=9).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut pairs = Vec::new();
            let mut it = bits.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    if it.next().unwrap() {
                        pairs.push((i, j));
                    }
                }
            }
            Graph::from_edges(n, pairs).unwrap()
        })
    })
}

#[test]
fn cut_value_ignores_color_labels() {
    let strategy = (small_graph(), 2usize..=4).prop_flat_map(|(g, k)| {
        let n = g.n();
        (Just(g), Just(k), proptest::collection::vec(0..k, n), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
    });
    run(100, strategy, |(g, k, sigma, perm)| {
        let a = cut_value(&g, &CutAssignment::new(sigma.clone(), k).unwrap()).unwrap();
        let moved: Vec<usize> = sigma.iter().map(|&c| perm[c]).collect();
        let b = cut_value(&g, &CutAssignment::new(moved, k).unwrap()).unwrap();
        prop_assert_eq!(a, b);
        Ok(())
    })
    .unwrap();
}

#[test]
fn more_colors_cut_more() {
    run(40, (small_graph(), 2usize..=4), |(g, k)| {
        let more = maxcut_exhaustive(&g, k, None).unwrap().value;
        let fewer = maxcut_exhaustive(&g, k - 1, None).unwrap().value;
        prop_assert!(more >= fewer);
        let ls = maxcut_localsearch(&g, k, 4, 0, None).unwrap().value;
        prop_assert!(ls <= more);
        Ok(())
    })
    .unwrap();
}

#[test]
fn local_search_nondecreasing_in_restarts() {
    let kernel = Kernel::constant(1.0);
    run(12, (any::<u64>(), 2usize..=3), |(seed, k)| {
        let g = sample_graph(&kernel, 60, 6.0, seed).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for restarts in [1, 2, 5, 9] {
            let v = maxcut_localsearch(&g, k, restarts, seed, None).unwrap().value;
            prop_assert!(v >= prev);
            prev = v;
        }
        Ok(())
    })
    .unwrap();
}

#[test]
fn exact_constraints_hold_for_returned_assignments() {
    let strategy = (small_graph(), 2usize..=3, any::<u64>());
    run(40, strategy, |(g, k, seed)| {
        let n = g.n();
        let half = n / 2;
        let species: Vec<usize> = (0..n).map(|i| usize::from(i >= half)).collect();
        let part = SpeciesPartition::from_assignment(species, 2).unwrap();
        let d = Proportions::new(vec![vec![1.0 / k as f64; k]; 2]).unwrap();
        let space = match ConstrainedSpace::new(part, &ProportionConstraint::exact(d)) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        for sol in [
            maxcut_exhaustive(&g, k, Some(&space)).unwrap(),
            maxcut_localsearch(&g, k, 3, seed, Some(&space)).unwrap(),
        ] {
            prop_assert!(space.contains(&sol.assignment.sigma));
        }
        let free = maxcut_exhaustive(&g, k, None).unwrap().value;
        prop_assert!(maxcut_exhaustive(&g, k, Some(&space)).unwrap().value <= free);
        Ok(())
    })
    .unwrap();
}

#[test]
fn constraints_only_lower_enumerated_values() {
    run(12, (any::<u64>(), 0.2f64..2.0), |(seed, beta)| {
        let n = 10;
        let species = SpeciesStructure::homogeneous(n, 1.0);
        let g = sample_disorder(&species, seed).unwrap();
        let d = Proportions::new(vec![vec![0.4, 0.6]]).unwrap();
        let free = free_energy_enum(&g, 2, beta, None).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for eps in [0.0, 0.1, 0.25, 0.6] {
            let space = ConstrainedSpace::new(species.partition.clone(), &ProportionConstraint { d: d.clone(), epsilon: eps }).unwrap();
            let f = free_energy_enum(&g, 2, beta, Some(&space)).unwrap();
            prop_assert!(f <= free + 1e-12);
            prop_assert!(f >= prev - 1e-12);
            prev = f;
            prop_assert!(ground_state_enum(&g, 2, Some(&space)).unwrap().0 <= ground_state_enum(&g, 2, None).unwrap().0 + 1e-12);
        }
        // the widest window admits everything
        prop_assert!((prev - free).abs() < 1e-12);
        Ok(())
    })
    .unwrap();
}

#[test]
fn hamiltonian_ignores_color_labels() {
    let species = SpeciesStructure::homogeneous(7, 1.0);
    let g = sample_disorder(&species, 5).unwrap();
    run(50, (proptest::collection::vec(0usize..3, 7), Just(vec![0usize, 1, 2]).prop_shuffle()), |(sigma, perm)| {
        let moved: Vec<usize> = sigma.iter().map(|&c| perm[c]).collect();
        prop_assert!((hamiltonian(&g, &sigma).unwrap() - hamiltonian(&g, &moved).unwrap()).abs() < 1e-12);
        Ok(())
    })
    .unwrap();
}

#[test]
fn cascade_children_are_exchangeable_across_parents() {
    // the leading child's share of its parent's mass has the same law under
    // every parent
    let spec = CascadeSpec::new(vec![0.35, 0.7], 24).unwrap();
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for seed in 0..1000 {
        let s = sample_cascade(&spec, seed);
        for (parent, out) in [(0usize, &mut first), (1, &mut second)] {
            let total: f64 = (0..24).map(|j| s.leaf(&[parent, j])).sum();
            out.push(s.leaf(&[parent, 0]) / total);
        }
    }
    let (_, p) = ks_two_sample(&first, &second);
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn coupled_marginals_match_single_sampling() {
    let ka = block_kernel_new(vec![0.0, 0.4, 1.0], vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let kb = Kernel::constant(1.2);
    let (n, c) = (5, 1.5);
    let pa = EdgeProbabilities::new(&ka, n, c).unwrap();
    let pb = EdgeProbabilities::new(&kb, n, c).unwrap();
    let reps = 10_000u64;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut hits_a = vec![0.0; pairs.len()];
    let mut hits_b = vec![0.0; pairs.len()];
    for r in 0..reps {
        let (ga, gb) = sample_coupled(&pa, &pb, derive_seed(3, r)).unwrap();
        for (e, &(i, j)) in pairs.iter().enumerate() {
            hits_a[e] += f64::from(u8::from(ga.has_edge(i, j)));
            hits_b[e] += f64::from(u8::from(gb.has_edge(i, j)));
        }
    }
    for (hits, p) in [(&hits_a, &pa), (&hits_b, &pb)] {
        // one two-cell table per pair: edge present / absent
        let mut observed = Vec::new();
        let mut expected = Vec::new();
        for (e, &(i, j)) in pairs.iter().enumerate() {
            let q = p.get(i, j);
            observed.extend([hits[e], reps as f64 - hits[e]]);
            expected.extend([q * reps as f64, (1.0 - q) * reps as f64]);
        }
        let (_, pval) = chi_square(&observed, &expected);
        assert!(pval > 0.001, "chi-square p-value {pval}");
    }
}

#[test]
fn degrees_concentrate() {
    let kernel = block_kernel_new(vec![0.0, 0.5, 1.0], vec![vec![3.0, 1.0], vec![1.0, 0.5]]).unwrap();
    let (n, c) = (40, 4.0);
    let probs = EdgeProbabilities::new(&kernel, n, c).unwrap();
    let reps = 400;
    for v in [0, 19, 39] {
        let degs: Vec<f64> = (0..reps).map(|r| sample_graph(&kernel, n, c, derive_seed(9, r)).unwrap().degree(v) as f64).collect();
        let e = Estimate::from_samples(&degs);
        assert!(e.agrees_with(probs.expected_degree(v), 3.0), "vertex {v}: {e:?} vs {}", probs.expected_degree(v));
    }
}

#[test]
fn cascade_guerra_bound_dominates_enumeration() {
    // the bound evaluated by the cascade at optimized parameters sits above
    // the enumerated constrained free energy
    let (n, beta) = (12, 1.0);
    let d = Proportions::uniform(1, 2);
    let model = ModelSpec::single(2, 1.0, beta).unwrap();
    let m = minimize(&model, &d, 2, &MinimizeOptions { restarts: 3, ..Default::default() }).unwrap();
    let incs = potts::parisi::increment_covariances(&m.params, &model).unwrap();
    let covs: Vec<DMatrix<f64>> = incs[0].iter().map(|i| i.cov.clone()).collect();
    let lambda = m.params.lambda[0].clone();
    let lse = move |z: &[f64]| {
        let v: Vec<f64> = lambda.iter().zip(z).map(|(l, z)| l + z).collect();
        let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
    };
    let spec = CascadeSpec::new(m.params.x.iter().map(|x| x.clamp(1e-3, 1.0 - 1e-3)).collect(), 48).unwrap();
    let z = cascade_log_sum(&spec, &covs, lse, 3000, 4).unwrap();
    let bound = z.mean - m.value.lambda_term - m.value.y_term;
    let species = SpeciesStructure::homogeneous(n, 1.0);
    let f = free_energy_replicas(&species, 2, beta, Some(&ProportionConstraint::exact(d)), 200, 8).unwrap();
    assert!(f.mean <= bound + 3.0 * z.stderr.hypot(f.stderr), "F_N {f:?} vs cascade bound {bound} ± {}", z.stderr);
}

#[test]
fn draw_is_deterministic() {
    assert_eq!(draw(any::<u64>()), draw(any::<u64>()));
}
