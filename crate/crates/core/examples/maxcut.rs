//! Max κ-cut of a sampled graph by local search, checked against exhaustive
//! search on a small instance.
use potts::cut::{cut_value, maxcut_exhaustive, maxcut_localsearch, maxcut_replicas};
use potts::graph::{sample_graph, Graph};
use potts::kernel::Kernel;
use potts::species::{ConstrainedSpace, ProportionConstraint, Proportions, SpeciesPartition};

fn main() -> potts::Result<()> {
    let small = sample_graph(&Kernel::constant(1.0), 12, 5.0, 1)?;
    for kappa in [2, 3] {
        let exact = maxcut_exhaustive(&small, kappa, None)?;
        let ls = maxcut_localsearch(&small, kappa, 50, 7, None)?;
        println!("N=12, κ={kappa}: exhaustive {}, local search {}", exact.value, ls.value);
        assert_eq!(cut_value(&small, &exact.assignment)? as f64, exact.value);
    }

    // balanced bisection of a 6-cycle
    let space = ConstrainedSpace::new(SpeciesPartition::single(6), &ProportionConstraint::exact(Proportions::uniform(1, 2)))?;
    let best = maxcut_exhaustive(&Graph::cycle(6), 2, Some(&space))?;
    println!("C6 balanced bisection: {} edges cut by {:?}", best.value, best.assignment.one_based());

    let kernel = Kernel::constant(1.0);
    let c = 8.0;
    let e = maxcut_replicas(&kernel, 500, c, 2, 8, 10, 3)?;
    println!(
        "Erdős–Rényi N=500, c={c}: MaxCut/N = {:.4} ± {:.4}, c/4 = {:.1}, (MaxCut/N - c/4)/√c = {:.3}",
        e.mean,
        e.stderr,
        c / 4.0,
        (e.mean - c / 4.0) / c.sqrt()
    );
    Ok(())
}
