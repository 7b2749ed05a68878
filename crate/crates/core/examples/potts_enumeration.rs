//! Free energy and ground state of a small two-species Potts spin glass by
//! exhaustive enumeration, with and without a color-proportion constraint.
use nalgebra::DMatrix;
use potts::species::{ProportionConstraint, Proportions, SpeciesPartition, SpeciesStructure};
use potts::spinglass::{free_energy_replicas, ground_state_replicas};

fn main() -> potts::Result<()> {
    let n = 10;
    let part = SpeciesPartition::from_assignment((0..n).map(|i| usize::from(i >= 4)).collect(), 2)?;
    let species = SpeciesStructure::new(part, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]))?;
    let kappa = 2;
    let balanced = ProportionConstraint::exact(Proportions::uniform(2, kappa));
    let gs = ground_state_replicas(&species, kappa, None, 20, 0)?;
    println!("N={n}, κ={kappa}, 20 disorder draws; GS/N = {:.4} ± {:.4}", gs.mean, gs.stderr);
    for beta in [0.5, 1.0, 2.0, 4.0] {
        let free = free_energy_replicas(&species, kappa, beta, None, 20, 0)?;
        let cons = free_energy_replicas(&species, kappa, beta, Some(&balanced), 20, 0)?;
        println!("β={beta}: F_N = {:.4} ± {:.4}, balanced F_N = {:.4} ± {:.4}", free.mean, free.stderr, cons.mean, cons.stderr);
    }
    Ok(())
}
