//! Evaluate the Parisi functional at a replica-symmetric point, then minimize
//! over depth-1 and depth-2 parameters and compare with the annealed bound.
use potts::parisi::{annealed_value, entropy, functional, minimize, MinimizeOptions, ModelSpec, ParisiParams, Scheme};
use potts::species::Proportions;

fn main() -> potts::Result<()> {
    let kappa = 3;
    let model = ModelSpec::single(kappa, 1.0, 1.5)?;
    let d = Proportions::uniform(1, kappa);

    let rs = ParisiParams::replica_symmetric(0.5, &d, vec![vec![0.0; kappa]]);
    let v = functional(&rs, &model, &d, &Scheme::auto(kappa, 1))?;
    println!("κ={kappa}, β=1.5, RS point x=0.5: 𝒫 = {:.6} ± {:.1e}", v.value, v.err);
    println!("annealed bound {:.6}, entropy {:.6}", annealed_value(&model, &d), entropy(&model, &d));

    let opts = MinimizeOptions { restarts: 3, ..Default::default() };
    for r in [1, 2] {
        let m = minimize(&model, &d, r, &opts)?;
        println!(
            "inf over r={r}: {:.6} at x = {:.3?} ({} evaluations{})",
            m.value.value,
            m.params.x,
            m.evaluations,
            if m.stalled { ", stalled" } else { "" }
        );
    }
    Ok(())
}
