//! Coarsen the Dubins kernel and watch Max-Cut on coupled graph pairs
//! approach the original as the block count grows.
use potts::cut::maxcut_localsearch;
use potts::graph::sample_coupled_kernels;
use potts::kernel::{coarsen, l1_distance, Kernel};
use potts::rng::derive_seed;
use potts::stats::Estimate;

fn main() -> potts::Result<()> {
    let (n, c, kappa) = (300, 2.0, 2);
    for m in [2, 4, 8] {
        let coarse = coarsen(&Kernel::Dubins, m)?;
        let l1 = l1_distance(&Kernel::Dubins, &coarse)?;
        let diffs = (0..20)
            .map(|i| {
                let (a, b) = sample_coupled_kernels(&Kernel::Dubins, &coarse, n, c, derive_seed(5, i))?;
                let va = maxcut_localsearch(&a, kappa, 5, i, None)?.value;
                let vb = maxcut_localsearch(&b, kappa, 5, i, None)?.value;
                Ok((va - vb) / n as f64)
            })
            .collect::<potts::Result<Vec<f64>>>()?;
        let e = Estimate::from_samples(&diffs);
        println!("M = {m}: ‖K - K_M‖₁ = {l1:.4}, mean difference {:.4} ± {:.4}, bound (c/2)‖·‖₁ = {:.4}", e.mean, e.stderr, c / 2.0 * l1);
    }
    Ok(())
}
