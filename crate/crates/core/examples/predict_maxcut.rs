//! The two-term prediction MaxCut/N ≈ (c/2)(1 - Σ d²) + √c 𝒫(d)/2 for an
//! Erdős–Rényi graph, at a deliberately coarse resolution so it runs quickly.
use potts::kernel::Kernel;
use potts::parisi::{predict_curve, MinimizeOptions, PredictOptions};

fn main() -> potts::Result<()> {
    let opts = PredictOptions {
        mesh: 4,
        refine: false,
        r: 1,
        beta_grid: vec![2.0, 4.0, 8.0],
        minimize: MinimizeOptions { restarts: 2, ..Default::default() },
    };
    for p in predict_curve(&Kernel::constant(1.0), &[4.0, 16.0, 64.0], 2, &opts)? {
        println!(
            "c = {:4}: MaxCut/N ≈ {:.4} = leading {:.4} + √c·{:.4}/2 at d = {:?}",
            p.c, p.value, p.leading, p.parisi, p.d.0
        );
    }
    Ok(())
}
