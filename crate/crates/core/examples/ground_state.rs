//! Zero-temperature Parisi value 𝒫(d) by minimizing on a β grid and fitting
//! value(β)/β = a + b/β.
use potts::parisi::{ground_state, MinimizeOptions, ModelSpec};
use potts::species::Proportions;

fn main() -> potts::Result<()> {
    let model = ModelSpec::single(2, 2.0, 1.0)?;
    let d = Proportions::uniform(1, 2);
    let opts = MinimizeOptions { restarts: 3, ..Default::default() };
    let gs = ground_state(&model, &d, &[2.0, 4.0, 8.0, 16.0], 1, &opts)?;
    for (b, v) in gs.betas.iter().zip(&gs.values) {
        println!("β = {b:4}: value/β = {:.5}", v / b);
    }
    println!("𝒫(d) ≈ {:.5} (slope {:.4}, fit residual {:.1e}{})", gs.value, gs.slope, gs.residual, if gs.stalled { ", stalled" } else { "" });
    Ok(())
}
