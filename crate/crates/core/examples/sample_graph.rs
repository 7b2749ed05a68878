//! Sample an inhomogeneous random graph from a two-block kernel and compare
//! the degrees with their expectations.
use potts::graph::{EdgeProbabilities, sample_graph};
use potts::kernel::block_kernel_new;

fn main() -> potts::Result<()> {
    // a dense community on the first 30% of [0,1], sparse elsewhere
    let kernel = block_kernel_new(vec![0.0, 0.3, 1.0], vec![vec![3.0, 0.5], vec![0.5, 1.0]])?;
    let (n, c) = (2000, 4.0);
    let g = sample_graph(&kernel, n, c, 42)?;
    let probs = EdgeProbabilities::new(&kernel, n, c)?;
    println!("N = {n}, c = {c}: {} edges, {:.1} expected", g.edge_count(), probs.expected_edges());
    for v in [0, n / 2, n - 1] {
        println!("  vertex {v:4}: degree {:2}, expected {:.2}", g.degree(v), probs.expected_degree(v));
    }
    let path = std::env::temp_dir().join("potts-example.edges");
    g.write(&path)?;
    println!("edge list written to {}", path.display());
    Ok(())
}
