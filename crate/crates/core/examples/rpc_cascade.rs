//! Sample a truncated Ruelle probability cascade and use it as a Monte Carlo
//! oracle for the nested Parisi recursion.
use nalgebra::DMatrix;
use potts::parisi::{functional, increment_covariances, ModelSpec, ParisiParams, Scheme};
use potts::rpc::{cascade_log_sum, sample_cascade, CascadeSpec};
use potts::species::Proportions;

fn main() -> potts::Result<()> {
    let spec = CascadeSpec::new(vec![0.3, 0.7], 32)?;
    let s = sample_cascade(&spec, 11);
    let top: Vec<f64> = (0..4).map(|j| s.leaf(&[0, j])).collect();
    println!("leading leaf weights under the first root child: {top:.4?}");

    let model = ModelSpec::single(2, 2.0, 1.0)?;
    let d = Proportions::uniform(1, 2);
    let params = ParisiParams {
        x: vec![0.4, 0.8],
        q: vec![vec![DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.2, 0.3]), DMatrix::from_diagonal_element(2, 2, 0.5)]],
        lambda: vec![vec![0.1, -0.1]],
    };
    let v = functional(&params, &model, &d, &Scheme::auto(2, params.r()))?;
    let incs = increment_covariances(&params, &model)?;
    let covs: Vec<_> = incs[0].iter().map(|i| i.cov.clone()).collect();
    let lambda = params.lambda[0].clone();
    let lse = move |z: &[f64]| {
        let v: Vec<f64> = lambda.iter().zip(z).map(|(l, z)| l + z).collect();
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    };
    let cascade = CascadeSpec::new(params.x.clone(), 64)?;
    let mc = cascade_log_sum(&cascade, &covs, lse, 4000, 5)?;
    println!("recursion X₀ = {:.5}, cascade estimate {:.5} ± {:.5}", v.x0[0], mc.mean, mc.stderr);
    Ok(())
}
