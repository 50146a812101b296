//! The step factor of the skeleton chain: sampling, its exact law, and the
//! negative-moment equation whose root is the tail exponent.

use fvspine::analytic::quadrature::QuadratureSpec;
use fvspine::analytic::{solve_tail_exponent, xi_cdf, xi_neg_moment, LN_SQRT2};
use fvspine::kernels::{sample_step_factor, RandomSource};
use fvspine::stats::{ks_one_sample, mean_ci};

fn main() -> fvspine::Result<()> {
    let mut rs = RandomSource::new(7, 0);
    let xs: Vec<f64> = (0..50_000).map(|_| sample_step_factor(&mut rs)).collect();
    let ks = ks_one_sample(&xs, xi_cdf)?;
    println!("KS vs exact law: D = {:.5}, p = {:.3}", ks.statistic, ks.p_value);

    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let m = mean_ci(&logs)?;
    println!(
        "mean log step {:.4} ± {:.4} (ln sqrt 2 = {LN_SQRT2:.4})",
        m.estimate, m.stderr
    );

    let spec = QuadratureSpec::default();
    for gamma in [0.5, 1.0, 1.5] {
        println!("E[xi^-{gamma}] = {:.6}", xi_neg_moment(gamma, &spec)?);
    }
    let root = solve_tail_exponent(&spec)?;
    println!("positive root: {:.8}", root.root);
    Ok(())
}
