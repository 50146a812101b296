//! Discriminator statistics of spine and Bessel-3 paths on their intrinsic
//! clocks, and a cross-validated threshold rule separating them.

use fvspine::experiments::separation;

fn main() -> fvspine::Result<()> {
    let sep = separation(13, 12, (250.0, 500.0), 1e-3, 1e-2, 0.01, 4, None)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("spine mean statistic  {:.4}", mean(&sep.spine_stats()));
    println!("bessel mean statistic {:.4}", mean(&sep.bessel_stats()));
    println!("separation: {:.1} standard errors", sep.separation_in_se()?);
    let cv = &sep.report.cross_validation;
    println!(
        "threshold {:.4} (spine above: {}), held-out accuracy {:.2}",
        sep.report.threshold, sep.report.spine_above, cv.heldout_accuracy
    );
    Ok(())
}
