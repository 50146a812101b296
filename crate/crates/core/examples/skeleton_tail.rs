//! Tail of the all-time minimum of the log-skeleton, under both step
//! representations, with a weighted log-linear fit.

use fvspine::skeleton::{tail_curve_with, SkeletonMethod};
use fvspine::stats::{exp_tail_fit, TailCell};

fn main() -> fvspine::Result<()> {
    let grid = [0.0, 1.0, 2.0, 3.0, 4.0];
    for method in [SkeletonMethod::XiDirect, SkeletonMethod::RenewalStep] {
        let curve = tail_curve_with(11, 100_000, &grid, 14.0, method)?;
        let cells: Vec<TailCell> = curve.cells().into_iter().filter(|c| c.t >= 1.0).collect();
        let fit = exp_tail_fit(&cells)?;
        println!("{method:?}: slope {:.3} ± {:.3}", fit.slope, fit.slope_se);
        for p in &curve.points {
            println!(
                "  t = {:.1}  P(min < -t) = {:.5}  c_hat = {:.4}",
                p.t, p.survival.estimate, p.c_hat
            );
        }
    }
    Ok(())
}
