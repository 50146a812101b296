//! The iterated-logarithm statistic of branch values along long
//! trajectories.

use fvspine::fv::{simulate_fv_with, FvConfig, StepPolicy};
use fvspine::kernels::RandomSource;
use fvspine::stats::{lil_statistic_after, LIL_BURN_IN};

fn main() -> fvspine::Result<()> {
    let config = FvConfig::new(1.0, 1e-4, usize::MAX)
        .with_policy(StepPolicy::ScaleInvariant { ratio: 0.01 })
        .with_horizon(1e5)
        .branches_only();
    for r in 0..5 {
        let traj = simulate_fv_with(&mut RandomSource::new(17, r), &config)?;
        let series = lil_statistic_after(&traj.branch_times, &traj.branch_values, LIL_BURN_IN)?;
        match series.final_max() {
            Some(m) => println!("replica {r}: {} branches, running max {m:.3}", traj.branch_count()),
            None => println!("replica {r}: no branch after the burn-in"),
        }
    }
    Ok(())
}
