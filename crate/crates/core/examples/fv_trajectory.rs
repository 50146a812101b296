//! One two-particle Fleming-Viot trajectory, its spine, and the comparison
//! of the spine's clock with the modulus clock at branch times.

use fvspine::fv::{extract_spine, hn_sn_sequence, simulate_fv_with, trajectory_rows, FvConfig, StepPolicy};
use fvspine::kernels::RandomSource;

fn main() -> fvspine::Result<()> {
    let config = FvConfig::new(1.0, 1e-4, 10).with_policy(StepPolicy::Adaptive { ratio: 0.01 });
    let traj = simulate_fv_with(&mut RandomSource::new(21, 0), &config)?;
    for k in 1..=traj.branch_count() {
        println!(
            "branch {k:>2}: T = {:>10.4}  Y = {:>8.4}  hitter {:?}",
            traj.branch_times[k],
            traj.branch_values[k],
            traj.hitters[k - 1]
        );
    }
    let spine = extract_spine(&traj)?;
    println!("spine has {} grid points", spine.path.len());
    for e in hn_sn_sequence(&traj)?.entries {
        println!("n = {:>2}  H = {:.4}  S = {:.4}", e.n, e.h, e.s);
    }
    let rows = trajectory_rows(&traj)?;
    println!("{} CSV rows would be written", rows.len());
    Ok(())
}
