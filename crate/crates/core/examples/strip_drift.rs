//! The log-strip process: renewal jump rate and the drift of its real part.

use fvspine::analytic::strip_exit::EXIT_MEAN;
use fvspine::analytic::KAPPA;
use fvspine::kernels::RandomSource;
use fvspine::strip::{renewal_drift_estimate, simulate_strip_with, StripConfig};

fn main() -> fvspine::Result<()> {
    let config = StripConfig::new(2_000.0, 1e-4).without_excess();
    let trace = simulate_strip_with(&mut RandomSource::new(3, 0), &config)?;
    println!(
        "{} jumps in clock {}: rate {:.4} (reference {:.4})",
        trace.jump_count(),
        trace.horizon,
        trace.jump_count() as f64 / trace.horizon,
        1.0 / EXIT_MEAN
    );
    let est = renewal_drift_estimate(&trace)?;
    println!("drift {:.4} ± {:.4} (reference {KAPPA:.6})", est.estimate, est.stderr);
    println!("Z1(u)/u = {:.4}", trace.z1_end / trace.horizon);
    Ok(())
}
