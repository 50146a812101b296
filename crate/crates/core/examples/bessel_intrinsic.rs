//! Log Bessel-3 on its own additive clock, from a real-time path and from
//! clock-scale stepping.

use fvspine::bessel::{intrinsic_log_path, simulate_bessel3, simulate_intrinsic_log};
use fvspine::kernels::RandomSource;

fn main() -> fvspine::Result<()> {
    let path = simulate_bessel3(&mut RandomSource::new(9, 0), 1.0, 1e-3, 50.0)?;
    let g = intrinsic_log_path(&path, 0.01)?;
    let (u, v) = g.points().last().unwrap();
    println!("real-time path: clock reached {u:.2}, G(u)/u = {:.3}", v / u);

    let mut drifts = Vec::new();
    for i in 0..20 {
        let g = simulate_intrinsic_log(&mut RandomSource::new(9, 100 + i), 1.0, 1e-3, 200.0, 0.01)?;
        let (u, v) = g.points().last().unwrap();
        drifts.push(v / u);
    }
    let mean = drifts.iter().sum::<f64>() / drifts.len() as f64;
    println!("clock-scale paths: mean G(200)/200 = {mean:.3} (reference 0.5)");
    Ok(())
}
