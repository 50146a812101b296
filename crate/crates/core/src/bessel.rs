//! The 3-dimensional Bessel process: exact path simulation as the norm of a
//! 3-dimensional Brownian motion, its intrinsic clock `∫ X⁻²`, and the
//! exact law of its all-time minimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::RandomSource;
use crate::path::{additive_clock, PathGrid};
use crate::stats::{ks_one_sample, ks_one_sample_sided, EstimateReport, KsResult, SidedKs};
use crate::strip::discriminator_statistic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselPath {
    pub x0: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl BesselPath {
    pub fn as_grid(&self) -> PathGrid {
        PathGrid {
            times: self.times.clone(),
            values: self.values.clone(),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be positive")))
    }
}

/// One exact step of length `h` from `x`.
#[inline]
pub fn bessel3_step(rs: &mut RandomSource, x: f64, h: f64) -> f64 {
    let s = h.sqrt();
    let a = x + s * rs.standard_normal();
    let b = s * rs.standard_normal();
    let c = s * rs.standard_normal();
    (a * a + b * b + c * c).sqrt()
}

fn time_grid(dt: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    times[n] = horizon;
    times
}

/// Exact at every node: `X(t + dt) = |(X(t), 0, 0) + √dt · (g₁, g₂, g₃)|`.
/// The last step is shortened to end exactly at `horizon`.
pub fn simulate_bessel3(rs: &mut RandomSource, x0: f64, dt: f64, horizon: f64) -> Result<BesselPath> {
    check_positive("x0", x0)?;
    check_positive("dt", dt)?;
    check_positive("horizon", horizon)?;
    let times = time_grid(dt, horizon);
    let mut values = Vec::with_capacity(times.len());
    let mut x = x0;
    values.push(x);
    for w in times.windows(2) {
        x = bessel3_step(rs, x, w[1] - w[0]);
        values.push(x);
    }
    Ok(BesselPath { x0, dt, times, values })
}

/// Euler scheme for `dX = dB + (d − 1)/(2X) dt`, reflected at 0. Only for
/// cross-checks: the drift is singular at 0.
pub fn simulate_bessel_euler(rs: &mut RandomSource, x0: f64, dt: f64, horizon: f64, d: f64) -> Result<BesselPath> {
    check_positive("x0", x0)?;
    check_positive("dt", dt)?;
    check_positive("horizon", horizon)?;
    if !(d > 1.0) {
        return Err(invalid(format!("dimension {d} must exceed 1")));
    }
    let times = time_grid(dt, horizon);
    let mut values = Vec::with_capacity(times.len());
    let mut x = x0;
    values.push(x);
    for w in times.windows(2) {
        let h = w[1] - w[0];
        x = (x + h.sqrt() * rs.standard_normal() + 0.5 * (d - 1.0) / x * h).abs();
        if x == 0.0 {
            x = f64::MIN_POSITIVE;
        }
        values.push(x);
    }
    Ok(BesselPath { x0, dt, times, values })
}

fn u_levels(max: f64, du: f64) -> Vec<f64> {
    let n = (max / du + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * du).collect()
}

/// `Ĝ(u) = ln X(A⁻¹(u))` on the grid `u = 0, du, 2du, …` up to the total
/// clock `A(horizon)`, where `A(t) = ∫₀ᵗ X⁻²`.
pub fn intrinsic_log_path(path: &BesselPath, du: f64) -> Result<PathGrid> {
    check_positive("du", du)?;
    let grid = path.as_grid();
    let clock = additive_clock(&grid)?;
    if clock.max_clock() < du {
        return Err(Error::OutOfHorizon {
            level: du,
            horizon: clock.max_clock(),
        });
    }
    let levels = u_levels(clock.max_clock(), du);
    let times = clock.inverse_many(&levels)?;
    let mut values = Vec::with_capacity(times.len());
    let mut i = 0;
    for &t in &times {
        while i + 1 < grid.times.len() && grid.times[i + 1] < t {
            i += 1;
        }
        let x = if i + 1 < grid.times.len() && grid.times[i + 1] > grid.times[i] {
            let (t0, t1) = (grid.times[i], grid.times[i + 1]);
            let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            grid.values[i] + w * (grid.values[i + 1] - grid.values[i])
        } else {
            grid.values[i]
        };
        values.push(x.ln());
    }
    PathGrid::new(levels, values)
}

/// `Ĝ` simulated directly on the clock scale, for horizons where `X`
/// itself overflows. Each real-time step has length `eps · X²`, so the
/// clock advances by about `eps` per step; `ln X` is updated with the exact
/// norm step and the clock with the trapezoid rule. `Ĝ` is read off on
/// the grid `u = 0, du, …, u_max` by linear interpolation in the clock.
pub fn simulate_intrinsic_log(rs: &mut RandomSource, x0: f64, eps: f64, u_max: f64, du: f64) -> Result<PathGrid> {
    check_positive("x0", x0)?;
    check_positive("u_max", u_max)?;
    check_positive("du", du)?;
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(invalid(format!("clock step {eps} must lie in (0, 0.1]")));
    }
    let levels = u_levels(u_max, du);
    let mut values = Vec::with_capacity(levels.len());
    let s = eps.sqrt();
    let mut clock = 0.0f64;
    let mut g = x0.ln();
    values.push(g);
    let mut next = 1;
    while next < levels.len() {
        let a = 1.0 + s * rs.standard_normal();
        let b = s * rs.standard_normal();
        let c = s * rs.standard_normal();
        let dg = 0.5 * (a * a + b * b + c * c).ln();
        let dc = 0.5 * eps * (1.0 + (-2.0 * dg).exp());
        let (g1, c1) = (g + dg, clock + dc);
        while next < levels.len() && levels[next] <= c1 {
            let w = (levels[next] - clock) / dc;
            values.push(g + w * dg);
            next += 1;
        }
        g = g1;
        clock = c1;
    }
    PathGrid::new(levels, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselPathStats {
    pub stream: u64,
    /// Discriminator over the window.
    pub statistic: f64,
    /// `Ĝ(u)/u` at the end of the window.
    pub end_ratio: f64,
}

/// Discriminators `max Ĝ(u)/u` over the window for `replicas` clock-scale
/// paths from `x0 = 1`.
pub fn bessel_population(
    seed: u64,
    stream_offset: u64,
    replicas: u64,
    eps: f64,
    du: f64,
    window: (f64, f64),
) -> Result<Vec<BesselPathStats>> {
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let stream = stream_offset + i;
            let g = simulate_intrinsic_log(&mut RandomSource::new(seed, stream), 1.0, eps, window.1, du)?;
            let statistic = discriminator_statistic(g.points(), window)?;
            let (u, v) = g.points().last().expect("grid is nonempty");
            Ok(BesselPathStats {
                stream,
                statistic,
                end_ratio: v / u,
            })
        })
        .collect()
}

/// The all-time infimum of Bessel-3 from `x0`, which is `x0 · U`.
#[inline]
pub fn sample_bessel_min_exact(rs: &mut RandomSource, x0: f64) -> Result<f64> {
    check_positive("x0", x0)?;
    Ok(x0 * rs.uniform())
}

/// Draws per stream in the parallel samplers; fixed so that results do not
/// depend on the number of threads.
pub const CHUNK: u64 = 1 << 16;

fn chunked<T, F>(seed: u64, n: u64, init: T, f: F, merge: fn(T, T) -> T) -> T
where
    T: Clone + Send + Sync,
    F: Fn(&mut RandomSource, u64, &mut T) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rs = RandomSource::new(seed, c);
            let mut acc = init.clone();
            let len = CHUNK.min(n - c * CHUNK);
            f(&mut rs, len, &mut acc);
            acc
        })
        .reduce(|| init.clone(), merge)
}

/// `n` exact minima from `x0 = 1`, in stream order.
pub fn exact_min_sample(seed: u64, n: u64) -> Vec<f64> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rs = RandomSource::new(seed, c);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(move |_| rs.uniform())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinProbability {
    pub a: f64,
    pub hits: u64,
    /// `P̂(min < a)` from `x0 = 1`.
    pub estimate: EstimateReport,
}

pub fn min_probabilities(seed: u64, levels: &[f64], n: u64) -> Result<Vec<MinProbability>> {
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    let counts = chunked(
        seed,
        n,
        vec![0u64; levels.len()],
        |rs, len, acc| {
            for _ in 0..len {
                let m = rs.uniform();
                for (c, &a) in acc.iter_mut().zip(levels) {
                    *c += (m < a) as u64;
                }
            }
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let nf = n as f64;
    Ok(levels
        .iter()
        .zip(counts)
        .map(|(&a, hits)| {
            let p = hits as f64 / nf;
            MinProbability {
                a,
                hits,
                estimate: EstimateReport::new(p, (p * (1.0 - p) / nf).sqrt(), n, "binomial proportion").with_seeds(
                    seed,
                    0,
                    n.div_ceil(CHUNK),
                ),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselTailCell {
    pub u: f64,
    pub hits: u64,
    pub n: u64,
    /// `(1/u) ln P̂(inf ln X < −u)` with a delta-method standard error;
    /// `None` when no draw fell below `e^{−u}`.
    pub log_rate: Option<EstimateReport>,
}

impl BesselTailCell {
    pub fn zero_count(&self) -> bool {
        self.hits == 0
    }
}

pub fn bessel_tail_check(seed: u64, u_grid: &[f64], n: u64) -> Result<Vec<BesselTailCell>> {
    if u_grid.iter().any(|&u| !(u > 0.0)) {
        return Err(invalid("tail levels must be positive"));
    }
    let levels: Vec<f64> = u_grid.iter().map(|u| (-u).exp()).collect();
    let probs = min_probabilities(seed, &levels, n)?;
    Ok(u_grid
        .iter()
        .zip(probs)
        .map(|(&u, p)| {
            let est = p.estimate.estimate;
            BesselTailCell {
                u,
                hits: p.hits,
                n,
                log_rate: (p.hits > 0).then(|| {
                    EstimateReport::new(
                        est.ln() / u,
                        p.estimate.stderr / (u * est),
                        n,
                        "log binomial proportion / u",
                    )
                    .with_seeds(seed, 0, n.div_ceil(CHUNK))
                    .with_extra("survival", est)
                }),
            }
        })
        .collect())
}

/// Minimum of a Bessel-3 bridge from `a` to `b` over time `h`: a Brownian
/// bridge minimum conditioned to stay positive.
#[inline]
pub fn bridge_min(rs: &mut RandomSource, a: f64, b: f64, h: f64) -> f64 {
    let k = 2.0 * a * b / h;
    let e0 = if k > crate::kernels::UNDERFLOW_EXPONENT {
        0.0
    } else {
        (-k).exp()
    };
    let e = e0 + rs.uniform() * (1.0 - e0);
    // Smaller root of (a − m)(b − m) = −(h/2) ln e, via the product of roots.
    let c = (a * b + 0.5 * h * e.ln()).max(0.0);
    let big = 0.5 * ((a + b) + ((a - b) * (a - b) - 2.0 * h * e.ln()).sqrt());
    (c / big).min(a.min(b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Running minimum including within-step bridge minima.
    pub running_min: Vec<f64>,
    /// Running minimum of the grid values only.
    pub grid_min: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinRun {
    pub bridge_min: f64,
    pub grid_min: f64,
    pub end_value: f64,
    pub steps: u64,
}

/// Runs Bessel-3 from `x0` with steps `max(dt, 0.01 X²)` until the chance
/// of a new minimum, `min/X`, is below `stop_ratio`.
pub fn run_to_certified_min(
    rs: &mut RandomSource,
    x0: f64,
    dt: f64,
    stop_ratio: f64,
    mut record: Option<&mut MinPath>,
) -> Result<MinRun> {
    check_positive("x0", x0)?;
    check_positive("dt", dt)?;
    if !(stop_ratio > 0.0 && stop_ratio < 1.0) {
        return Err(invalid(format!("stop ratio {stop_ratio} must lie in (0, 1)")));
    }
    let (mut x, mut t) = (x0, 0.0);
    let (mut m, mut gm) = (x0, x0);
    let mut steps = 0u64;
    if let Some(p) = record.as_deref_mut() {
        *p = MinPath {
            times: vec![0.0],
            values: vec![x0],
            running_min: vec![x0],
            grid_min: vec![x0],
        };
    }
    while m / x >= stop_ratio {
        let h = dt.max(0.01 * x * x);
        let next = bessel3_step(rs, x, h);
        m = m.min(bridge_min(rs, x, next, h));
        gm = gm.min(next);
        x = next;
        t += h;
        steps += 1;
        if let Some(p) = record.as_deref_mut() {
            p.times.push(t);
            p.values.push(x);
            p.running_min.push(m);
            p.grid_min.push(gm);
        }
    }
    Ok(MinRun {
        bridge_min: m,
        grid_min: gm,
        end_value: x,
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMinReport {
    pub n: u64,
    pub dt: f64,
    pub stop_ratio: f64,
    /// Bridge-corrected path minima against `U(0, 1)`.
    pub bridge: KsResult,
    /// Grid-only minima against `U(0, 1)`; `d_minus` measures how far they
    /// sit above the exact law.
    pub grid: SidedKs,
    pub mean_steps: f64,
}

impl TruncatedMinReport {
    pub fn as_report(&self, seed: u64) -> EstimateReport {
        EstimateReport::new(
            self.bridge.statistic,
            f64::NAN,
            self.n,
            "KS distance of path minima to the exact law",
        )
        .with_seeds(seed, 0, self.n)
        .with_extra("p_value", self.bridge.p_value)
        .with_extra("grid_d_minus", self.grid.d_minus)
        .with_extra("grid_p_minus", self.grid.p_minus)
        .with_extra("mean_steps", self.mean_steps)
    }
}

/// Path-level minima from `x0 = 1` (replica `i` on stream `i`) compared
/// with the exact law.
pub fn truncated_min_vs_exact(seed: u64, dt: f64, n: u64, stop_ratio: f64) -> Result<TruncatedMinReport> {
    if n < 2 {
        return Err(invalid("need at least two replicas"));
    }
    let runs: Vec<MinRun> = (0..n)
        .into_par_iter()
        .map(|i| run_to_certified_min(&mut RandomSource::new(seed, i), 1.0, dt, stop_ratio, None))
        .collect::<Result<_>>()?;
    let uniform = |x: f64| x.clamp(0.0, 1.0);
    let bridge: Vec<f64> = runs.iter().map(|r| r.bridge_min).collect();
    let grid: Vec<f64> = runs.iter().map(|r| r.grid_min).collect();
    Ok(TruncatedMinReport {
        n,
        dt,
        stop_ratio,
        bridge: ks_one_sample(&bridge, uniform)?,
        grid: ks_one_sample_sided(&grid, uniform)?,
        mean_steps: runs.iter().map(|r| r.steps as f64).sum::<f64>() / n as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicRow {
    pub u: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

pub fn path_rows(path: &BesselPath) -> Vec<PathRow> {
    path.times
        .iter()
        .zip(&path.values)
        .map(|(&t, &x)| PathRow { t, x })
        .collect()
}

pub fn intrinsic_rows(g: &PathGrid) -> Vec<IntrinsicRow> {
    g.points().map(|(u, g)| IntrinsicRow { u, g }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::bessel_min_cdf;
    use crate::analytic::quadrature::{integrate, integrate_tail, QuadratureSpec};
    use crate::stats::{ks_two_sample, mean_ci};
    use std::f64::consts::PI;

    /// Mean of `|(x0, 0, 0) + B_t|` from the radial density of a shifted
    /// 3-dimensional Gaussian.
    fn norm_mean(x0: f64, t: f64) -> f64 {
        let s = t.sqrt();
        let density = |r: f64| {
            r / (x0 * s * (2.0 * PI).sqrt())
                * ((-(r - x0).powi(2) / (2.0 * t)).exp() - (-(r + x0).powi(2) / (2.0 * t)).exp())
        };
        let spec = QuadratureSpec::default();
        integrate(|r| r * density(r), 0.0, x0 + 1.0, &spec).unwrap().value
            + integrate_tail(|r| r * density(r), x0 + 1.0, &spec).unwrap().value
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rs = RandomSource::new(1, 0);
        assert!(simulate_bessel3(&mut rs, 0.0, 0.1, 1.0).is_err());
        assert!(simulate_bessel3(&mut rs, 1.0, 0.0, 1.0).is_err());
        assert!(simulate_bessel_euler(&mut rs, 1.0, 0.1, 1.0, 1.0).is_err());
        assert!(sample_bessel_min_exact(&mut rs, -1.0).is_err());
        assert!(bessel_tail_check(1, &[0.0], 10).is_err());
    }

    #[test]
    fn grid_and_positivity() {
        let p = simulate_bessel3(&mut RandomSource::new(2, 0), 0.3, 0.03, 1.0).unwrap();
        assert_eq!(p.values[0], 0.3);
        assert_eq!(p.horizon(), 1.0);
        assert!(p.values.iter().all(|&x| x > 0.0));
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn marginal_mean_matches_quadrature() {
        let oracle = norm_mean(1.0, 1.0);
        let xs: Vec<f64> = (0..100_000)
            .map(|i| {
                *simulate_bessel3(&mut RandomSource::new(3, i), 1.0, 0.25, 1.0)
                    .unwrap()
                    .values
                    .last()
                    .unwrap()
            })
            .collect();
        let m = mean_ci(&xs).unwrap();
        assert!((m.estimate - oracle).abs() < 3.0 * m.stderr, "{m:?} vs {oracle}");
    }

    #[test]
    fn euler_agrees_with_exact() {
        let end = |p: BesselPath| *p.values.last().unwrap();
        let exact: Vec<f64> = (0..3000)
            .map(|i| end(simulate_bessel3(&mut RandomSource::new(4, i), 1.0, 1e-3, 1.0).unwrap()))
            .collect();
        let euler: Vec<f64> = (0..3000)
            .map(|i| end(simulate_bessel_euler(&mut RandomSource::new(5, i), 1.0, 1e-3, 1.0, 3.0).unwrap()))
            .collect();
        let ks = ks_two_sample(&exact, &euler).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn brownian_scaling() {
        let end = |seed, x0: f64, dt: f64, t: f64| -> Vec<f64> {
            (0..3000)
                .map(|i| {
                    *simulate_bessel3(&mut RandomSource::new(seed, i), x0, dt, t)
                        .unwrap()
                        .values
                        .last()
                        .unwrap()
                })
                .collect()
        };
        let a = end(6, 1.0, 0.1, 1.0);
        let b: Vec<f64> = end(7, 2.0, 0.4, 4.0).iter().map(|x| x / 2.0).collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn intrinsic_path_from_real_time() {
        let p = simulate_bessel3(&mut RandomSource::new(8, 0), 1.0, 1e-3, 20.0).unwrap();
        let g = intrinsic_log_path(&p, 0.01).unwrap();
        assert_eq!(g.values[0], 0.0);
        assert!(g.times.windows(2).all(|w| (w[1] - w[0] - 0.01).abs() < 1e-9));
        let short = simulate_bessel3(&mut RandomSource::new(8, 1), 100.0, 1e-3, 1e-3).unwrap();
        assert!(matches!(
            intrinsic_log_path(&short, 0.01),
            Err(Error::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn real_time_and_clock_scale_agree() {
        let u = 1.0;
        let real: Vec<f64> = (0..1500)
            .map(|i| {
                let p = simulate_bessel3(&mut RandomSource::new(9, i), 1.0, 1e-2, 300.0).unwrap();
                let g = intrinsic_log_path(&p, 0.01).unwrap();
                g.values[100]
            })
            .collect();
        let clock: Vec<f64> = (0..1500)
            .map(|i| {
                let g = simulate_intrinsic_log(&mut RandomSource::new(10, i), 1.0, 1e-3, u, 0.01).unwrap();
                *g.values.last().unwrap()
            })
            .collect();
        let ks = ks_two_sample(&real, &clock).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn clock_scale_drift_and_variance() {
        let mut incr = Vec::new();
        let mut ends = Vec::new();
        for i in 0..40 {
            let g = simulate_intrinsic_log(&mut RandomSource::new(11, i), 1.0, 2e-3, 50.0, 0.01).unwrap();
            assert_eq!(g.values[0], 0.0);
            assert_eq!(g.len(), 5001);
            for k in 0..50 {
                incr.push(g.values[(k + 1) * 100] - g.values[k * 100] - 0.5);
            }
            ends.push(g.values[5000] / 50.0);
        }
        let m = mean_ci(&incr).unwrap();
        assert!(m.estimate.abs() < 3.0 * m.stderr, "{m:?}");
        let var = incr.iter().map(|x| (x - m.estimate).powi(2)).sum::<f64>() / (incr.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.12, "{var}");
        let d = mean_ci(&ends).unwrap();
        assert!((d.estimate - 0.5).abs() < 3.0 * d.stderr, "{d:?}");
    }

    #[test]
    fn bessel_population_near_one_half() {
        let pop = bessel_population(19, 0, 8, 1e-2, 0.01, (200.0, 400.0)).unwrap();
        let m = mean_ci(&pop.iter().map(|p| p.statistic).collect::<Vec<_>>()).unwrap();
        assert!((m.estimate - 0.5).abs() < 0.08, "{m:?}");
        assert!(pop.iter().all(|p| p.statistic >= p.end_ratio));
    }

    #[test]
    fn exact_min_law() {
        let probs = min_probabilities(12, &[0.1, 0.5, 0.9], 200_000).unwrap();
        for p in &probs {
            assert!((p.estimate.estimate - p.a).abs() < 3.5 * p.estimate.stderr, "{p:?}");
        }
        let mut rs = RandomSource::new(13, 0);
        for _ in 0..1000 {
            assert!(sample_bessel_min_exact(&mut rs, 3.0).unwrap() < 3.0);
        }
        let cells = bessel_tail_check(14, &[1e-6, 1.0, 2.0, 30.0], 200_000).unwrap();
        assert!(cells[0].log_rate.as_ref().unwrap().extra("survival").unwrap() > 0.99);
        let r1 = cells[1].log_rate.as_ref().unwrap();
        assert!((r1.estimate + 1.0).abs() < 4.0 * r1.stderr, "{r1:?}");
        assert!(cells[3].zero_count() && cells[3].log_rate.is_none());
    }

    #[test]
    fn sampling_is_thread_count_independent() {
        let a = exact_min_sample(15, 3 * CHUNK + 17);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| exact_min_sample(15, 3 * CHUNK + 17));
        assert_eq!(a, b);
        let mut rs = RandomSource::new(15, 1);
        let _ = (0..CHUNK).map(|_| rs.uniform()).count();
        assert_eq!(a[(2 * CHUNK) as usize], RandomSource::new(15, 2).uniform());
    }

    #[test]
    fn bridge_min_law() {
        // The bridge minimum is below m with probability
        // (e^{−2(a−m)(b−m)/h} − e^{−2ab/h}) / (1 − e^{−2ab/h}).
        let (a, b, h) = (0.4, 0.7, 0.5);
        let mut rs = RandomSource::new(16, 0);
        let mins: Vec<f64> = (0..20_000).map(|_| bridge_min(&mut rs, a, b, h)).collect();
        assert!(mins.iter().all(|&m| m > 0.0 && m <= a));
        let e0 = (-2.0 * a * b / h).exp();
        let cdf = |m: f64| {
            if m >= a {
                1.0
            } else {
                (((-2.0 * (a - m) * (b - m) / h).exp() - e0) / (1.0 - e0)).max(0.0)
            }
        };
        let ks = ks_one_sample(&mins, cdf).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn certified_minimum() {
        let mut path = MinPath {
            times: vec![],
            values: vec![],
            running_min: vec![],
            grid_min: vec![],
        };
        let run = run_to_certified_min(&mut RandomSource::new(17, 0), 1.0, 1e-4, 0.01, Some(&mut path)).unwrap();
        assert!(path.running_min.windows(2).all(|w| w[1] <= w[0]));
        assert!(path.running_min.iter().zip(&path.grid_min).all(|(a, b)| a <= b));
        assert!(run.bridge_min / run.end_value < 0.01);
        assert!(bessel_min_cdf(run.bridge_min, run.end_value).unwrap() < 0.01);

        let report = truncated_min_vs_exact(18, 1e-3, 2000, 0.01).unwrap();
        assert!(report.bridge.p_value > 0.01, "{report:?}");
        assert!(report.grid.p_minus < report.bridge.p_value);
    }
}
