//! The spine at branch times: `ln J(T_n)` is a random walk with step
//! `ln ξ`, equivalently `ln √2 + K` where `K` is a Brownian coordinate read
//! at an independent strip exit time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::LN_SQRT2;
use crate::error::{invalid, Error, Result};
use crate::kernels::{sample_step_factor, sample_strip_exit, RandomSource};
use crate::stats::{EstimateReport, TailCell};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SkeletonMethod {
    /// Multiply by an exact step-factor draw.
    #[default]
    XiDirect,
    /// Add `ln √2` plus a centered Gaussian with variance equal to a strip
    /// exit time.
    RenewalStep,
}

/// `Y_0, …, Y_n` in log space; `Y_n` itself overflows after a few thousand
/// steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonChain {
    pub log_values: Vec<f64>,
    pub log_increments: Vec<f64>,
    pub method: SkeletonMethod,
}

impl SkeletonChain {
    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_values.iter().map(|v| v.exp())
    }

    /// The chain started from `y0` instead of 1.
    pub fn shifted(&self, y0: f64) -> Result<Self> {
        if !(y0 > 0.0) {
            return Err(invalid(format!("skeleton start {y0} must be positive")));
        }
        let shift = y0.ln();
        Ok(Self {
            log_values: self.log_values.iter().map(|v| v + shift).collect(),
            log_increments: self.log_increments.clone(),
            method: self.method,
        })
    }
}

#[inline]
pub fn skeleton_step(rs: &mut RandomSource, method: SkeletonMethod) -> f64 {
    match method {
        SkeletonMethod::XiDirect => sample_step_factor(rs).ln(),
        SkeletonMethod::RenewalStep => {
            let r = sample_strip_exit(rs).duration;
            LN_SQRT2 + r.sqrt() * rs.standard_normal()
        }
    }
}

pub fn simulate_skeleton(rs: &mut RandomSource, n: usize, method: SkeletonMethod) -> Result<SkeletonChain> {
    if n == 0 {
        return Err(invalid("skeleton length must be at least 1"));
    }
    let mut log_values = Vec::with_capacity(n + 1);
    let mut log_increments = Vec::with_capacity(n);
    let mut current = 0.0;
    log_values.push(current);
    for _ in 0..n {
        let step = skeleton_step(rs, method);
        current += step;
        log_increments.push(step);
        log_values.push(current);
    }
    Ok(SkeletonChain {
        log_values,
        log_increments,
        method,
    })
}

/// Step budget for [`min_log_until_barrier`].
pub const MIN_STEP_BUDGET: u64 = 10_000_000;

/// Runs the log-skeleton from 0 until it exceeds `barrier` and returns its
/// running minimum. Truncation misses minima set after the barrier, which
/// changes `P(min < −t)` by a relative factor of order `e^{−(t+barrier)}`.
pub fn min_log_until_barrier(rs: &mut RandomSource, barrier: f64) -> Result<f64> {
    min_log_until_barrier_with(rs, barrier, SkeletonMethod::XiDirect)
}

pub fn min_log_until_barrier_with(rs: &mut RandomSource, barrier: f64, method: SkeletonMethod) -> Result<f64> {
    if !(barrier > 0.0) || !barrier.is_finite() {
        return Err(invalid(format!("barrier {barrier} must be positive")));
    }
    let mut level = 0.0f64;
    let mut min = 0.0f64;
    let mut steps = 0u64;
    while level <= barrier {
        if steps >= MIN_STEP_BUDGET {
            return Err(Error::BudgetExceeded(MIN_STEP_BUDGET));
        }
        level += skeleton_step(rs, method);
        min = min.min(level);
        steps += 1;
    }
    Ok(min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub hits: u64,
    /// `P(min < −t)` with its binomial standard error.
    pub survival: EstimateReport,
    /// `e^t · P(min < −t)`.
    pub c_hat: f64,
    pub c_hat_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub seed: u64,
    pub replicas: u64,
    pub barrier: f64,
    pub method: SkeletonMethod,
    pub points: Vec<TailPoint>,
}

impl TailCurve {
    pub fn cells(&self) -> Vec<TailCell> {
        self.points
            .iter()
            .map(|p| TailCell {
                t: p.t,
                survival: p.survival.estimate,
                stderr: p.survival.stderr,
                hits: p.hits,
            })
            .collect()
    }

    pub fn point(&self, t: f64) -> Option<&TailPoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

/// Empirical tail of the log-skeleton minimum. Replica `i` uses stream `i`
/// of `seed`; per-replica hit vectors are merged by addition, so the result
/// does not depend on scheduling.
pub fn tail_curve(seed: u64, replicas: u64, t_grid: &[f64], barrier: f64) -> Result<TailCurve> {
    tail_curve_with(seed, replicas, t_grid, barrier, SkeletonMethod::XiDirect)
}

pub fn tail_curve_with(
    seed: u64,
    replicas: u64,
    t_grid: &[f64],
    barrier: f64,
    method: SkeletonMethod,
) -> Result<TailCurve> {
    if replicas == 0 {
        return Err(invalid("replicas must be positive"));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_grid[0] >= 0.0) {
        return Err(invalid("t grid must be nonempty, nonnegative and increasing"));
    }
    let t_max = *t_grid.last().unwrap();
    if t_max + 10.0 > barrier {
        return Err(invalid(format!(
            "barrier {barrier} must be at least max(t) + 10 = {}",
            t_max + 10.0
        )));
    }
    let k = t_grid.len();
    let counts = (0..replicas)
        .into_par_iter()
        .try_fold(
            || vec![0u64; k],
            |mut acc, r| {
                let mut rs = RandomSource::new(seed, r);
                let m = min_log_until_barrier_with(&mut rs, barrier, method)?;
                for (c, &t) in acc.iter_mut().zip(t_grid) {
                    // At t = 0 the event is min ≤ 0, which always holds.
                    if m < -t || (t == 0.0 && m <= 0.0) {
                        *c += 1;
                    }
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; k],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    let n = replicas as f64;
    let points = t_grid
        .iter()
        .zip(&counts)
        .map(|(&t, &hits)| {
            let p = hits as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt();
            TailPoint {
                t,
                hits,
                survival: EstimateReport::new(p, se, replicas, "binomial proportion")
                    .with_seeds(seed, 0, replicas)
                    .with_extra("barrier", barrier),
                c_hat: t.exp() * p,
                c_hat_se: t.exp() * se,
            }
        })
        .collect();
    Ok(TailCurve {
        seed,
        replicas,
        barrier,
        method,
        points,
    })
}
