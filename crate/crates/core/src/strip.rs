//! The log-strip picture on the `|V|` clock: `Z = (Z_1, Z_2)` is a planar
//! Brownian motion in `{0 < Z_2 < π/2}` which, whenever `Z_2` reaches a
//! wall, jumps to `(Z_1 + ln √2, π/4)`.
//!
//! `Z_2` is stepped on a grid with bridge-corrected detection of both walls.
//! `Z_1` is independent of `Z_2` between jumps, so it is only sampled, with
//! exact Gaussian increments, where it is needed: at jumps and at batch
//! boundaries.
//!
//! Along the way the simulator accumulates the spine's extra clock. On an
//! excursion that leaves through the top wall the spine is `|V| sin Z_2`,
//! otherwise `|V| cos Z_2`, so the spine clock runs at rate `1/sin² Z_2` or
//! `1/cos² Z_2` relative to the `|V|` clock. Both candidate excess integrals
//! `∫ cot² Z_2` and `∫ tan² Z_2` are carried through each excursion and the
//! one matching the exit side is kept.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::strip_exit::STRIP_WIDTH;
use crate::analytic::LN_SQRT2;
use crate::error::{invalid, Error, Result};
use crate::kernels::{bernoulli, crossing_probability, ExitSide, RandomSource};
use crate::output::SCHEMA_VERSION;
use crate::stats::{mean_ci, EstimateReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripConfig {
    pub u_max: f64,
    pub delta: f64,
    /// Apply the `ln √2` jump of `Z_1` at each exit.
    pub jumps: bool,
    pub track_excess: bool,
    /// Stop at the first jump where the spine clock reaches this level.
    pub stop_at_spine_clock: Option<f64>,
    pub batches: usize,
    /// Distance from a wall below which steps are split.
    pub wall_zone: f64,
    pub wall_substeps: u32,
    /// Upper bound on `cot²` / `tan²` at a single node. Only hits on the
    /// integral that is kept for an excursion are counted.
    pub weight_cap: f64,
}

impl StripConfig {
    pub fn new(u_max: f64, delta: f64) -> Self {
        Self {
            u_max,
            delta,
            jumps: true,
            track_excess: true,
            stop_at_spine_clock: None,
            batches: 20,
            wall_zone: 0.05,
            wall_substeps: 32,
            weight_cap: 1e6,
        }
    }

    pub fn without_jumps(mut self) -> Self {
        self.jumps = false;
        self
    }

    pub fn without_excess(mut self) -> Self {
        self.track_excess = false;
        self
    }

    pub fn stopping_at_spine_clock(mut self, level: f64) -> Self {
        self.stop_at_spine_clock = Some(level);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(invalid(format!("u_max = {} must be positive", self.u_max)));
        }
        if !(self.delta > 0.0 && self.delta < 0.1) {
            return Err(invalid(format!("delta = {} must lie in (0, 0.1)", self.delta)));
        }
        if self.batches < 2 {
            return Err(invalid("at least two batches are needed"));
        }
        if !(self.wall_zone >= 0.0 && self.wall_zone < FRAC_PI_4) {
            return Err(invalid(format!("wall zone {} must lie in [0, π/4)", self.wall_zone)));
        }
        if self.wall_substeps == 0 {
            return Err(invalid("wall_substeps must be positive"));
        }
        if !(self.weight_cap > 1.0) {
            return Err(invalid(format!("weight cap {} must exceed 1", self.weight_cap)));
        }
        if let Some(level) = self.stop_at_spine_clock {
            if !(level > 0.0) || !self.track_excess {
                return Err(invalid(
                    "stopping on the spine clock needs a positive level and excess tracking",
                ));
            }
        }
        Ok(())
    }
}

/// Summary of one strip run. Per-step values of `Z` are not kept: at the
/// default step a run to `u = 10⁴` has 10⁸ steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripTrace {
    pub seed: u64,
    pub stream: u64,
    pub config: StripConfig,
    /// Clock time at which the run ended (`u_max` unless stopped early).
    pub horizon: f64,
    /// `R_1 < R_2 < …`
    pub jump_times: Vec<f64>,
    pub jump_sides: Vec<ExitSide>,
    /// `Z_1(R_k)` just after the jump.
    pub z1_at_jumps: Vec<f64>,
    /// Excess spine clock `∫ (w(Z_2) − 1)` over each completed excursion.
    pub excess: Vec<f64>,
    pub batch_times: Vec<f64>,
    pub batch_z1: Vec<f64>,
    pub z1_end: f64,
    pub z2_end: f64,
    pub steps: u64,
    pub wall_steps: u64,
    pub cap_hits: u64,
}

impl StripTrace {
    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// Durations `R_k − R_{k−1}` with `R_0 = 0`.
    pub fn inter_jump_times(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.jump_times
            .iter()
            .map(|&r| {
                let d = r - prev;
                prev = r;
                d
            })
            .collect()
    }

    pub fn total_excess(&self) -> f64 {
        self.excess.iter().sum()
    }

    pub fn cap_hit_rate(&self) -> f64 {
        let n = self.steps + self.wall_steps;
        if n == 0 {
            0.0
        } else {
            self.cap_hits as f64 / n as f64
        }
    }
}

#[inline]
fn clamp_weight(w: f64, cap: f64, hits: &mut u64) -> f64 {
    if w > cap {
        *hits += 1;
        cap
    } else {
        w
    }
}

struct Z1 {
    value: f64,
    time: f64,
}

impl Z1 {
    #[inline]
    fn advance(&mut self, rs: &mut RandomSource, to: f64) {
        if to > self.time {
            self.value += (to - self.time).sqrt() * rs.standard_normal();
            self.time = to;
        }
    }
}

pub fn simulate_strip(rs: &mut RandomSource, u_max: f64, delta: f64) -> Result<StripTrace> {
    simulate_strip_with(rs, &StripConfig::new(u_max, delta))
}

pub fn simulate_strip_with(rs: &mut RandomSource, config: &StripConfig) -> Result<StripTrace> {
    config.validate()?;
    let expected_jumps = (config.u_max / (FRAC_PI_4 * FRAC_PI_4) * 1.1) as usize + 16;
    let mut trace = StripTrace {
        seed: rs.seed(),
        stream: rs.stream_id(),
        config: config.clone(),
        horizon: 0.0,
        jump_times: Vec::with_capacity(expected_jumps),
        jump_sides: Vec::with_capacity(expected_jumps),
        z1_at_jumps: Vec::with_capacity(expected_jumps),
        excess: Vec::with_capacity(if config.track_excess { expected_jumps } else { 0 }),
        batch_times: Vec::with_capacity(config.batches + 1),
        batch_z1: Vec::with_capacity(config.batches + 1),
        z1_end: 0.0,
        z2_end: 0.0,
        steps: 0,
        wall_steps: 0,
        cap_hits: 0,
    };
    let boundaries: Vec<f64> = (0..=config.batches)
        .map(|b| config.u_max * b as f64 / config.batches as f64)
        .collect();
    let mut next_boundary = 1;
    let mut z1 = Z1 {
        value: LN_SQRT2,
        time: 0.0,
    };
    trace.batch_times.push(0.0);
    trace.batch_z1.push(z1.value);

    let fine = config.delta / config.wall_substeps as f64;
    let (sd, fine_sd) = (config.delta.sqrt(), fine.sqrt());
    let lo_zone = config.wall_zone;
    let hi_zone = STRIP_WIDTH - config.wall_zone;
    let cap = config.weight_cap;

    let mut u = 0.0f64;
    let mut z2 = FRAC_PI_4;
    let mut tan2 = 1.0f64;
    let mut cot2 = 1.0f64;
    let mut int_top = 0.0f64;
    let mut int_bot = 0.0f64;
    let mut hits_top = 0u64;
    let mut hits_bot = 0u64;
    let mut excess_total = 0.0f64;
    let mut spine_clock = 0.0f64;

    while u < config.u_max {
        let near = z2 < lo_zone || z2 > hi_zone;
        let (mut h, mut s) = if near { (fine, fine_sd) } else { (config.delta, sd) };
        if u + h > config.u_max {
            h = config.u_max - u;
            s = h.sqrt();
        }
        if near {
            trace.wall_steps += 1;
        } else {
            trace.steps += 1;
        }
        let next = z2 + s * rs.standard_normal();
        let exit = if bernoulli(rs, crossing_probability(z2, next, h)) {
            Some(ExitSide::Bottom)
        } else if bernoulli(rs, crossing_probability(STRIP_WIDTH - z2, STRIP_WIDTH - next, h)) {
            Some(ExitSide::Top)
        } else {
            None
        };
        u += h;
        if u > config.u_max {
            u = config.u_max;
        }
        let Some(side) = exit else {
            if config.track_excess {
                let t = next.tan();
                let nt2 = clamp_weight(t * t, cap, &mut hits_bot);
                let nc2 = clamp_weight(1.0 / (t * t), cap, &mut hits_top);
                int_bot += 0.5 * h * (tan2 + nt2);
                int_top += 0.5 * h * (cot2 + nc2);
                tan2 = nt2;
                cot2 = nc2;
            }
            z2 = next;
            while next_boundary < boundaries.len() && boundaries[next_boundary] <= u {
                z1.advance(rs, boundaries[next_boundary]);
                trace.batch_times.push(boundaries[next_boundary]);
                trace.batch_z1.push(z1.value);
                next_boundary += 1;
            }
            continue;
        };
        while next_boundary < boundaries.len() && boundaries[next_boundary] < u {
            z1.advance(rs, boundaries[next_boundary]);
            trace.batch_times.push(boundaries[next_boundary]);
            trace.batch_z1.push(z1.value);
            next_boundary += 1;
        }
        z1.advance(rs, u);
        if config.jumps {
            z1.value += LN_SQRT2;
        }
        trace.jump_times.push(u);
        trace.jump_sides.push(side);
        trace.z1_at_jumps.push(z1.value);
        if config.track_excess {
            let (e, hits) = match side {
                ExitSide::Top => (int_top, hits_top),
                ExitSide::Bottom => (int_bot, hits_bot),
            };
            trace.cap_hits += hits;
            hits_top = 0;
            hits_bot = 0;
            trace.excess.push(e);
            excess_total += e;
            spine_clock = u + excess_total;
            int_top = 0.0;
            int_bot = 0.0;
        }
        z2 = FRAC_PI_4;
        tan2 = 1.0;
        cot2 = 1.0;
        while next_boundary < boundaries.len() && boundaries[next_boundary] <= u {
            z1.advance(rs, boundaries[next_boundary]);
            trace.batch_times.push(boundaries[next_boundary]);
            trace.batch_z1.push(z1.value);
            next_boundary += 1;
        }
        if let Some(level) = config.stop_at_spine_clock {
            if spine_clock >= level {
                break;
            }
        }
    }
    z1.advance(rs, u);
    trace.horizon = u;
    trace.z1_end = z1.value;
    trace.z2_end = z2;
    Ok(trace)
}

/// `Z_1(u_max)/u_max` with a standard error from the batch means of the
/// `Z_1` increments.
pub fn renewal_drift_estimate(trace: &StripTrace) -> Result<EstimateReport> {
    if trace.horizon < 100.0 {
        return Err(Error::InsufficientData(format!(
            "drift estimate needs a horizon of at least 100, got {}",
            trace.horizon
        )));
    }
    let rates: Vec<f64> = trace
        .batch_times
        .windows(2)
        .zip(trace.batch_z1.windows(2))
        .map(|(t, z)| (z[1] - z[0]) / (t[1] - t[0]))
        .collect();
    if rates.len() < 2 {
        return Err(Error::InsufficientData("fewer than two complete batches".into()));
    }
    let batch = mean_ci(&rates)?;
    Ok(EstimateReport::new(
        trace.z1_end / trace.horizon,
        batch.stderr,
        trace.jump_count() as u64,
        format!("Z1(u)/u with {} batch means", rates.len()),
    )
    .with_seeds(trace.seed, trace.stream, trace.stream + 1)
    .with_extra("u_max", trace.horizon)
    .with_extra("batch_mean", batch.estimate))
}

/// The spine at its `n`-th branch, seen on the strip clock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpineCheckpoint {
    pub n: usize,
    /// `ln J(T_n)`.
    #[serde(rename = "logJ_n")]
    pub log_j: f64,
    /// `R_n`, the `|V|` clock at the branch.
    #[serde(rename = "r_n")]
    pub r: f64,
    /// The spine's own clock at the branch.
    #[serde(rename = "h_n")]
    pub h: f64,
}

impl SpineCheckpoint {
    pub fn ratio_r(&self) -> f64 {
        self.log_j / self.r
    }

    pub fn ratio_h(&self) -> f64 {
        self.log_j / self.h
    }
}

pub fn spine_checkpoints(trace: &StripTrace) -> Result<Vec<SpineCheckpoint>> {
    if trace.jump_times.is_empty() {
        return Err(Error::InsufficientData("trace has no jumps".into()));
    }
    if !trace.config.track_excess {
        return Err(invalid("spine checkpoints need a trace with excess tracking"));
    }
    let mut excess = 0.0;
    Ok(trace
        .jump_times
        .iter()
        .zip(&trace.z1_at_jumps)
        .zip(&trace.excess)
        .enumerate()
        .map(|(i, ((&r, &z1), &e))| {
            excess += e;
            SpineCheckpoint {
                n: i + 1,
                log_j: z1 - LN_SQRT2,
                r,
                h: r + excess,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub n: usize,
    pub r_n: f64,
    pub h_n: f64,
    #[serde(rename = "logJ_n")]
    pub log_j_n: f64,
    pub ratio_r: f64,
    pub ratio_h: f64,
}

pub fn checkpoint_rows(checkpoints: &[SpineCheckpoint]) -> Vec<CheckpointRow> {
    checkpoints
        .iter()
        .map(|c| CheckpointRow {
            n: c.n,
            r_n: c.r,
            h_n: c.h,
            log_j_n: c.log_j,
            ratio_r: c.ratio_r(),
            ratio_h: c.ratio_h(),
        })
        .collect()
}

/// `max value/u` over the points `(u, value)` with `u` in `[lo, hi]`.
pub fn discriminator_statistic(points: impl IntoIterator<Item = (f64, f64)>, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo) {
        return Err(invalid(format!("window [{lo}, {hi}] must be positive and ordered")));
    }
    points
        .into_iter()
        .filter(|&(u, _)| u >= lo && u <= hi)
        .map(|(u, v)| v / u)
        .fold(None, |best: Option<f64>, r| Some(best.map_or(r, |b| b.max(r))))
        .ok_or_else(|| invalid(format!("no points inside the window [{lo}, {hi}]")))
}

/// Discriminator of the spine: `max log J_n / h_n` over `h_n` in the window.
pub fn spine_discriminator(checkpoints: &[SpineCheckpoint], window: (f64, f64)) -> Result<f64> {
    discriminator_statistic(checkpoints.iter().map(|c| (c.h, c.log_j)), window)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PathClass {
    Spine,
    Bessel,
}

/// `SPINE` iff `statistic > threshold`.
pub fn classify(statistic: f64, threshold: f64) -> PathClass {
    if statistic > threshold {
        PathClass::Spine
    } else {
        PathClass::Bessel
    }
}

/// A threshold rule together with the side of the threshold on which the
/// spine class was found in training data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub threshold: f64,
    pub spine_above: bool,
}

impl ThresholdRule {
    /// Midpoint between the class means, oriented by their order.
    pub fn fit(spine: &[f64], bessel: &[f64]) -> Result<Self> {
        if spine.is_empty() || bessel.is_empty() {
            return Err(Error::InsufficientData("both classes need training data".into()));
        }
        let ms = spine.iter().sum::<f64>() / spine.len() as f64;
        let mb = bessel.iter().sum::<f64>() / bessel.len() as f64;
        Ok(Self {
            threshold: 0.5 * (ms + mb),
            spine_above: ms > mb,
        })
    }

    pub fn classify(&self, statistic: f64) -> PathClass {
        match (classify(statistic, self.threshold), self.spine_above) {
            (c, true) => c,
            (PathClass::Spine, false) => PathClass::Bessel,
            (PathClass::Bessel, false) if statistic == self.threshold => PathClass::Bessel,
            (PathClass::Bessel, false) => PathClass::Spine,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    /// Rule fitted on all data.
    pub rule: ThresholdRule,
    pub folds: usize,
    pub fold_rules: Vec<ThresholdRule>,
    /// Fraction of held-out paths classified correctly by the rule of their
    /// fold.
    pub heldout_accuracy: f64,
    /// Held-out accuracy of the fixed orientation of [`classify`] with each
    /// fold's midpoint threshold.
    pub heldout_accuracy_spine_above: f64,
}

/// K-fold cross-validation of the midpoint rule. Path `i` of either class
/// belongs to fold `i mod folds`.
pub fn cross_validate(spine: &[f64], bessel: &[f64], folds: usize) -> Result<CrossValidation> {
    if folds < 2 || spine.len() < folds || bessel.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{folds}-fold cross-validation with {} and {} paths",
            spine.len(),
            bessel.len()
        )));
    }
    let split = |xs: &[f64], f: usize| -> (Vec<f64>, Vec<f64>) {
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (i, &x) in xs.iter().enumerate() {
            if i % folds == f {
                test.push(x);
            } else {
                train.push(x);
            }
        }
        (train, test)
    };
    let mut correct = 0usize;
    let mut correct_fixed = 0usize;
    let mut fold_rules = Vec::with_capacity(folds);
    for f in 0..folds {
        let (s_train, s_test) = split(spine, f);
        let (b_train, b_test) = split(bessel, f);
        let rule = ThresholdRule::fit(&s_train, &b_train)?;
        for (test, class) in [(&s_test, PathClass::Spine), (&b_test, PathClass::Bessel)] {
            for &x in test.iter() {
                correct += (rule.classify(x) == class) as usize;
                correct_fixed += (classify(x, rule.threshold) == class) as usize;
            }
        }
        fold_rules.push(rule);
    }
    let total = (spine.len() + bessel.len()) as f64;
    Ok(CrossValidation {
        rule: ThresholdRule::fit(spine, bessel)?,
        folds,
        fold_rules,
        heldout_accuracy: correct as f64 / total,
        heldout_accuracy_spine_above: correct_fixed as f64 / total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPath {
    pub class: PathClass,
    pub stream: u64,
    pub statistic: f64,
    pub label: PathClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub schema_version: u32,
    pub seed: u64,
    pub window: (f64, f64),
    pub threshold: f64,
    pub spine_above: bool,
    pub cross_validation: CrossValidation,
    pub paths: Vec<ClassifiedPath>,
}

/// Runs `replicas` strip traces in parallel. Replica `i` uses stream
/// `stream_offset + i` of `seed`; results come back in replica order.
pub fn strip_ensemble<T, F>(seed: u64, stream_offset: u64, replicas: u64, config: &StripConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(StripTrace) -> Result<T> + Sync,
{
    config.validate()?;
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rs = RandomSource::new(seed, stream_offset + i);
            f(simulate_strip_with(&mut rs, config)?)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripReplicaSummary {
    pub stream: u64,
    pub horizon: f64,
    pub jumps: usize,
    /// `R_N / N`, the mean completed inter-jump time.
    pub mean_gap: f64,
    pub drift: f64,
    pub drift_se: f64,
    pub mean_excess: Option<f64>,
    pub cap_hit_rate: f64,
}

pub fn summarize(trace: &StripTrace) -> Result<StripReplicaSummary> {
    let drift = renewal_drift_estimate(trace)?;
    Ok(StripReplicaSummary {
        stream: trace.stream,
        horizon: trace.horizon,
        jumps: trace.jump_count(),
        mean_gap: trace.jump_times.last().map_or(0.0, |r| r / trace.jump_count() as f64),
        drift: drift.estimate,
        drift_se: drift.stderr,
        mean_excess: (!trace.excess.is_empty()).then(|| trace.total_excess() / trace.excess.len() as f64),
        cap_hit_rate: trace.cap_hit_rate(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinePathStats {
    pub stream: u64,
    /// Discriminator over the window.
    pub statistic: f64,
    /// `log J_n / h_n` at the last checkpoint inside the window.
    pub final_ratio_h: f64,
    /// `log J_n / r_n` at the same checkpoint.
    pub final_ratio_r: f64,
    pub checkpoints: usize,
    pub horizon: f64,
    pub mean_excess: f64,
    pub cap_hit_rate: f64,
}

/// Spine discriminators for `replicas` strip runs, each stopped once the
/// spine clock passes the end of the window.
pub fn spine_population(
    seed: u64,
    stream_offset: u64,
    replicas: u64,
    delta: f64,
    window: (f64, f64),
) -> Result<Vec<SpinePathStats>> {
    let config = StripConfig::new(window.1, delta).stopping_at_spine_clock(window.1);
    strip_ensemble(seed, stream_offset, replicas, &config, |trace| {
        let cps = spine_checkpoints(&trace)?;
        let statistic = spine_discriminator(&cps, window)?;
        let last = cps
            .iter()
            .rev()
            .find(|c| c.h <= window.1)
            .ok_or_else(|| Error::InsufficientData("no checkpoint inside the window".into()))?;
        Ok(SpinePathStats {
            stream: trace.stream,
            statistic,
            final_ratio_h: last.ratio_h(),
            final_ratio_r: last.ratio_r(),
            checkpoints: cps.len(),
            horizon: trace.horizon,
            mean_excess: trace.total_excess() / trace.excess.len() as f64,
            cap_hit_rate: trace.cap_hit_rate(),
        })
    })
}

/// Mean of the per-replica drift estimates with its standard error.
pub fn kappa_estimate(summaries: &[StripReplicaSummary], seed: u64) -> Result<EstimateReport> {
    let drifts: Vec<f64> = summaries.iter().map(|s| s.drift).collect();
    let m = mean_ci(&drifts)?;
    let jumps: f64 = summaries.iter().map(|s| s.jumps as f64).sum();
    let clock: f64 = summaries.iter().map(|s| s.horizon).sum();
    Ok(EstimateReport::new(
        m.estimate,
        m.stderr,
        drifts.len() as u64,
        "mean of Z1(u)/u over replicas",
    )
    .with_seeds(
        seed,
        summaries.iter().map(|s| s.stream).min().unwrap_or(0),
        summaries.iter().map(|s| s.stream + 1).max().unwrap_or(0),
    )
    .with_extra("jump_rate", jumps / clock)
    .with_extra("schema_version", SCHEMA_VERSION as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::quadrature::QuadratureSpec;
    use crate::analytic::strip_exit::{excess_clock_mean, EXIT_MEAN};
    use crate::analytic::KAPPA;
    use crate::kernels::sample_strip_exit;
    use crate::stats::ks_two_sample;

    #[test]
    fn rejects_bad_config() {
        let mut rs = RandomSource::new(1, 0);
        assert!(simulate_strip(&mut rs, 0.0, 1e-3).is_err());
        assert!(simulate_strip(&mut rs, 10.0, 0.0).is_err());
        let mut c = StripConfig::new(10.0, 1e-3);
        c.batches = 1;
        assert!(simulate_strip_with(&mut rs, &c).is_err());
        let c = StripConfig::new(10.0, 1e-3)
            .without_excess()
            .stopping_at_spine_clock(5.0);
        assert!(simulate_strip_with(&mut rs, &c).is_err());
    }

    #[test]
    fn jump_bookkeeping() {
        let trace = simulate_strip(&mut RandomSource::new(2, 0), 200.0, 1e-3).unwrap();
        assert_eq!(trace.horizon, 200.0);
        assert!(trace.jump_times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(trace.jump_sides.len(), trace.jump_count());
        assert_eq!(trace.excess.len(), trace.jump_count());
        assert!(trace.excess.iter().all(|&e| e >= 0.0));
        assert_eq!(trace.batch_times.len(), 21);
        assert!((trace.batch_times[20] - 200.0).abs() < 1e-9);
        assert_eq!(trace.batch_z1[20], trace.z1_end);
        assert!(trace.z2_end > 0.0 && trace.z2_end < STRIP_WIDTH);
        let top = trace.jump_sides.iter().filter(|s| **s == ExitSide::Top).count() as f64;
        let n = trace.jump_count() as f64;
        assert!((top / n - 0.5).abs() < 4.0 * (0.25 / n).sqrt());
    }

    #[test]
    fn jumps_add_exactly_ln_sqrt2() {
        let cfg = StripConfig::new(50.0, 1e-3);
        let with = simulate_strip_with(&mut RandomSource::new(3, 0), &cfg).unwrap();
        let without = simulate_strip_with(&mut RandomSource::new(3, 0), &cfg.clone().without_jumps()).unwrap();
        assert_eq!(with.jump_times, without.jump_times);
        for (k, (a, b)) in with.z1_at_jumps.iter().zip(&without.z1_at_jumps).enumerate() {
            let shift = (k + 1) as f64 * LN_SQRT2;
            assert!((a - b - shift).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn inter_jump_times_follow_exit_law() {
        let cfg = StripConfig::new(3000.0, 1e-4).without_excess();
        let trace = simulate_strip_with(&mut RandomSource::new(4, 0), &cfg).unwrap();
        let durations = trace.inter_jump_times();
        let mut rs = RandomSource::new(4, 1);
        let reference: Vec<f64> = (0..20_000).map(|_| sample_strip_exit(&mut rs).duration).collect();
        let ks = ks_two_sample(&durations, &reference).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
        let mean = durations.iter().sum::<f64>() / durations.len() as f64;
        assert!((mean / EXIT_MEAN - 1.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn no_serial_correlation_of_gaps() {
        let cfg = StripConfig::new(3000.0, 1e-3).without_excess();
        let trace = simulate_strip_with(&mut RandomSource::new(5, 0), &cfg).unwrap();
        let d = trace.inter_jump_times();
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let lag1 = d.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (n - 1.0) / var;
        assert!(lag1.abs() < 2.58 / n.sqrt(), "lag-1 autocorrelation {lag1}");
    }

    #[test]
    fn drift_without_jumps_is_zero() {
        let cfg = StripConfig::new(2000.0, 1e-3).without_jumps().without_excess();
        let trace = simulate_strip_with(&mut RandomSource::new(6, 0), &cfg).unwrap();
        let est = renewal_drift_estimate(&trace).unwrap();
        assert!(est.estimate.abs() < 3.0 * est.stderr + 1e-3, "{est:?}");
    }

    #[test]
    fn drift_estimate_near_kappa() {
        let cfg = StripConfig::new(2000.0, 1e-3).without_excess();
        let trace = simulate_strip_with(&mut RandomSource::new(7, 0), &cfg).unwrap();
        let est = renewal_drift_estimate(&trace).unwrap();
        assert!((est.estimate - KAPPA).abs() < 4.0 * est.stderr, "{est:?}");
        let short = StripConfig::new(50.0, 1e-3);
        let t = simulate_strip_with(&mut RandomSource::new(7, 1), &short).unwrap();
        assert!(matches!(renewal_drift_estimate(&t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn checkpoints_and_excess_mean() {
        let spec = QuadratureSpec::default();
        let oracle = excess_clock_mean(&spec).unwrap();
        let mut per_delta = Vec::new();
        for (stream, delta) in [(0u64, 1e-3), (1, 5e-4)] {
            let trace = simulate_strip(&mut RandomSource::new(8, stream), 1500.0, delta).unwrap();
            let cps = spine_checkpoints(&trace).unwrap();
            assert!(cps.iter().all(|c| c.h >= c.r && c.r > 0.0));
            assert_eq!(cps[0].n, 1);
            let m = mean_ci(&trace.excess).unwrap();
            assert!((m.estimate - oracle).abs() < 4.0 * m.stderr + 0.01, "{m:?} vs {oracle}");
            assert!(trace.cap_hit_rate() < 1e-6);
            per_delta.push(m);
        }
        let (a, b) = (&per_delta[0], &per_delta[1]);
        assert!((a.estimate - b.estimate).abs() < 3.0 * a.stderr.hypot(b.stderr));
    }

    #[test]
    fn stops_on_spine_clock() {
        let cfg = StripConfig::new(1e4, 1e-3).stopping_at_spine_clock(100.0);
        let trace = simulate_strip_with(&mut RandomSource::new(9, 0), &cfg).unwrap();
        let cps = spine_checkpoints(&trace).unwrap();
        let last = cps.last().unwrap();
        assert!(last.h >= 100.0);
        assert!(cps[cps.len() - 2].h < 100.0);
        assert_eq!(trace.horizon, last.r);
    }

    #[test]
    fn discriminator_windows() {
        let pts = [(1.0, 0.5), (2.0, 3.0), (4.0, 1.0)];
        assert_eq!(discriminator_statistic(pts, (1.0, 4.0)).unwrap(), 1.5);
        assert_eq!(discriminator_statistic(pts, (4.0, 4.0)).unwrap(), 0.25);
        assert!(discriminator_statistic(pts, (5.0, 6.0)).is_err());
        assert!(discriminator_statistic(pts, (3.0, 2.0)).is_err());
    }

    #[test]
    fn classification_rules() {
        let eps = 1e-9;
        assert_eq!(classify(0.5 + eps, 0.5), PathClass::Spine);
        assert_eq!(classify(0.5 - eps, 0.5), PathClass::Bessel);
        assert_eq!(classify(0.5, 0.5), PathClass::Bessel);
        let spine = [0.2, 0.22, 0.19, 0.21, 0.2, 0.23];
        let bessel = [0.5, 0.52, 0.49, 0.51, 0.5, 0.53];
        let cv = cross_validate(&spine, &bessel, 3).unwrap();
        assert!(!cv.rule.spine_above);
        assert_eq!(cv.heldout_accuracy, 1.0);
        assert_eq!(cv.heldout_accuracy_spine_above, 0.0);
        let flipped = cross_validate(&bessel, &spine, 3).unwrap();
        assert!(flipped.rule.spine_above);
        assert_eq!(flipped.heldout_accuracy, 1.0);
        assert!(cross_validate(&spine[..1], &bessel, 3).is_err());
    }

    #[test]
    fn ensemble_is_ordered_and_deterministic() {
        let cfg = StripConfig::new(120.0, 1e-3);
        let a = strip_ensemble(10, 0, 4, &cfg, |t| summarize(&t)).unwrap();
        let b = strip_ensemble(10, 0, 4, &cfg, |t| summarize(&t)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|s| s.stream).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let k = kappa_estimate(&a, 10).unwrap();
        assert_eq!(k.n, 4);
        assert!(a.iter().all(|s| (s.mean_gap - EXIT_MEAN).abs() < 0.2));
    }

    #[test]
    fn spine_population_sits_below_one_half() {
        let pop = spine_population(11, 0, 4, 1e-3, (300.0, 600.0)).unwrap();
        for p in &pop {
            assert!(p.statistic >= p.final_ratio_h);
            assert!(p.final_ratio_r > p.final_ratio_h);
            assert!(p.statistic < 0.5, "{p:?}");
        }
    }
}
