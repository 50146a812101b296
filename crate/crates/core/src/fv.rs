//! Real-time simulation of the two-particle Fleming–Viot process on `(0, ∞)`:
//! two Brownian particles, and whenever one of them hits 0 both restart at
//! the survivor's position.
//!
//! Between branch times the particles are advanced with exact Gaussian
//! increments and every step is tested for an unseen hit of 0 with the
//! Brownian-bridge crossing probability. A flagged step is refined by
//! resampling both bridges on 64 sub-steps, conditioned on the flags, which
//! locates the branch time to 1/64 of the step.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{bernoulli, crossing_probability, RandomSource};
use crate::output::SCHEMA_VERSION;
use crate::path::{additive_clock, ClockTable, PathGrid};

/// Sub-steps used to locate a branch time inside a flagged step.
pub const REFINEMENT: usize = 64;

const MAX_REFINE_ATTEMPTS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    /// Every step has length `dt`.
    #[default]
    Uniform,
    /// Step `max(dt, ratio · min(x1, x2)²)`: long steps while both particles
    /// are far from 0, `dt` close to it.
    Adaptive { ratio: f64 },
    /// Step `max(dt · Y², ratio · min(x1, x2)²)` with `Y` the latest branch
    /// value, so the whole scheme commutes with Brownian scaling.
    ScaleInvariant { ratio: f64 },
}

impl StepPolicy {
    #[inline]
    fn step(self, dt: f64, last_branch: f64, x1: f64, x2: f64) -> f64 {
        let m = x1.min(x2);
        match self {
            StepPolicy::Uniform => dt,
            StepPolicy::Adaptive { ratio } => dt.max(ratio * m * m),
            StepPolicy::ScaleInvariant { ratio } => (dt * last_branch * last_branch).max(ratio * m * m),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            StepPolicy::Uniform => Ok(()),
            StepPolicy::Adaptive { ratio } | StepPolicy::ScaleInvariant { ratio } => {
                if ratio > 0.0 && ratio <= 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("step ratio {ratio} must lie in (0, 1]")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FvConfig {
    pub y0: f64,
    pub dt: f64,
    pub max_branches: usize,
    pub policy: StepPolicy,
    /// Stop at this real time even if fewer branches occurred.
    pub horizon: Option<f64>,
    /// Keep the full particle grid; branch data is always kept.
    pub record_path: bool,
    pub max_steps: Option<u64>,
}

impl FvConfig {
    pub fn new(y0: f64, dt: f64, max_branches: usize) -> Self {
        Self {
            y0,
            dt,
            max_branches,
            policy: StepPolicy::Uniform,
            horizon: None,
            record_path: true,
            max_steps: None,
        }
    }

    pub fn with_policy(mut self, policy: StepPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn branches_only(mut self) -> Self {
        self.record_path = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y0 > 0.0 && self.y0.is_finite()) {
            return Err(invalid(format!("y0 = {} must be positive", self.y0)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt = {} must be positive", self.dt)));
        }
        if self.max_branches == 0 {
            return Err(invalid("max_branches must be at least 1"));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(invalid(format!("horizon {h} must be positive")));
            }
        }
        self.policy.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Particle {
    First,
    Second,
}

impl Particle {
    pub fn index(self) -> usize {
        match self {
            Particle::First => 0,
            Particle::Second => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Particle::First => Particle::Second,
            Particle::Second => Particle::First,
        }
    }

    fn from_index(i: usize) -> Self {
        if i == 0 {
            Particle::First
        } else {
            Particle::Second
        }
    }
}

/// A simulated trajectory.
///
/// Grid nodes at a branch time `T_k` hold the values just before the
/// restart: the particle that hit is 0 and the survivor is `Y_k`. Both
/// particles continue from `Y_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FvTrajectory {
    pub seed: u64,
    pub stream: u64,
    pub config: FvConfig,
    pub grid: Vec<f64>,
    pub particle1: Vec<f64>,
    pub particle2: Vec<f64>,
    /// `T_0 = 0, T_1, …`
    pub branch_times: Vec<f64>,
    /// `Y_0 = y0, Y_1, …`
    pub branch_values: Vec<f64>,
    /// The particle that hit 0 at `T_k`, for `k ≥ 1`.
    pub hitters: Vec<Particle>,
    /// Grid index of each `T_k` (empty when the path is not recorded).
    pub branch_nodes: Vec<usize>,
    pub end_time: f64,
    pub steps: u64,
}

impl FvTrajectory {
    pub fn branch_count(&self) -> usize {
        self.hitters.len()
    }

    /// Whether the run reached `max_branches` rather than the horizon.
    pub fn completed(&self) -> bool {
        self.branch_count() == self.config.max_branches
    }

    /// Which particle is the spine on `[T_{k−1}, T_k)`, for `k ≥ 1`.
    pub fn spine_label(&self, k: usize) -> Option<Particle> {
        self.hitters.get(k.checked_sub(1)?).map(|p| p.other())
    }

    pub fn spine_labels(&self) -> Vec<Particle> {
        self.hitters.iter().map(|p| p.other()).collect()
    }

    fn value(&self, p: Particle, i: usize) -> f64 {
        match p {
            Particle::First => self.particle1[i],
            Particle::Second => self.particle2[i],
        }
    }

    fn require_path(&self) -> Result<()> {
        if self.grid.is_empty() {
            Err(invalid("trajectory was simulated without recording the path"))
        } else {
            Ok(())
        }
    }
}

pub fn simulate_fv(rs: &mut RandomSource, y0: f64, dt: f64, max_branches: usize) -> Result<FvTrajectory> {
    simulate_fv_with(rs, &FvConfig::new(y0, dt, max_branches))
}

pub fn simulate_fv_with(rs: &mut RandomSource, config: &FvConfig) -> Result<FvTrajectory> {
    config.validate()?;
    let mut traj = FvTrajectory {
        seed: rs.seed(),
        stream: rs.stream_id(),
        config: config.clone(),
        grid: Vec::new(),
        particle1: Vec::new(),
        particle2: Vec::new(),
        branch_times: vec![0.0],
        branch_values: vec![config.y0],
        hitters: Vec::new(),
        branch_nodes: Vec::new(),
        end_time: 0.0,
        steps: 0,
    };
    let record = config.record_path;
    let push = |traj: &mut FvTrajectory, t: f64, a: f64, b: f64| {
        if record {
            traj.grid.push(t);
            traj.particle1.push(a);
            traj.particle2.push(b);
        }
    };
    let mut t = 0.0f64;
    let mut x = [config.y0, config.y0];
    let mut last = config.y0;
    push(&mut traj, t, x[0], x[1]);
    if record {
        traj.branch_nodes.push(0);
    }
    let mut scratch = Refiner::default();
    while traj.hitters.len() < config.max_branches {
        let mut h = config.policy.step(config.dt, last, x[0], x[1]);
        if let Some(horizon) = config.horizon {
            if t >= horizon {
                break;
            }
            h = h.min(horizon - t);
        }
        if let Some(budget) = config.max_steps {
            if traj.steps >= budget {
                return Err(Error::BudgetExceeded(budget));
            }
        }
        traj.steps += 1;
        let sd = h.sqrt();
        let next = [x[0] + sd * rs.standard_normal(), x[1] + sd * rs.standard_normal()];
        let flags = [
            bernoulli(rs, crossing_probability(x[0], next[0], h)),
            bernoulli(rs, crossing_probability(x[1], next[1], h)),
        ];
        if !flags[0] && !flags[1] {
            t += h;
            x = next;
            push(&mut traj, t, x[0], x[1]);
            continue;
        }
        let hit = scratch.refine(rs, x, next, h, flags)?;
        t += h * (hit.substep + 1) as f64 / REFINEMENT as f64;
        let hitter = Particle::from_index(hit.hitter);
        let y = hit.survivor_value;
        let (a, b) = match hitter {
            Particle::First => (0.0, y),
            Particle::Second => (y, 0.0),
        };
        push(&mut traj, t, a, b);
        if record {
            traj.branch_nodes.push(traj.grid.len() - 1);
        }
        traj.branch_times.push(t);
        traj.branch_values.push(y);
        traj.hitters.push(hitter);
        x = [y, y];
        last = y;
    }
    traj.end_time = t;
    Ok(traj)
}

struct RefinedHit {
    substep: usize,
    hitter: usize,
    survivor_value: f64,
}

#[derive(Default)]
struct Refiner {
    nodes: [Vec<f64>; 2],
}

impl Refiner {
    /// Resamples each particle's bridge from `x[i]` to `next[i]` on
    /// [`REFINEMENT`] sub-steps until its sub-step crossings agree with
    /// `flags[i]`, then returns the earliest crossing. Equal crossing
    /// sub-steps are resampled.
    fn refine(
        &mut self,
        rs: &mut RandomSource,
        x: [f64; 2],
        next: [f64; 2],
        h: f64,
        flags: [bool; 2],
    ) -> Result<RefinedHit> {
        let s = h / REFINEMENT as f64;
        let mut attempts = 0u64;
        loop {
            let mut first = [None; 2];
            for i in 0..2 {
                loop {
                    attempts += 1;
                    if attempts > MAX_REFINE_ATTEMPTS {
                        return Err(Error::BudgetExceeded(MAX_REFINE_ATTEMPTS));
                    }
                    bridge_nodes(rs, x[i], next[i], h, &mut self.nodes[i]);
                    let c = first_crossing(rs, &self.nodes[i], s);
                    if c.is_some() == flags[i] {
                        first[i] = c;
                        break;
                    }
                }
            }
            let (hitter, substep) = match first {
                [Some(a), Some(b)] if a == b => continue,
                [Some(a), Some(b)] => {
                    if a < b {
                        (0, a)
                    } else {
                        (1, b)
                    }
                }
                [Some(a), None] => (0, a),
                [None, Some(b)] => (1, b),
                [None, None] => unreachable!("refinement requires at least one flag"),
            };
            return Ok(RefinedHit {
                substep,
                hitter,
                survivor_value: self.nodes[1 - hitter][substep + 1],
            });
        }
    }
}

/// Brownian bridge from `a` to `b` over `h`, sampled on `REFINEMENT + 1`
/// equally spaced nodes.
fn bridge_nodes(rs: &mut RandomSource, a: f64, b: f64, h: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(a);
    let s = h / REFINEMENT as f64;
    let mut cur = a;
    for j in 0..REFINEMENT - 1 {
        let remaining = h - j as f64 * s;
        let mean = cur + (b - cur) * s / remaining;
        let sd = (s * (remaining - s) / remaining).sqrt();
        cur = mean + sd * rs.standard_normal();
        out.push(cur);
    }
    out.push(b);
}

fn first_crossing(rs: &mut RandomSource, nodes: &[f64], s: f64) -> Option<usize> {
    nodes
        .windows(2)
        .position(|w| bernoulli(rs, crossing_probability(w[0], w[1], s)))
}

/// The spine as a path, together with whether the trajectory continued past
/// its last branch (that final stretch has no spine yet).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinePath {
    pub path: PathGrid,
    pub truncated: bool,
}

/// On `[T_{k−1}, T_k]` the spine follows the particle that did not hit 0 at
/// `T_k`.
pub fn extract_spine(traj: &FvTrajectory) -> Result<SpinePath> {
    traj.require_path()?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    times.push(traj.grid[0]);
    values.push(traj.branch_values[0]);
    for (k, &hitter) in traj.hitters.iter().enumerate() {
        let survivor = hitter.other();
        for i in traj.branch_nodes[k] + 1..=traj.branch_nodes[k + 1] {
            times.push(traj.grid[i]);
            values.push(traj.value(survivor, i));
        }
    }
    let last_node = traj.branch_nodes.last().copied().unwrap_or(0);
    Ok(SpinePath {
        path: PathGrid::new(times, values)?,
        truncated: last_node + 1 < traj.grid.len(),
    })
}

/// `|V(t)| = sqrt(x1² + x2²)`. Each branch time appears twice: first with
/// the left limit `Y_k`, then with the restart value `√2 · Y_k`.
pub fn modulus_path(traj: &FvTrajectory) -> Result<PathGrid> {
    traj.require_path()?;
    let mut times = Vec::with_capacity(traj.grid.len() + traj.hitters.len());
    let mut values = Vec::with_capacity(times.capacity());
    let mut next_branch = 1;
    for i in 0..traj.grid.len() {
        times.push(traj.grid[i]);
        values.push(traj.particle1[i].hypot(traj.particle2[i]));
        if traj.branch_nodes.get(next_branch) == Some(&i) {
            times.push(traj.grid[i]);
            values.push(std::f64::consts::SQRT_2 * traj.branch_values[next_branch]);
            next_branch += 1;
        }
    }
    PathGrid::new(times, values)
}

/// The additive clocks `σ` of the spine and `φ` of `|V|`, both on
/// `[0, T_K]` with `T_K` the last branch time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FvClocks {
    pub sigma: ClockTable,
    pub phi: ClockTable,
}

pub fn fv_clocks(traj: &FvTrajectory) -> Result<FvClocks> {
    let spine = extract_spine(traj)?;
    let modulus = modulus_path(traj)?;
    let end = spine.path.horizon();
    let keep = modulus.times.partition_point(|&t| t <= end);
    let modulus = PathGrid::new(modulus.times[..keep].to_vec(), modulus.values[..keep].to_vec())?;
    Ok(FvClocks {
        sigma: additive_clock(&spine.path)?,
        phi: additive_clock(&modulus)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HnSn {
    pub n: usize,
    pub t: f64,
    /// Solves `σ(H_n) = T_n`.
    pub h: f64,
    /// Solves `φ(S_n) = T_n`.
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HnSnSequence {
    pub entries: Vec<HnSn>,
    /// Some `T_n` exceeded the accumulated clocks and was left out.
    pub truncated: bool,
}

pub fn hn_sn_sequence(traj: &FvTrajectory) -> Result<HnSnSequence> {
    let clocks = fv_clocks(traj)?;
    let mut entries = Vec::new();
    let mut truncated = false;
    for (n, &t) in traj.branch_times.iter().enumerate() {
        if t > clocks.sigma.max_clock() || t > clocks.phi.max_clock() {
            truncated = true;
            break;
        }
        entries.push(HnSn {
            n,
            t,
            h: clocks.sigma.inverse(t)?,
            s: clocks.phi.inverse(t)?,
        });
    }
    Ok(HnSnSequence { entries, truncated })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub particle1: f64,
    pub particle2: f64,
    /// Empty after the last branch.
    pub spine: Option<f64>,
    pub is_branch: u8,
}

pub fn trajectory_rows(traj: &FvTrajectory) -> Result<Vec<TrajectoryRow>> {
    let spine = extract_spine(traj)?;
    let spine_len = spine.path.len();
    let mut next_branch = 1;
    Ok((0..traj.grid.len())
        .map(|i| {
            let is_branch = traj.branch_nodes.get(next_branch) == Some(&i);
            if is_branch {
                next_branch += 1;
            }
            TrajectoryRow {
                t: traj.grid[i],
                particle1: traj.particle1[i],
                particle2: traj.particle2[i],
                spine: (i < spine_len).then(|| spine.path.values[i]),
                is_branch: is_branch as u8,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub k: usize,
    pub time: f64,
    pub value: f64,
    pub hitter: Option<Particle>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub schema_version: u32,
    pub seed: u64,
    pub stream: u64,
    pub y0: f64,
    pub dt: f64,
    pub policy: StepPolicy,
    pub steps: u64,
    pub end_time: f64,
    pub spine_truncated: bool,
    pub branches: Vec<BranchRecord>,
}

pub fn trajectory_meta(traj: &FvTrajectory) -> TrajectoryMeta {
    let last_node = traj.branch_nodes.last().copied().unwrap_or(0);
    TrajectoryMeta {
        schema_version: SCHEMA_VERSION,
        seed: traj.seed,
        stream: traj.stream,
        y0: traj.config.y0,
        dt: traj.config.dt,
        policy: traj.config.policy,
        steps: traj.steps,
        end_time: traj.end_time,
        spine_truncated: last_node + 1 < traj.grid.len(),
        branches: traj
            .branch_times
            .iter()
            .zip(&traj.branch_values)
            .enumerate()
            .map(|(k, (&time, &value))| BranchRecord {
                k,
                time,
                value,
                hitter: k.checked_sub(1).map(|j| traj.hitters[j]),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::xi_cdf;
    use crate::stats::{ks_one_sample, ks_two_sample};

    fn adaptive(y0: f64, dt: f64, branches: usize) -> FvConfig {
        FvConfig::new(y0, dt, branches).with_policy(StepPolicy::Adaptive { ratio: 0.01 })
    }

    fn first_branch_ratios(seed: u64, runs: u64, y0: f64, dt: f64) -> Vec<f64> {
        let cfg = adaptive(y0, dt, 1).branches_only();
        (0..runs)
            .map(|i| {
                let t = simulate_fv_with(&mut RandomSource::new(seed, i), &cfg).unwrap();
                t.branch_values[1] / y0
            })
            .collect()
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rs = RandomSource::new(1, 0);
        assert!(simulate_fv(&mut rs, 0.0, 1e-3, 1).is_err());
        assert!(simulate_fv(&mut rs, 1.0, -1.0, 1).is_err());
        assert!(simulate_fv(&mut rs, 1.0, 1e-3, 0).is_err());
        let bad = FvConfig::new(1.0, 1e-3, 1).with_policy(StepPolicy::Adaptive { ratio: 0.0 });
        assert!(simulate_fv_with(&mut rs, &bad).is_err());
    }

    #[test]
    fn branch_bookkeeping() {
        let traj = simulate_fv(&mut RandomSource::new(3, 0), 1.0, 1e-4, 5).unwrap();
        assert_eq!(traj.branch_count(), 5);
        assert!(traj.completed());
        assert!(traj.branch_times.windows(2).all(|w| w[1] > w[0]));
        assert!(traj.grid.windows(2).all(|w| w[1] > w[0]));
        for k in 1..=5 {
            let i = traj.branch_nodes[k];
            assert_eq!(traj.grid[i], traj.branch_times[k]);
            let (a, b) = (traj.particle1[i], traj.particle2[i]);
            assert_eq!(a.min(b), 0.0);
            assert_eq!(a.max(b), traj.branch_values[k]);
            assert!(traj.branch_values[k] > 0.0);
            let hitter = traj.hitters[k - 1];
            assert_eq!(traj.value(hitter, i), 0.0);
            // Both particles restart at Y_k.
            if i + 1 < traj.grid.len() {
                let prev = traj.branch_values[k];
                assert!((traj.particle1[i + 1] - prev).abs() < 0.1);
                assert!((traj.particle2[i + 1] - prev).abs() < 0.1);
            }
        }
        for k in 0..5 {
            let (lo, hi) = (traj.branch_nodes[k], traj.branch_nodes[k + 1]);
            for i in lo + 1..hi {
                assert!(traj.particle1[i] > 0.0 && traj.particle2[i] > 0.0);
            }
        }
    }

    #[test]
    fn spine_matches_branch_values() {
        let cfg = adaptive(1.0, 1e-5, 8);
        let traj = simulate_fv_with(&mut RandomSource::new(4, 2), &cfg).unwrap();
        let spine = extract_spine(&traj).unwrap();
        assert!(!spine.truncated);
        assert!(spine.path.values.iter().all(|&v| v > 0.0));
        for k in 0..=8 {
            let i = traj.branch_nodes[k];
            assert_eq!(spine.path.times[i], traj.branch_times[k]);
            assert_eq!(spine.path.values[i], traj.branch_values[k]);
        }
        let modulus = modulus_path(&traj).unwrap();
        for k in 1..=8 {
            let t = traj.branch_times[k];
            let at: Vec<f64> = modulus.points().filter(|p| p.0 == t).map(|p| p.1).collect();
            assert_eq!(at.len(), 2);
            assert_eq!(at[0], traj.branch_values[k]);
            assert!((at[1] - std::f64::consts::SQRT_2 * traj.branch_values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn spine_follows_the_survivor() {
        let traj = FvTrajectory {
            seed: 0,
            stream: 0,
            config: FvConfig::new(1.0, 0.5, 1),
            grid: vec![0.0, 0.5, 1.0, 1.5],
            particle1: vec![1.0, 0.5, 0.0, 1.8],
            particle2: vec![1.0, 1.2, 1.4, 1.1],
            branch_times: vec![0.0, 1.0],
            branch_values: vec![1.0, 1.4],
            hitters: vec![Particle::First],
            branch_nodes: vec![0, 2],
            end_time: 1.5,
            steps: 3,
        };
        let spine = extract_spine(&traj).unwrap();
        assert_eq!(spine.path.values, vec![1.0, 1.2, 1.4]);
        assert!(spine.truncated);
        assert_eq!(traj.spine_label(1), Some(Particle::Second));
        let rows = trajectory_rows(&traj).unwrap();
        assert_eq!(rows.iter().map(|r| r.is_branch).collect::<Vec<_>>(), vec![0, 0, 1, 0]);
        assert_eq!(rows[3].spine, None);
        let meta = trajectory_meta(&traj);
        assert!(meta.spine_truncated);
        assert_eq!(meta.branches[1].hitter, Some(Particle::First));
    }

    #[test]
    fn first_branch_law_matches_step_factor() {
        let ratios = first_branch_ratios(11, 3000, 1.0, 1e-5);
        let ks = ks_one_sample(&ratios, xi_cdf).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn first_branch_law_scales() {
        let a = first_branch_ratios(12, 2000, 1.0, 1e-5);
        let b = first_branch_ratios(13, 2000, 7.0, 1e-5);
        let ks = ks_two_sample(&a, &b).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn no_early_termination() {
        let cfg = FvConfig::new(1.0, 1e-4, 50)
            .with_policy(StepPolicy::ScaleInvariant { ratio: 0.01 })
            .branches_only();
        for i in 0..100 {
            let t = simulate_fv_with(&mut RandomSource::new(14, i), &cfg).unwrap();
            assert!(t.completed());
            assert_eq!(t.branch_times.len(), 51);
            assert!(t.branch_times.windows(2).all(|w| w[1] > w[0]));
            assert!(t.grid.is_empty());
        }
    }

    #[test]
    fn horizon_stops_early() {
        let cfg = FvConfig::new(1.0, 1e-3, 1000).with_horizon(0.5);
        let t = simulate_fv_with(&mut RandomSource::new(15, 0), &cfg).unwrap();
        assert!(t.end_time <= 0.5 + 1e-12);
        assert!(!t.completed());
    }

    #[test]
    fn sigma_dominates_phi_and_hn_below_sn() {
        let cfg = adaptive(1.0, 1e-4, 20);
        for i in 0..10 {
            let traj = simulate_fv_with(&mut RandomSource::new(16, i), &cfg).unwrap();
            let clocks = fv_clocks(&traj).unwrap();
            for (&t, &s) in clocks.sigma.times.iter().zip(&clocks.sigma.clock) {
                assert!(s >= clocks.phi.at(t).unwrap() - 1e-12);
            }
            let seq = hn_sn_sequence(&traj).unwrap();
            assert_eq!((seq.entries[0].h, seq.entries[0].s), (0.0, 0.0));
            for e in &seq.entries {
                assert!(e.h <= e.s + 1e-12, "{e:?}");
            }
            assert!(seq.entries.windows(2).all(|w| w[1].h >= w[0].h));
        }
    }

    #[test]
    fn deterministic_for_fixed_stream() {
        let cfg = adaptive(1.0, 1e-4, 3);
        let a = simulate_fv_with(&mut RandomSource::new(17, 5), &cfg).unwrap();
        let b = simulate_fv_with(&mut RandomSource::new(17, 5), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
