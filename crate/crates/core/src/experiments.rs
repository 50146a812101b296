//! Batch experiments: configuration, validation, execution and artifacts.
//!
//! A run writes `<output_dir>/<experiment>/` containing `report.json` and
//! one or more CSV files. The directory is assembled under a temporary name
//! and renamed into place only when every file has been written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::quadrature::QuadratureSpec;
use crate::analytic::strip_exit::{excess_clock_mean, EXIT_MEAN};
use crate::analytic::{solve_tail_exponent, xi_cdf, xi_neg_moment, xi_quantile, KAPPA, LN_SQRT2};
use crate::bessel::{
    bessel_population, bessel_tail_check, exact_min_sample, intrinsic_rows, min_probabilities, simulate_intrinsic_log,
    truncated_min_vs_exact, BesselPathStats,
};
use crate::error::{Error, Result};
use crate::fv::{hn_sn_sequence, simulate_fv_with, trajectory_meta, trajectory_rows, FvConfig, HnSn, StepPolicy};
use crate::kernels::{sample_step_factor, RandomSource};
use crate::output::{csv_bytes, SCHEMA_VERSION};
use crate::skeleton::SkeletonMethod;
use crate::stats::{
    exp_tail_fit, ks_one_sample, ks_two_sample, lil_statistic_after, mean_ci, EstimateReport, TailCell, LIL_BURN_IN,
};
use crate::strip::{
    checkpoint_rows, cross_validate, kappa_estimate, renewal_drift_estimate, simulate_strip_with, spine_checkpoints,
    spine_population, strip_ensemble, summarize, ClassificationReport, ClassifiedPath, PathClass, SpinePathStats,
    StripConfig, ThresholdRule,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "FVSPINE_OUT";
pub const DEFAULT_OUTPUT: &str = "fvspine-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    XiLaw,
    GammaRoot,
    SkeletonTail,
    RenewalDrift,
    Kappa,
    BesselMin,
    BesselTail,
    BesselDrift,
    FvPath,
    HnSn,
    SpineDrift,
    Discriminate,
    Lil,
}

impl Experiment {
    pub const ALL: [Experiment; 13] = [
        Experiment::XiLaw,
        Experiment::GammaRoot,
        Experiment::SkeletonTail,
        Experiment::RenewalDrift,
        Experiment::Kappa,
        Experiment::BesselMin,
        Experiment::BesselTail,
        Experiment::BesselDrift,
        Experiment::FvPath,
        Experiment::HnSn,
        Experiment::SpineDrift,
        Experiment::Discriminate,
        Experiment::Lil,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::XiLaw => "xi-law",
            Experiment::GammaRoot => "gamma-root",
            Experiment::SkeletonTail => "skeleton-tail",
            Experiment::RenewalDrift => "renewal-drift",
            Experiment::Kappa => "kappa",
            Experiment::BesselMin => "bessel-min",
            Experiment::BesselTail => "bessel-tail",
            Experiment::BesselDrift => "bessel-drift",
            Experiment::FvPath => "fv-path",
            Experiment::HnSn => "hn-sn",
            Experiment::SpineDrift => "spine-drift",
            Experiment::Discriminate => "discriminate",
            Experiment::Lil => "lil",
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Numeric parameters. Every field is optional; unset fields take the
/// experiment's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub dt: Option<f64>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub du: Option<f64>,
    pub u_max: Option<f64>,
    pub y0: Option<f64>,
    pub branches: Option<usize>,
    pub horizon: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub u_grid: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
    pub barrier: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub threshold: Option<f64>,
    pub folds: Option<usize>,
    pub samples: Option<u64>,
    pub paths: Option<u64>,
    pub stop_ratio: Option<f64>,
    pub policy: Option<String>,
    pub step_ratio: Option<f64>,
    pub method: Option<SkeletonMethod>,
}

impl Params {
    /// `self` with every field that is set in `over` replaced.
    pub fn overlay(&self, over: &Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: over.$f.clone().or_else(|| self.$f.clone())),* } };
        }
        pick!(
            dt, delta, eps, du, u_max, y0, branches, horizon, t_grid, u_grid, levels, barrier, window, threshold,
            folds, samples, paths, stop_ratio, policy, step_ratio, method
        )
    }
}

/// On-disk configuration: top-level keys plus one table of [`Params`] per
/// experiment, e.g. `[kappa]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(flatten)]
    pub sections: BTreeMap<String, Params>,
}

/// Values given on the command line; they take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub replicas: Option<u64>,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    pub params: Params,
}

pub const DEFAULT_SEED: u64 = 20_161_012;

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        for key in file.sections.keys() {
            Experiment::from_str(key).map_err(|_| config_err(format!("unknown section [{key}]")))?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: DEFAULT_SEED,
            replicas: None,
            output_dir: default_output_dir(),
            threads: None,
            params: Params::default(),
        }
    }

    /// Merges an optional file with command-line overrides.
    pub fn resolve(file: Option<&ConfigFile>, over: &Overrides) -> Result<Self> {
        let experiment = over
            .experiment
            .or(file.and_then(|f| f.experiment))
            .ok_or_else(|| config_err("no experiment given"))?;
        let base = file
            .and_then(|f| f.sections.get(experiment.name()))
            .cloned()
            .unwrap_or_default();
        Ok(Self {
            experiment,
            seed: over.seed.or(file.and_then(|f| f.seed)).unwrap_or(DEFAULT_SEED),
            replicas: over.replicas.or(file.and_then(|f| f.replicas)),
            output_dir: over
                .output_dir
                .clone()
                .or(file.and_then(|f| f.output_dir.clone()))
                .unwrap_or_else(default_output_dir),
            threads: over.threads.or(file.and_then(|f| f.threads)),
            params: base.overlay(&over.params),
        })
    }

    pub fn validate(&self) -> Result<Plan> {
        if self.replicas == Some(0) {
            return Err(config_err("replicas must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(config_err("threads must be at least 1"));
        }
        Plan::build(self)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("{name} = {v} must be positive and finite")))
    }
}

fn at_least(name: &str, v: u64, min: u64) -> Result<u64> {
    if v >= min {
        Ok(v)
    } else {
        Err(config_err(format!("{name} = {v} must be at least {min}")))
    }
}

fn window(w: [f64; 2]) -> Result<(f64, f64)> {
    if w[0] > 0.0 && w[1] >= w[0] && w[1].is_finite() {
        Ok((w[0], w[1]))
    } else {
        Err(config_err(format!(
            "window [{}, {}] must be positive and ordered",
            w[0], w[1]
        )))
    }
}

fn increasing(name: &str, v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite() || *x < 0.0) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err(format!(
            "{name} must be a nonempty increasing list of nonnegative numbers"
        )));
    }
    Ok(v.to_vec())
}

fn policy(p: &Params, default: StepPolicy) -> Result<StepPolicy> {
    let ratio = p.step_ratio.map(|r| positive("step_ratio", r)).transpose()?;
    let policy = match p.policy.as_deref() {
        None => match (default, ratio) {
            (StepPolicy::Adaptive { .. }, Some(r)) => StepPolicy::Adaptive { ratio: r },
            (StepPolicy::ScaleInvariant { .. }, Some(r)) => StepPolicy::ScaleInvariant { ratio: r },
            (d, _) => d,
        },
        Some("uniform") => StepPolicy::Uniform,
        Some("adaptive") => StepPolicy::Adaptive {
            ratio: ratio.unwrap_or(0.01),
        },
        Some("scale-invariant") => StepPolicy::ScaleInvariant {
            ratio: ratio.unwrap_or(0.01),
        },
        Some(other) => return Err(config_err(format!("unknown step policy '{other}'"))),
    };
    if let StepPolicy::Adaptive { ratio } | StepPolicy::ScaleInvariant { ratio } = policy {
        if ratio > 1.0 {
            return Err(config_err(format!("step_ratio {ratio} must not exceed 1")));
        }
    }
    Ok(policy)
}

/// A validated experiment with every parameter resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Plan {
    XiLaw {
        samples: u64,
    },
    GammaRoot {
        quadrature: QuadratureSpec,
    },
    SkeletonTail {
        replicas: u64,
        t_grid: Vec<f64>,
        barrier: f64,
        fit_range: (f64, f64),
        method: SkeletonMethod,
    },
    RenewalDrift {
        replicas: u64,
        u_max: f64,
        delta: f64,
    },
    Kappa {
        replicas: u64,
        u_max: f64,
        delta: f64,
    },
    BesselMin {
        samples: u64,
        levels: Vec<f64>,
        ks_samples: u64,
        paths: u64,
        dt: f64,
        stop_ratio: f64,
    },
    BesselTail {
        samples: u64,
        u_grid: Vec<f64>,
    },
    BesselDrift {
        replicas: u64,
        u_max: f64,
        eps: f64,
        du: f64,
    },
    FvPath {
        fv: FvConfig,
    },
    HnSn {
        replicas: u64,
        fv: FvConfig,
        y1_runs: u64,
        y1_dt: f64,
    },
    SpineDrift {
        replicas: u64,
        delta: f64,
        window: (f64, f64),
    },
    Discriminate {
        replicas: u64,
        window: (f64, f64),
        delta: f64,
        eps: f64,
        du: f64,
        folds: usize,
        threshold: Option<f64>,
    },
    Lil {
        replicas: u64,
        fv: FvConfig,
    },
}

impl Plan {
    fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let p = &cfg.params;
        let reps = |default: u64, min: u64| at_least("replicas", cfg.replicas.unwrap_or(default), min);
        let f = |v: Option<f64>, name: &str, default: f64| positive(name, v.unwrap_or(default));
        Ok(match cfg.experiment {
            Experiment::XiLaw => Plan::XiLaw {
                samples: at_least("samples", p.samples.or(cfg.replicas).unwrap_or(100_000), 100)?,
            },
            Experiment::GammaRoot => Plan::GammaRoot {
                quadrature: QuadratureSpec::default(),
            },
            Experiment::SkeletonTail => {
                let t_grid = increasing(
                    "t_grid",
                    p.t_grid
                        .as_deref()
                        .unwrap_or(&[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]),
                )?;
                let t_max = *t_grid.last().unwrap();
                let barrier = f(p.barrier, "barrier", t_max + 10.0)?;
                if barrier < t_max + 10.0 {
                    return Err(config_err(format!(
                        "barrier must be at least max(t_grid) + 10 = {}",
                        t_max + 10.0
                    )));
                }
                let (lo, hi) = window(p.window.unwrap_or([1.0, 4.0]))?;
                Plan::SkeletonTail {
                    replicas: reps(1_000_000, 100)?,
                    t_grid,
                    barrier,
                    fit_range: (lo, hi),
                    method: p.method.unwrap_or_default(),
                }
            }
            Experiment::RenewalDrift => Plan::RenewalDrift {
                replicas: reps(1, 1)?,
                u_max: f(p.u_max, "u_max", 1e4)?,
                delta: f(p.delta, "delta", 1e-4)?,
            },
            Experiment::Kappa => Plan::Kappa {
                replicas: reps(50, 2)?,
                u_max: f(p.u_max, "u_max", 1e4)?,
                delta: f(p.delta, "delta", 1e-4)?,
            },
            Experiment::BesselMin => {
                let levels = increasing("levels", p.levels.as_deref().unwrap_or(&[0.1, 0.5, 0.9]))?;
                if levels.iter().any(|&a| a <= 0.0 || a >= 1.0) {
                    return Err(config_err("levels must lie in (0, 1)"));
                }
                let stop_ratio = f(p.stop_ratio, "stop_ratio", 0.01)?;
                if stop_ratio >= 1.0 {
                    return Err(config_err("stop_ratio must be below 1"));
                }
                Plan::BesselMin {
                    samples: reps(1_000_000, 100)?,
                    levels,
                    ks_samples: at_least("samples", p.samples.unwrap_or(100_000), 100)?,
                    paths: at_least("paths", p.paths.unwrap_or(10_000), 100)?,
                    dt: f(p.dt, "dt", 1e-4)?,
                    stop_ratio,
                }
            }
            Experiment::BesselTail => {
                let u_grid = increasing("u_grid", p.u_grid.as_deref().unwrap_or(&[1.0, 2.0, 3.0]))?;
                if u_grid[0] <= 0.0 {
                    return Err(config_err("u_grid entries must be positive"));
                }
                Plan::BesselTail {
                    samples: reps(1_000_000, 100)?,
                    u_grid,
                }
            }
            Experiment::BesselDrift => {
                let eps = f(p.eps, "eps", 1e-3)?;
                if eps > 0.1 {
                    return Err(config_err("eps must not exceed 0.1"));
                }
                Plan::BesselDrift {
                    replicas: reps(100, 2)?,
                    u_max: f(p.u_max, "u_max", 100.0)?,
                    eps,
                    du: f(p.du, "du", 0.01)?,
                }
            }
            Experiment::FvPath => {
                let fv = FvConfig::new(f(p.y0, "y0", 1.0)?, f(p.dt, "dt", 1e-4)?, p.branches.unwrap_or(20))
                    .with_policy(policy(p, StepPolicy::Adaptive { ratio: 0.01 })?);
                fv.validate().map_err(|e| config_err(e.to_string()))?;
                Plan::FvPath { fv }
            }
            Experiment::HnSn => {
                let dt = f(p.dt, "dt", 1e-5)?;
                let fv = FvConfig::new(f(p.y0, "y0", 1.0)?, dt, p.branches.unwrap_or(20))
                    .with_policy(policy(p, StepPolicy::Adaptive { ratio: 0.01 })?);
                fv.validate().map_err(|e| config_err(e.to_string()))?;
                Plan::HnSn {
                    replicas: reps(100, 1)?,
                    fv,
                    y1_runs: at_least("samples", p.samples.unwrap_or(10_000), 100)?,
                    y1_dt: dt,
                }
            }
            Experiment::SpineDrift => Plan::SpineDrift {
                replicas: reps(100, 2)?,
                delta: f(p.delta, "delta", 1e-4)?,
                window: window(p.window.unwrap_or([5e3, 1e4]))?,
            },
            Experiment::Discriminate => {
                let replicas = reps(100, 4)?;
                let folds = p.folds.unwrap_or(10);
                if folds < 2 || folds as u64 > replicas {
                    return Err(config_err(format!("folds = {folds} must lie in [2, replicas]")));
                }
                Plan::Discriminate {
                    replicas,
                    window: window(p.window.unwrap_or([5e3, 1e4]))?,
                    delta: f(p.delta, "delta", 1e-4)?,
                    eps: f(p.eps, "eps", 1e-3)?,
                    du: f(p.du, "du", 0.01)?,
                    folds,
                    threshold: p
                        .threshold
                        .map(|t| {
                            if t.is_finite() {
                                Ok(t)
                            } else {
                                Err(config_err("threshold must be finite"))
                            }
                        })
                        .transpose()?,
                }
            }
            Experiment::Lil => {
                let fv = FvConfig::new(1.0, f(p.dt, "dt", 1e-4)?, p.branches.unwrap_or(1_000_000))
                    .with_policy(policy(p, StepPolicy::ScaleInvariant { ratio: 0.01 })?)
                    .with_horizon(f(p.horizon, "horizon", 1e6)?)
                    .branches_only();
                fv.validate().map_err(|e| config_err(e.to_string()))?;
                Plan::Lil {
                    replicas: reps(20, 1)?,
                    fv,
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// A published closed form or constant.
    Paper,
    /// Computed here from closed forms or quadrature.
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
}

fn reference(name: &str, value: f64, provenance: Provenance) -> Reference {
    Reference {
        name: name.into(),
        value,
        provenance,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    pub plan: Plan,
    pub wall_clock_seconds: f64,
    pub references: Vec<Reference>,
    pub results: Value,
    pub artifacts: Vec<String>,
}

/// What an experiment produced, before anything is written.
pub struct Outcome {
    pub references: Vec<Reference>,
    pub results: Value,
    pub files: Vec<(String, Vec<u8>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub report: Report,
}

/// Validates, runs and writes one experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let plan = cfg.validate()?;
    let start = Instant::now();
    let outcome = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| config_err(e.to_string()))?
            .install(|| execute(&plan, cfg.seed))?,
        None => execute(&plan, cfg.seed)?,
    };
    let mut artifacts: Vec<String> = outcome.files.iter().map(|(n, _)| n.clone()).collect();
    artifacts.push("report.json".into());
    let report = Report {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment,
        seed: cfg.seed,
        plan,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        references: outcome.references,
        results: outcome.results,
        artifacts,
    };
    let mut files = outcome.files;
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    files.push(("report.json".into(), json));
    let dir = cfg.output_dir.join(cfg.experiment.name());
    publish_dir(&dir, &files)?;
    Ok(RunSummary { dir, report })
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `files` into a fresh sibling directory and swaps it in for `dir`.
fn publish_dir(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let parent = dir.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("run");
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    for (file, bytes) in files {
        crate::output::write_atomic(&staging.join(file), bytes)?;
    }
    let retired = parent.join(format!(".{name}.old-{}", std::process::id()));
    if dir.exists() {
        fs::rename(dir, &retired).map_err(|e| io_err(dir, e))?;
    }
    fs::rename(&staging, dir).map_err(|e| io_err(dir, e))?;
    if retired.exists() {
        fs::remove_dir_all(&retired).map_err(|e| io_err(&retired, e))?;
    }
    Ok(())
}

pub fn execute(plan: &Plan, seed: u64) -> Result<Outcome> {
    match plan {
        Plan::XiLaw { samples } => xi_law(seed, *samples),
        Plan::GammaRoot { quadrature } => gamma_root(quadrature),
        Plan::SkeletonTail {
            replicas,
            t_grid,
            barrier,
            fit_range,
            method,
        } => skeleton_tail(seed, *replicas, t_grid, *barrier, *fit_range, *method),
        Plan::RenewalDrift { replicas, u_max, delta } => renewal_drift(seed, *replicas, *u_max, *delta),
        Plan::Kappa { replicas, u_max, delta } => kappa(seed, *replicas, *u_max, *delta),
        Plan::BesselMin {
            samples,
            levels,
            ks_samples,
            paths,
            dt,
            stop_ratio,
        } => bessel_min(seed, *samples, levels, *ks_samples, *paths, *dt, *stop_ratio),
        Plan::BesselTail { samples, u_grid } => bessel_tail(seed, *samples, u_grid),
        Plan::BesselDrift {
            replicas,
            u_max,
            eps,
            du,
        } => bessel_drift(seed, *replicas, *u_max, *eps, *du),
        Plan::FvPath { fv } => fv_path(seed, fv),
        Plan::HnSn {
            replicas,
            fv,
            y1_runs,
            y1_dt,
        } => hn_sn(seed, *replicas, fv, *y1_runs, *y1_dt),
        Plan::SpineDrift {
            replicas,
            delta,
            window,
        } => spine_drift(seed, *replicas, *delta, *window),
        Plan::Discriminate {
            replicas,
            window,
            delta,
            eps,
            du,
            folds,
            threshold,
        } => discriminate(seed, *replicas, *window, *delta, *eps, *du, *folds, *threshold),
        Plan::Lil { replicas, fv } => lil(seed, *replicas, fv),
    }
}

/// `n` step-factor draws; draw `i` comes from stream `i / 65536`.
pub fn step_factor_sample(seed: u64, n: u64) -> Vec<f64> {
    const CHUNK: u64 = 1 << 16;
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rs = RandomSource::new(seed, c);
            (0..CHUNK.min(n - c * CHUNK)).map(move |_| sample_step_factor(&mut rs))
        })
        .collect()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Serialize)]
struct CdfRow {
    y: f64,
    empirical_cdf: f64,
    exact_cdf: f64,
}

fn xi_law(seed: u64, samples: u64) -> Result<Outcome> {
    let xs = step_factor_sample(seed, samples);
    let ks = ks_one_sample(&xs, xi_cdf)?;
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let log_mean = mean_ci(&logs)?;
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let rows: Vec<CdfRow> = (1..200)
        .map(|k| {
            let y = xi_quantile(k as f64 / 200.0).expect("p in (0, 1)");
            CdfRow {
                y,
                empirical_cdf: sorted.partition_point(|&x| x <= y) as f64 / samples as f64,
                exact_cdf: xi_cdf(y),
            }
        })
        .collect();
    Ok(Outcome {
        references: vec![
            reference("median", std::f64::consts::SQRT_2, Provenance::Derived),
            reference("mean_log_step", LN_SQRT2, Provenance::Paper),
        ],
        results: json!({
            "samples": samples,
            "ks": ks,
            "median": median(&xs),
            "mean_log_step": log_mean,
        }),
        files: vec![("xi_law.csv".into(), csv_bytes(&rows)?)],
    })
}

#[derive(Serialize)]
struct MomentRow {
    gamma: f64,
    moment: f64,
}

fn gamma_root(spec: &QuadratureSpec) -> Result<Outcome> {
    let root = solve_tail_exponent(spec)?;
    let m1 = xi_neg_moment(1.0, spec)?;
    let rows: Vec<MomentRow> = (-19..=19)
        .map(|k| {
            let gamma = k as f64 / 10.0;
            Ok(MomentRow {
                gamma,
                moment: xi_neg_moment(gamma, spec)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Outcome {
        references: vec![
            reference("tail_exponent", 1.0, Provenance::Paper),
            reference("neg_moment_at_1", 1.0, Provenance::Paper),
        ],
        results: json!({ "root": root, "neg_moment_at_1": m1 }),
        files: vec![("moments.csv".into(), csv_bytes(&rows)?)],
    })
}

#[derive(Serialize)]
struct TailRow {
    t: f64,
    survival: f64,
    stderr: f64,
    c_hat: f64,
}

fn skeleton_tail(
    seed: u64,
    replicas: u64,
    t_grid: &[f64],
    barrier: f64,
    fit_range: (f64, f64),
    method: SkeletonMethod,
) -> Result<Outcome> {
    let curve = crate::skeleton::tail_curve_with(seed, replicas, t_grid, barrier, method)?;
    let cells: Vec<TailCell> = curve
        .cells()
        .into_iter()
        .filter(|c| c.t >= fit_range.0 && c.t <= fit_range.1)
        .collect();
    let fit = exp_tail_fit(&cells)?;
    let rows: Vec<TailRow> = curve
        .points
        .iter()
        .map(|p| TailRow {
            t: p.t,
            survival: p.survival.estimate,
            stderr: p.survival.stderr,
            c_hat: p.c_hat,
        })
        .collect();
    Ok(Outcome {
        references: vec![reference("tail_slope", -1.0, Provenance::Paper)],
        results: json!({ "fit": fit, "curve": curve }),
        files: vec![("tail.csv".into(), csv_bytes(&rows)?)],
    })
}

#[derive(Serialize)]
struct BatchRow {
    u: f64,
    z1: f64,
}

fn strip_references() -> Vec<Reference> {
    vec![
        reference("kappa", KAPPA, Provenance::Paper),
        reference("jump_rate", 1.0 / EXIT_MEAN, Provenance::Paper),
        reference("exit_mean", EXIT_MEAN, Provenance::Paper),
    ]
}

fn renewal_drift(seed: u64, replicas: u64, u_max: f64, delta: f64) -> Result<Outcome> {
    let config = StripConfig::new(u_max, delta).without_excess();
    let traces = strip_ensemble(seed, 0, replicas, &config, |trace| {
        let est = renewal_drift_estimate(&trace)?;
        let rows: Vec<BatchRow> = trace
            .batch_times
            .iter()
            .zip(&trace.batch_z1)
            .map(|(&u, &z1)| BatchRow { u, z1 })
            .collect();
        Ok((est, trace.jump_count() as f64 / trace.horizon, rows))
    })?;
    let first_rows = csv_bytes(&traces[0].2)?;
    let estimates: Vec<&EstimateReport> = traces.iter().map(|t| &t.0).collect();
    Ok(Outcome {
        references: strip_references(),
        results: json!({
            "estimates": estimates,
            "jump_rates": traces.iter().map(|t| t.1).collect::<Vec<_>>(),
        }),
        files: vec![("batches.csv".into(), first_rows)],
    })
}

fn kappa(seed: u64, replicas: u64, u_max: f64, delta: f64) -> Result<Outcome> {
    let config = StripConfig::new(u_max, delta).without_excess();
    let summaries = strip_ensemble(seed, 0, replicas, &config, |t| summarize(&t))?;
    let est = kappa_estimate(&summaries, seed)?;
    let rates: Vec<f64> = summaries.iter().map(|s| s.jumps as f64 / s.horizon).collect();
    let gaps: Vec<f64> = summaries.iter().map(|s| s.mean_gap).collect();
    Ok(Outcome {
        references: strip_references(),
        results: json!({
            "kappa": est,
            "jump_rate": mean_ci(&rates)?,
            "exit_mean": mean_ci(&gaps)?,
        }),
        files: vec![("replicas.csv".into(), csv_bytes(&summaries)?)],
    })
}

#[derive(Serialize)]
struct MinRow {
    a: f64,
    estimate: f64,
    stderr: f64,
    exact: f64,
}

fn bessel_min(
    seed: u64,
    samples: u64,
    levels: &[f64],
    ks_samples: u64,
    paths: u64,
    dt: f64,
    stop_ratio: f64,
) -> Result<Outcome> {
    let probs = min_probabilities(seed, levels, samples)?;
    let mins = exact_min_sample(seed.wrapping_add(1), ks_samples);
    let exp_ks = ks_one_sample(&mins.iter().map(|m| -m.ln()).collect::<Vec<_>>(), |x| {
        if x <= 0.0 {
            0.0
        } else {
            -(-x).exp_m1()
        }
    })?;
    let path_check = truncated_min_vs_exact(seed.wrapping_add(2), dt, paths, stop_ratio)?;
    let rows: Vec<MinRow> = probs
        .iter()
        .map(|p| MinRow {
            a: p.a,
            estimate: p.estimate.estimate,
            stderr: p.estimate.stderr,
            exact: p.a,
        })
        .collect();
    Ok(Outcome {
        references: vec![reference("min_cdf_slope", 1.0, Provenance::Paper)],
        results: json!({
            "probabilities": probs,
            "neg_log_min_vs_exp1": exp_ks,
            "path_minimum": path_check,
        }),
        files: vec![("min_law.csv".into(), csv_bytes(&rows)?)],
    })
}

#[derive(Serialize)]
struct BesselTailRow {
    u: f64,
    hits: u64,
    survival: f64,
    log_rate: Option<f64>,
    stderr: Option<f64>,
}

fn bessel_tail(seed: u64, samples: u64, u_grid: &[f64]) -> Result<Outcome> {
    let cells = bessel_tail_check(seed, u_grid, samples)?;
    let rows: Vec<BesselTailRow> = cells
        .iter()
        .map(|c| BesselTailRow {
            u: c.u,
            hits: c.hits,
            survival: c.hits as f64 / c.n as f64,
            log_rate: c.log_rate.as_ref().map(|r| r.estimate),
            stderr: c.log_rate.as_ref().map(|r| r.stderr),
        })
        .collect();
    Ok(Outcome {
        references: vec![reference("log_rate", -1.0, Provenance::Paper)],
        results: json!({ "cells": cells }),
        files: vec![("tail.csv".into(), csv_bytes(&rows)?)],
    })
}

#[derive(Serialize)]
struct DriftRow {
    stream: u64,
    drift: f64,
    increment_variance: f64,
}

/// Unit-`u` increments of `Ĝ(u) − u/2` on a grid of spacing `du`.
pub fn unit_increments(g: &crate::path::PathGrid, du: f64) -> Vec<f64> {
    let per_unit = (1.0 / du).round() as usize;
    let units = (g.len() - 1) / per_unit;
    (0..units)
        .map(|k| g.values[(k + 1) * per_unit] - g.values[k * per_unit] - 0.5)
        .collect()
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn bessel_drift(seed: u64, replicas: u64, u_max: f64, eps: f64, du: f64) -> Result<Outcome> {
    if (1.0 / du - (1.0 / du).round()).abs() > 1e-9 {
        return Err(config_err("du must divide 1"));
    }
    let runs: Vec<(f64, Vec<f64>, Option<crate::path::PathGrid>)> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let g = simulate_intrinsic_log(&mut RandomSource::new(seed, i), 1.0, eps, u_max, du)?;
            let (u, v) = g.points().last().expect("grid is nonempty");
            let incr = unit_increments(&g, du);
            Ok((v / u, incr, (i == 0).then_some(g)))
        })
        .collect::<Result<_>>()?;
    let drifts: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let all_incr: Vec<f64> = runs.iter().flat_map(|r| r.1.iter().copied()).collect();
    let rows: Vec<DriftRow> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| DriftRow {
            stream: i as u64,
            drift: r.0,
            increment_variance: if r.1.len() > 1 { variance(&r.1) } else { f64::NAN },
        })
        .collect();
    let first = runs[0].2.as_ref().expect("replica 0 keeps its path");
    Ok(Outcome {
        references: vec![
            reference("intrinsic_drift", 0.5, Provenance::Paper),
            reference("increment_variance", 1.0, Provenance::Paper),
        ],
        results: json!({
            "drift": mean_ci(&drifts)?,
            "increment_variance": if all_incr.len() > 1 { variance(&all_incr) } else { f64::NAN },
            "increments": all_incr.len(),
        }),
        files: vec![
            ("intrinsic.csv".into(), csv_bytes(&intrinsic_rows(first))?),
            ("replicas.csv".into(), csv_bytes(&rows)?),
        ],
    })
}

fn fv_path(seed: u64, fv: &FvConfig) -> Result<Outcome> {
    let traj = simulate_fv_with(&mut RandomSource::new(seed, 0), fv)?;
    let seq = hn_sn_sequence(&traj)?;
    let meta = trajectory_meta(&traj);
    let mut meta_json = serde_json::to_vec_pretty(&meta)?;
    meta_json.push(b'\n');
    Ok(Outcome {
        references: vec![],
        results: json!({
            "branches": traj.branch_count(),
            "end_time": traj.end_time,
            "steps": traj.steps,
            "hn_sn": seq,
        }),
        files: vec![
            ("trajectory.csv".into(), csv_bytes(&trajectory_rows(&traj)?)?),
            ("trajectory_meta.json".into(), meta_json),
            ("hn_sn.csv".into(), csv_bytes(&seq.entries)?),
        ],
    })
}

#[derive(Serialize)]
struct HnSnRow {
    replica: u64,
    n: usize,
    t: f64,
    h: f64,
    s: f64,
}

/// First-branch ratios `Y_1/y0` from `runs` uniform-step runs; run `i`
/// uses stream `i`.
pub fn first_branch_sample(seed: u64, runs: u64, dt: f64) -> Result<Vec<f64>> {
    let cfg = FvConfig::new(1.0, dt, 1).branches_only();
    (0..runs)
        .into_par_iter()
        .map(|i| Ok(simulate_fv_with(&mut RandomSource::new(seed, i), &cfg)?.branch_values[1]))
        .collect()
}

/// `(H_n, S_n)` sequences of `replicas` trajectories.
pub fn hn_sn_ensemble(seed: u64, replicas: u64, fv: &FvConfig) -> Result<Vec<Vec<HnSn>>> {
    (0..replicas)
        .into_par_iter()
        .map(|i| Ok(hn_sn_sequence(&simulate_fv_with(&mut RandomSource::new(seed, i), fv)?)?.entries))
        .collect()
}

fn hn_sn(seed: u64, replicas: u64, fv: &FvConfig, y1_runs: u64, y1_dt: f64) -> Result<Outcome> {
    let y1 = first_branch_sample(seed, y1_runs, y1_dt)?;
    let oracle = step_factor_sample(seed.wrapping_add(1), y1_runs);
    let ks_exact = ks_one_sample(&y1, xi_cdf)?;
    let ks_two = ks_two_sample(&y1, &oracle)?;
    let seqs = hn_sn_ensemble(seed.wrapping_add(2), replicas, fv)?;
    let rows: Vec<HnSnRow> = seqs
        .iter()
        .enumerate()
        .flat_map(|(r, s)| {
            s.iter().map(move |e| HnSnRow {
                replica: r as u64,
                n: e.n,
                t: e.t,
                h: e.h,
                s: e.s,
            })
        })
        .collect();
    let violations = rows.iter().filter(|r| r.h > r.s).count();
    Ok(Outcome {
        references: vec![],
        results: json!({
            "y1_ks_vs_step_law": ks_exact,
            "y1_ks_vs_skeleton_sample": ks_two,
            "reported_pairs": rows.len(),
            "h_above_s": violations,
        }),
        files: vec![("hn_sn.csv".into(), csv_bytes(&rows)?)],
    })
}

/// `ln √2` divided by the mean spine clock per branch: the drift of
/// `log J` on its own clock implied by the renewal structure.
pub fn spine_intrinsic_drift() -> Result<f64> {
    Ok(LN_SQRT2 / (EXIT_MEAN + excess_clock_mean(&QuadratureSpec::default())?))
}

fn spine_drift(seed: u64, replicas: u64, delta: f64, window: (f64, f64)) -> Result<Outcome> {
    let pop = spine_population(seed, 0, replicas, delta, window)?;
    let first = simulate_strip_with(
        &mut RandomSource::new(seed, 0),
        &StripConfig::new(window.1, delta).stopping_at_spine_clock(window.1),
    )?;
    let cps = spine_checkpoints(&first)?;
    let col =
        |f: fn(&SpinePathStats) -> f64| -> Result<EstimateReport> { mean_ci(&pop.iter().map(f).collect::<Vec<_>>()) };
    Ok(Outcome {
        references: vec![
            reference("kappa", KAPPA, Provenance::Paper),
            reference("bessel_intrinsic_drift", 0.5, Provenance::Paper),
            reference("spine_intrinsic_drift", spine_intrinsic_drift()?, Provenance::Derived),
        ],
        results: json!({
            "ratio_h": col(|p| p.final_ratio_h)?,
            "ratio_r": col(|p| p.final_ratio_r)?,
            "statistic": col(|p| p.statistic)?,
            "mean_excess": col(|p| p.mean_excess)?,
            "max_cap_hit_rate": pop.iter().map(|p| p.cap_hit_rate).fold(0.0, f64::max),
        }),
        files: vec![
            ("checkpoints.csv".into(), csv_bytes(&checkpoint_rows(&cps))?),
            ("replicas.csv".into(), csv_bytes(&pop)?),
        ],
    })
}

/// Spine and Bessel discriminator populations with the cross-validated
/// threshold rule.
pub struct Separation {
    pub spine: Vec<SpinePathStats>,
    pub bessel: Vec<BesselPathStats>,
    pub report: ClassificationReport,
}

impl Separation {
    pub fn spine_stats(&self) -> Vec<f64> {
        self.spine.iter().map(|p| p.statistic).collect()
    }

    pub fn bessel_stats(&self) -> Vec<f64> {
        self.bessel.iter().map(|p| p.statistic).collect()
    }

    /// `|mean_spine − mean_bessel| / sqrt(se_spine² + se_bessel²)`.
    pub fn separation_in_se(&self) -> Result<f64> {
        let s = mean_ci(&self.spine_stats())?;
        let b = mean_ci(&self.bessel_stats())?;
        Ok((s.estimate - b.estimate).abs() / s.stderr.hypot(b.stderr))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn separation(
    seed: u64,
    replicas: u64,
    window: (f64, f64),
    delta: f64,
    eps: f64,
    du: f64,
    folds: usize,
    threshold: Option<f64>,
) -> Result<Separation> {
    let spine = spine_population(seed, 0, replicas, delta, window)?;
    let bessel = bessel_population(seed, replicas, replicas, eps, du, window)?;
    let s: Vec<f64> = spine.iter().map(|p| p.statistic).collect();
    let b: Vec<f64> = bessel.iter().map(|p| p.statistic).collect();
    let cv = cross_validate(&s, &b, folds)?;
    let rule = match threshold {
        Some(t) => ThresholdRule {
            threshold: t,
            spine_above: cv.rule.spine_above,
        },
        None => cv.rule,
    };
    let paths = spine
        .iter()
        .map(|p| (PathClass::Spine, p.stream, p.statistic))
        .chain(bessel.iter().map(|p| (PathClass::Bessel, p.stream, p.statistic)))
        .map(|(class, stream, statistic)| ClassifiedPath {
            class,
            stream,
            statistic,
            label: rule.classify(statistic),
        })
        .collect();
    Ok(Separation {
        spine,
        bessel,
        report: ClassificationReport {
            schema_version: SCHEMA_VERSION,
            seed,
            window,
            threshold: rule.threshold,
            spine_above: rule.spine_above,
            cross_validation: cv,
            paths,
        },
    })
}

#[derive(Serialize)]
struct StatRow {
    class: PathClass,
    stream: u64,
    statistic: f64,
    label: PathClass,
}

#[allow(clippy::too_many_arguments)]
fn discriminate(
    seed: u64,
    replicas: u64,
    window: (f64, f64),
    delta: f64,
    eps: f64,
    du: f64,
    folds: usize,
    threshold: Option<f64>,
) -> Result<Outcome> {
    let sep = separation(seed, replicas, window, delta, eps, du, folds, threshold)?;
    let rows: Vec<StatRow> = sep
        .report
        .paths
        .iter()
        .map(|p| StatRow {
            class: p.class,
            stream: p.stream,
            statistic: p.statistic,
            label: p.label,
        })
        .collect();
    let mut class_json = serde_json::to_vec_pretty(&sep.report)?;
    class_json.push(b'\n');
    Ok(Outcome {
        references: vec![
            reference("bessel_intrinsic_drift", 0.5, Provenance::Paper),
            reference("kappa", KAPPA, Provenance::Paper),
            reference("spine_intrinsic_drift", spine_intrinsic_drift()?, Provenance::Derived),
        ],
        results: json!({
            "spine": mean_ci(&sep.spine_stats())?,
            "bessel": mean_ci(&sep.bessel_stats())?,
            "separation_in_se": sep.separation_in_se()?,
            "threshold": sep.report.threshold,
            "spine_above": sep.report.spine_above,
            "heldout_accuracy": sep.report.cross_validation.heldout_accuracy,
            "heldout_accuracy_spine_above": sep.report.cross_validation.heldout_accuracy_spine_above,
        }),
        files: vec![
            ("statistics.csv".into(), csv_bytes(&rows)?),
            ("classification.json".into(), class_json),
        ],
    })
}

#[derive(Serialize)]
struct LilRow {
    replica: u64,
    n: usize,
    t: f64,
    y: f64,
    lil: Option<f64>,
    running_max: Option<f64>,
}

/// Per-replica running maximum of the LIL statistic over branch times in
/// `[LIL_BURN_IN, horizon]`, with the rows behind it.
pub fn lil_ensemble(seed: u64, replicas: u64, fv: &FvConfig) -> Result<Vec<(Option<f64>, usize)>> {
    Ok(lil_runs(seed, replicas, fv)?
        .into_iter()
        .map(|r| (r.max, r.branches))
        .collect())
}

struct LilRun {
    max: Option<f64>,
    branches: usize,
    rows: Vec<LilRow>,
}

fn lil_runs(seed: u64, replicas: u64, fv: &FvConfig) -> Result<Vec<LilRun>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let traj = simulate_fv_with(&mut RandomSource::new(seed, r), fv)?;
            let series = lil_statistic_after(&traj.branch_times, &traj.branch_values, LIL_BURN_IN)?;
            let rows = traj
                .branch_times
                .iter()
                .zip(&traj.branch_values)
                .enumerate()
                .map(|(n, (&t, &y))| LilRow {
                    replica: r,
                    n,
                    t,
                    y,
                    lil: series.values[n],
                    running_max: series.running_max[n],
                })
                .collect();
            Ok(LilRun {
                max: series.final_max(),
                branches: traj.branch_count(),
                rows,
            })
        })
        .collect()
}

fn lil(seed: u64, replicas: u64, fv: &FvConfig) -> Result<Outcome> {
    let runs = lil_runs(seed, replicas, fv)?;
    let maxima: Vec<f64> = runs.iter().filter_map(|r| r.max).collect();
    let rows: Vec<&LilRow> = runs.iter().flat_map(|r| r.rows.iter()).collect();
    Ok(Outcome {
        references: vec![reference("lil_limsup", 1.0, Provenance::Paper)],
        results: json!({
            "burn_in": LIL_BURN_IN,
            "replicas_with_statistic": maxima.len(),
            "mean_running_max": if maxima.is_empty() { f64::NAN } else { maxima.iter().sum::<f64>() / maxima.len() as f64 },
            "median_running_max": if maxima.is_empty() { f64::NAN } else { median(&maxima) },
            "running_max": maxima,
            "branches": runs.iter().map(|r| r.branches).collect::<Vec<_>>(),
        }),
        files: vec![("lil.csv".into(), csv_bytes(&rows)?)],
    })
}
