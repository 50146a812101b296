use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fvspine::experiments::{self, ConfigFile, Experiment, ExperimentConfig, Overrides, Params};
use fvspine::skeleton::SkeletonMethod;
use fvspine::verify::{Mode, Suite, SUITE_SEED};
use fvspine::Error;

#[derive(Parser)]
#[command(
    name = "fvspine",
    version,
    about = "Fleming-Viot spine and Bessel-3 simulation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step-factor sampler against its exact law.
    XiLaw(Flags),
    /// Positive root of the negative-moment equation.
    GammaRoot(Flags),
    /// Exponential tail of the log-skeleton minimum.
    SkeletonTail(Flags),
    /// Batch-means drift of the strip process.
    RenewalDrift(Flags),
    /// Drift estimate over strip replicas.
    Kappa(Flags),
    /// Bessel-3 minimum law and path-level minimum certification.
    BesselMin(Flags),
    /// Tail of the Bessel-3 log-infimum.
    BesselTail(Flags),
    /// Intrinsic drift and increment variance of log Bessel-3.
    BesselDrift(Flags),
    /// One Fleming-Viot trajectory with its spine.
    FvPath(Flags),
    /// First-branch law and the H_n <= S_n comparison.
    HnSn(Flags),
    /// Spine checkpoints on the strip clock.
    SpineDrift(Flags),
    /// Spine versus Bessel discriminator and threshold rule.
    Discriminate(Flags),
    /// Law-of-the-iterated-logarithm statistic of branch values.
    Lil(Flags),
    /// Run the experiment named in a config file.
    Run {
        #[arg(long)]
        experiment: Option<Experiment>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the acceptance suite.
    VerifyAll {
        #[arg(long)]
        quick: bool,
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// TOML file; flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    du: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    u_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<f64>,
    #[arg(long)]
    branches: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    horizon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    u_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    barrier: Option<f64>,
    /// Two comma-separated numbers, e.g. `5000,10000`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    window: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    stop_ratio: Option<f64>,
    /// `uniform`, `adaptive` or `scale-invariant`.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    step_ratio: Option<f64>,
    /// `XI_DIRECT` or `RENEWAL_STEP`.
    #[arg(long, value_parser = parse_method)]
    method: Option<SkeletonMethod>,
}

fn parse_method(s: &str) -> Result<SkeletonMethod, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_uppercase().replace('-', "_")))
        .map_err(|_| format!("unknown method '{s}'"))
}

impl Flags {
    fn overrides(&self, experiment: Option<Experiment>) -> Result<Overrides, Failure> {
        let window = match self.window.as_deref() {
            None => None,
            Some(&[lo, hi]) => Some([lo, hi]),
            Some(w) => return Err(Failure::Config(format!("--window takes two values, got {}", w.len()))),
        };
        Ok(Overrides {
            experiment,
            seed: self.seed,
            replicas: self.replicas,
            output_dir: self.output_dir.clone(),
            threads: self.threads,
            params: Params {
                dt: self.dt,
                delta: self.delta,
                eps: self.eps,
                du: self.du,
                u_max: self.u_max,
                y0: self.y0,
                branches: self.branches,
                horizon: self.horizon,
                t_grid: self.t_grid.clone(),
                u_grid: self.u_grid.clone(),
                levels: self.levels.clone(),
                barrier: self.barrier,
                window,
                threshold: self.threshold,
                folds: self.folds,
                samples: self.samples,
                paths: self.paths,
                stop_ratio: self.stop_ratio,
                policy: self.policy.clone(),
                step_ratio: self.step_ratio,
                method: self.method,
            },
        })
    }
}

enum Failure {
    Config(String),
    Acceptance,
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn run_experiment(experiment: Option<Experiment>, config: Option<&PathBuf>, flags: &Flags) -> Result<(), Failure> {
    let file = config.map(|p| ConfigFile::load(p)).transpose()?;
    let cfg = ExperimentConfig::resolve(file.as_ref(), &flags.overrides(experiment)?)?;
    let summary = experiments::run(&cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary.report.results).map_err(Error::from)?
    );
    eprintln!(
        "{} finished in {:.2}s; artifacts in {}",
        cfg.experiment,
        summary.report.wall_clock_seconds,
        summary.dir.display()
    );
    Ok(())
}

fn verify_all(
    quick: bool,
    criteria: &[u8],
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
) -> Result<(), Failure> {
    if let Some(&bad) = criteria.iter().find(|&&c| !(1..=11).contains(&c)) {
        return Err(Failure::Config(format!("no criterion {bad}")));
    }
    let ids: Vec<u8> = if criteria.is_empty() {
        (1..=11).collect()
    } else {
        criteria.to_vec()
    };
    let mode = if quick { Mode::Quick } else { Mode::Full };
    let mut suite = Suite::new(mode, seed.unwrap_or(SUITE_SEED));
    let report = match threads {
        Some(0) => return Err(Failure::Config("threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(e.to_string()))?
            .install(|| run_printing(&mut suite, &ids)),
        None => run_printing(&mut suite, &ids),
    };
    let dir = output_dir
        .unwrap_or_else(experiments::default_output_dir)
        .join("verify-all");
    let mut json = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
    json.push(b'\n');
    fvspine::output::write_atomic(&dir.join("summary.json"), &json)?;
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    println!("{passed}/{} criteria passed ({mode:?} mode)", report.criteria.len());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Acceptance)
    }
}

fn run_printing(suite: &mut Suite, ids: &[u8]) -> fvspine::verify::SuiteReport {
    let mut criteria = Vec::new();
    for &id in ids {
        let c = suite.run_one(id);
        println!("{}", c.line());
        criteria.push(c);
    }
    fvspine::verify::SuiteReport {
        schema_version: fvspine::output::SCHEMA_VERSION,
        mode: suite.mode,
        seed: suite.seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { experiment, flags } => match &flags.config {
            Some(config) => run_experiment(*experiment, Some(config), flags),
            None => Err(Failure::Config("run requires --config".into())),
        },
        Command::VerifyAll {
            quick,
            criteria,
            seed,
            output_dir,
            threads,
        } => verify_all(*quick, criteria, *seed, output_dir.clone(), *threads),
        Command::XiLaw(f) => run_experiment(Some(Experiment::XiLaw), f.config.as_ref(), f),
        Command::GammaRoot(f) => run_experiment(Some(Experiment::GammaRoot), f.config.as_ref(), f),
        Command::SkeletonTail(f) => run_experiment(Some(Experiment::SkeletonTail), f.config.as_ref(), f),
        Command::RenewalDrift(f) => run_experiment(Some(Experiment::RenewalDrift), f.config.as_ref(), f),
        Command::Kappa(f) => run_experiment(Some(Experiment::Kappa), f.config.as_ref(), f),
        Command::BesselMin(f) => run_experiment(Some(Experiment::BesselMin), f.config.as_ref(), f),
        Command::BesselTail(f) => run_experiment(Some(Experiment::BesselTail), f.config.as_ref(), f),
        Command::BesselDrift(f) => run_experiment(Some(Experiment::BesselDrift), f.config.as_ref(), f),
        Command::FvPath(f) => run_experiment(Some(Experiment::FvPath), f.config.as_ref(), f),
        Command::HnSn(f) => run_experiment(Some(Experiment::HnSn), f.config.as_ref(), f),
        Command::SpineDrift(f) => run_experiment(Some(Experiment::SpineDrift), f.config.as_ref(), f),
        Command::Discriminate(f) => run_experiment(Some(Experiment::Discriminate), f.config.as_ref(), f),
        Command::Lil(f) => run_experiment(Some(Experiment::Lil), f.config.as_ref(), f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Acceptance) => ExitCode::from(2),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
