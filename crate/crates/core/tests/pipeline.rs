use fvspine::analytic::xi_cdf;
use fvspine::experiments::{
    execute, first_branch_sample, hn_sn_ensemble, step_factor_sample, Experiment, ExperimentConfig,
};
use fvspine::fv::{FvConfig, StepPolicy};
use fvspine::stats::{ks_one_sample, ks_two_sample};
use fvspine::verify::{Mode, Suite, SUITE_SEED};

#[test]
fn first_branch_value_follows_step_law() {
    let y1 = first_branch_sample(101, 500, 1e-4).unwrap();
    assert!(y1.iter().all(|&y| y > 0.0));
    let ks = ks_one_sample(&y1, xi_cdf).unwrap();
    assert!(ks.p_value > 1e-3, "{ks:?}");
    let oracle = step_factor_sample(102, 500);
    assert!(ks_two_sample(&y1, &oracle).unwrap().p_value > 1e-3);
}

#[test]
fn modulus_clock_dominates_spine_clock() {
    let fv = FvConfig::new(1.0, 1e-4, 8).with_policy(StepPolicy::Adaptive { ratio: 0.01 });
    let seqs = hn_sn_ensemble(5, 10, &fv).unwrap();
    let mut pairs = 0;
    for entry in seqs.iter().flatten() {
        assert!(entry.h <= entry.s, "{entry:?}");
        pairs += 1;
    }
    assert!(pairs > 0);
}

#[test]
fn execution_is_deterministic() {
    let mut cfg = ExperimentConfig::new(Experiment::Kappa);
    cfg.replicas = Some(3);
    cfg.params.u_max = Some(150.0);
    cfg.params.delta = Some(1e-3);
    let plan = cfg.validate().unwrap();
    let a = execute(&plan, 9).unwrap();
    let b = execute(&plan, 9).unwrap();
    assert_eq!(a.results, b.results);
    assert_eq!(a.files, b.files);
    let c = execute(&plan, 10).unwrap();
    assert_ne!(a.files, c.files);
}

#[test]
fn quick_suite_bessel_criteria() {
    let mut suite = Suite::new(Mode::Quick, SUITE_SEED);
    let report = suite.run_selected(&[7, 8]);
    for c in &report.criteria {
        assert!(c.passed, "{}", c.line());
    }
}
