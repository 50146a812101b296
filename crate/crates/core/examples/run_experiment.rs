//! Running an experiment from a TOML configuration with overrides, as the
//! command-line tool does.

use fvspine::experiments::{run, ConfigFile, ExperimentConfig, Overrides};

fn main() -> fvspine::Result<()> {
    let file = ConfigFile::parse(
        r#"
        experiment = "kappa"
        seed = 42
        replicas = 4

        [kappa]
        u_max = 500.0
        delta = 1e-3
        "#,
    )?;
    let out = std::env::temp_dir().join("fvspine-example");
    let overrides = Overrides {
        output_dir: Some(out),
        ..Overrides::default()
    };
    let config = ExperimentConfig::resolve(Some(&file), &overrides)?;
    let summary = run(&config)?;
    println!("wrote {:?} to {}", summary.report.artifacts, summary.dir.display());
    println!("{}", serde_json::to_string_pretty(&summary.report.results["kappa"])?);
    Ok(())
}
