use std::process::ExitCode;

use fvspine::verify::{Mode, Suite, SUITE_SEED};

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture`; only a bare
    // `--quick` changes behavior.
    let quick = std::env::args().any(|a| a == "--quick") || std::env::var_os("FVSPINE_QUICK").is_some();
    let mode = if quick { Mode::Quick } else { Mode::Full };
    println!("acceptance suite ({mode:?} mode, seed {SUITE_SEED})");
    let mut suite = Suite::new(mode, SUITE_SEED);
    let mut failed = 0;
    for id in 1..=11 {
        let result = suite.run_one(id);
        println!("{}", result.line());
        if !result.passed {
            failed += 1;
        }
    }
    println!("{} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
