//! A few acceptance criteria in quick mode.

use fvspine::verify::{Mode, Suite, SUITE_SEED};

fn main() {
    let mut suite = Suite::new(Mode::Quick, SUITE_SEED);
    let report = suite.run_selected(&[1, 2, 3, 7]);
    for c in &report.criteria {
        println!("{}", c.line());
    }
    println!("all passed: {}", report.passed);
}
