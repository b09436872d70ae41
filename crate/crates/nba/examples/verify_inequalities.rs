//! Certify the one-step drop inequalities with the exact oracle and print
//! each suite's verdict.
//!
//!     cargo run --release --example verify_inequalities

use nba::oracle::verify::{run_suite, SuiteKind, VerifyOptions};

fn main() {
    let opts = VerifyOptions {
        trials: 2_000,
        seed: 0xBA115,
        negative_control: false,
    };
    for kind in SuiteKind::all() {
        let report = run_suite(kind, &opts);
        println!(
            "{:<20} trials {:>7}  violations {:>2}  worst margin {:+.3e}  {}",
            report.suite, report.trials, report.violations, report.worst_margin, report.notes
        );
    }

    // the same suites must flag deliberately corrupted vectors
    let controls = VerifyOptions {
        trials: 100,
        seed: 0xBA115,
        negative_control: true,
    };
    println!("\nnegative controls (corrupted inputs, violations expected):");
    for kind in SuiteKind::all() {
        let report = run_suite(kind, &controls);
        println!(
            "{:<20} violations {:>2}  {}",
            report.suite,
            report.violations,
            report
                .violation_samples
                .first()
                .map(|v| v.detail.as_str())
                .unwrap_or("")
        );
    }
}
