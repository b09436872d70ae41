//! Compare batched load information against one-choice with the same ball
//! count: within the first batch the two processes coincide exactly, and
//! for batch sizes past n the long-run gap tracks the one-choice gap of a
//! single batch.
//!
//!     cargo run --release --example batching_vs_one_choice

use nba::harness::{run_experiment, ExperimentConfig};
use nba::process::ProcessSpec;

fn main() {
    let n = 1_000;
    println!(
        "{:>8} {:>22} {:>22}",
        "b", "b_batch gap at m=1000n", "one_choice gap at m=b"
    );
    for b in [10u64, 100, 1_000, 10_000, 100_000] {
        let batch = run_experiment(
            &ExperimentConfig::new(ProcessSpec::BBatch { b }, n, 1000 * n, 20, 41),
            0,
        )
        .expect("batch run");
        let one = run_experiment(
            &ExperimentConfig::new(ProcessSpec::OneChoice, n, b, 20, 42),
            0,
        )
        .expect("one-choice run");
        println!(
            "{b:>8} {:>22.3} {:>22.3}",
            batch.summary.mean, one.summary.mean
        );
    }
}
