//! Delay the load information by a sliding window and watch the gap react
//! to the staleness strategy: reporting the oldest admissible value behaves
//! like batching, reporting the freshest collapses to noiseless two-choice.
//!
//!     cargo run --release --example stale_information

use nba::harness::{run_experiment, ExperimentConfig};
use nba::process::{ProcessSpec, StalenessKind};

fn main() {
    let n = 1_000;
    let m = 1_000_000;
    let tau = 1_000;

    println!("tau = {tau}, n = {n}, m = {m}:");
    for staleness in [
        StalenessKind::Freshest,
        StalenessKind::RandomInWindow,
        StalenessKind::Oldest,
        StalenessKind::BatchBoundary,
    ] {
        let cfg = ExperimentConfig::new(
            ProcessSpec::TauDelay { tau, staleness },
            n,
            m,
            20,
            31_337,
        );
        let res = run_experiment(&cfg, 0).expect("run");
        println!("  {staleness:?}: mean gap {:.3}", res.summary.mean);
    }

    let batch = run_experiment(
        &ExperimentConfig::new(ProcessSpec::BBatch { b: tau }, n, m, 20, 31_337),
        0,
    )
    .expect("run");
    println!("  BBatch(b={tau}) for comparison: mean gap {:.3}", batch.summary.mean);
}
