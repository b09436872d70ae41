//! Cross-module statistical sanity checks at moderate scale.

use nba::harness::{run_experiment, ExperimentConfig};
use nba::process::ProcessSpec;

#[test]
fn one_choice_gap_at_m_equals_n() {
    // classic single-choice maximum: at m = n = 1e4 the gap lands in
    // [4, 12] in at least 99% of runs
    let cfg = ExperimentConfig::new(ProcessSpec::OneChoice, 10_000, 10_000, 10_000, 8_888);
    let res = run_experiment(&cfg, 0).unwrap();
    let inside = res
        .summary
        .gaps
        .iter()
        .filter(|&&g| (4.0..=12.0).contains(&g))
        .count();
    assert!(
        inside as f64 >= 0.99 * 10_000.0,
        "only {inside}/10000 runs landed in [4, 12]; histogram {:?}",
        res.summary.histogram
    );
}

#[test]
fn batch_gap_grows_with_batch_size() {
    // beyond b ~ n the long-run gap tracks the stale-batch penalty
    let n = 1_000;
    let m = 1_000_000;
    let mut means = Vec::new();
    for b in [1_000u64, 10_000, 100_000] {
        let res = run_experiment(
            &ExperimentConfig::new(ProcessSpec::BBatch { b }, n, m, 20, 4),
            0,
        )
        .unwrap();
        means.push(res.summary.mean);
    }
    assert!(
        means[0] < means[1] && means[1] < means[2],
        "batch means not increasing: {means:?}"
    );
}

#[test]
fn two_choice_beats_one_choice_clearly() {
    let n = 10_000;
    let m = 1_000_000;
    let one = run_experiment(
        &ExperimentConfig::new(ProcessSpec::OneChoice, n, m, 20, 1),
        0,
    )
    .unwrap();
    let two = run_experiment(
        &ExperimentConfig::new(ProcessSpec::two_choice(), n, m, 20, 2),
        0,
    )
    .unwrap();
    assert!(
        two.summary.mean * 3.0 < one.summary.mean,
        "two-choice {} vs one-choice {}",
        two.summary.mean,
        one.summary.mean
    );
}
