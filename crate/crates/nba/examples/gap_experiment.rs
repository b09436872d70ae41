//! Run a reproducible gap experiment for a couple of processes and print
//! the summary statistics the tables are built from.
//!
//!     cargo run --release --example gap_experiment

use nba::harness::{run_experiment, ExperimentConfig};
use nba::process::ProcessSpec;

fn main() {
    let n = 1_000;
    let m = 1_000_000;
    for spec in [
        ProcessSpec::OneChoice,
        ProcessSpec::two_choice(),
        ProcessSpec::GBounded { g: 4 },
        ProcessSpec::GMyopicComp { g: 4 },
    ] {
        let cfg = ExperimentConfig::new(spec, n, m, 25, 2024);
        let result = run_experiment(&cfg, 0).expect("run");
        let s = &result.summary;
        print!(
            "{:>14} {:>4}: mean gap {:6.3} (sd {:5.3}, min {:4.1}, max {:4.1})  histogram ",
            result.config.process.name(),
            result.config.process.param(),
            s.mean,
            s.std_dev,
            s.min,
            s.max
        );
        for (gap, pct) in &s.histogram {
            print!("{gap}:{pct:.0}% ");
        }
        println!();
    }
}
