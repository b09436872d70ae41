//! Sweep the noise parameter for the three named noisy processes and print
//! how the mean gap grows, a desk-sized version of the parameter plots.
//!
//!     cargo run --release --example noise_sweep

use nba::harness::{sweep, ExperimentConfig, SweepPoint};
use nba::process::{ProcessSpec, SigmaMode};

fn main() {
    let base = ExperimentConfig::new(ProcessSpec::two_choice(), 1_000, 1_000_000, 20, 99)
        .with_id("noise_sweep");

    let mut grid = Vec::new();
    for g in [1u64, 2, 4, 8, 16] {
        grid.push(SweepPoint {
            label: format!("g_bounded_{g}"),
            process: ProcessSpec::GBounded { g },
        });
        grid.push(SweepPoint {
            label: format!("g_myopic_{g}"),
            process: ProcessSpec::GMyopicComp { g },
        });
        grid.push(SweepPoint {
            label: format!("sigma_{g}"),
            process: ProcessSpec::SigmaNoisyLoad {
                sigma: g as f64,
                mode: SigmaMode::RhoFormula,
            },
        });
    }

    println!("{:<16} {:>10} {:>8}", "process", "mean gap", "sd");
    for row in sweep(&base, &grid, 0).expect("sweep") {
        match (row.mean_gap, row.std_dev) {
            (Some(mean), Some(sd)) => println!("{:<16} {mean:>10.3} {sd:>8.3}", row.label),
            _ => println!("{:<16} error: {}", row.label, row.error.unwrap_or_default()),
        }
    }
}
