//! Exhaustively enumerate small instances, compare against Monte Carlo, and
//! check the stochastic-dominance ordering between noisy and noiseless
//! allocation.
//!
//!     cargo run --release --example exact_enumeration

use nba::oracle::{enumerate_exact, monte_carlo_gap_pmf, total_variation};
use nba::potential::PotentialSpec;
use nba::process::ProcessSpec;

fn main() {
    let (n, m) = (3, 4);
    for spec in [
        ProcessSpec::two_choice(),
        ProcessSpec::GMyopicComp { g: 1 },
        ProcessSpec::GBounded { g: 1 },
    ] {
        let exact = enumerate_exact(&spec, n, m, &[PotentialSpec::Quadratic]).expect("enumerate");
        let mc = monte_carlo_gap_pmf(&spec, n, m, 200_000, 7);
        println!("{} at n={n}, m={m}:", spec.name());
        for (gap, p) in &exact.gap_pmf {
            println!("  P[gap = {gap:+.4}] = {p:.6}");
        }
        println!(
            "  total variation vs 2e5 Monte Carlo runs: {:.5}",
            total_variation(&exact.gap_pmf, &mc)
        );
        println!(
            "  exact E[quadratic potential] per step: {:?}",
            exact
                .expected_potentials
                .iter()
                .map(|row| (row[0] * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        );
    }

    let noisy = enumerate_exact(&ProcessSpec::GMyopicComp { g: 1 }, n, m, &[]).unwrap();
    let clean = enumerate_exact(&ProcessSpec::two_choice(), n, m, &[]).unwrap();
    println!(
        "\nmyopic(1) stochastically dominates two_choice: {}",
        noisy.stochastically_dominates(&clean)
    );
}
