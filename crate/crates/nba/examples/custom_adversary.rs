//! Plug a hand-written adversary strategy into the comparison framework.
//!
//! The framework rule is fixed: the adversary is consulted only when the
//! sampled pair's load difference is at most g; otherwise the lighter bin
//! receives the ball. This example implements a "load-parity" adversary
//! that steers controllable comparisons toward bins with odd load, and
//! measures how much worse it makes the gap than noiseless two-choice.
//!
//!     cargo run --release --example custom_adversary

use nba::load::LoadState;
use nba::process::{Adversary, ProcessSpec, Simulation};
use nba::rng::RngStream;

struct OddLoadFirst;

impl Adversary for OddLoadFirst {
    fn name(&self) -> String {
        "odd_load_first".into()
    }

    fn choose(
        &mut self,
        _t: u64,
        (a, b): (usize, usize),
        loads: &[u64],
        rng: &mut RngStream,
    ) -> usize {
        match (loads[a] % 2 == 1, loads[b] % 2 == 1) {
            (true, false) => a,
            (false, true) => b,
            _ => {
                if rng.coin() {
                    a
                } else {
                    b
                }
            }
        }
    }

    fn mass_on_first(&self, (a, b): (usize, usize), loads: &[u64]) -> Option<f64> {
        Some(match (loads[a] % 2 == 1, loads[b] % 2 == 1) {
            (true, false) => 1.0,
            (false, true) => 0.0,
            _ => 0.5,
        })
    }
}

/// One run of the comparison framework with a trait-object adversary.
fn run_with_adversary(
    adversary: &mut dyn Adversary,
    g: u64,
    n: usize,
    m: u64,
    seed: u64,
) -> f64 {
    let mut rng = RngStream::new(seed);
    let mut state = LoadState::new(n).unwrap();
    for t in 1..=m {
        let (a, b) = (rng.bin(n), rng.bin(n));
        let bin = if a == b {
            a
        } else if state.load(a).abs_diff(state.load(b)) > g {
            // uncontrollable: the framework forces the lighter bin
            if state.load(a) < state.load(b) {
                a
            } else {
                b
            }
        } else {
            adversary.choose(t, (a, b), state.loads(), &mut rng)
        };
        state.allocate(bin).unwrap();
    }
    state.gap()
}

fn main() {
    let (n, m, g) = (1_000, 1_000_000u64, 4);
    let runs = 10;

    let custom: f64 = (0..runs)
        .map(|r| run_with_adversary(&mut OddLoadFirst, g, n, m, 100 + r))
        .sum::<f64>()
        / runs as f64;

    let baseline: f64 = (0..runs)
        .map(|r| {
            let mut sim =
                Simulation::new(ProcessSpec::two_choice(), n, RngStream::new(100 + r)).unwrap();
            sim.run(m);
            sim.state.gap()
        })
        .sum::<f64>()
        / runs as f64;

    println!("mean gap over {runs} runs at n={n}, m={m}, g={g}:");
    println!("  two_choice (no noise): {baseline:.3}");
    println!("  odd_load_first adversary: {custom:.3}");
}
