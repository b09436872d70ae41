//! Numerical certification of the one-step drop inequalities.
//!
//! Each suite draws random or constructed states, computes the *exact*
//! allocation vector and expected one-step potential change, and checks the
//! corresponding inequality with zero tolerance:
//!
//! * `superexp_drop` — under the event K (every bin at normalized load
//!   `>= z - 1` receives mass `<= e^{-phi}/n`, `phi` in `[4, n]`):
//!   `E[Phi'] <= Phi (1 - 1/n) + 2`.
//! * `lambda_good_step` — for any comparison-adversary vector at a good
//!   step (`Delta <= D n g`), offset `c4 g`, `alpha <= 1/18`:
//!   `E[Lambda'] <= Lambda (1 - 2 alpha eps / n) + 18 alpha`.
//! * `lambda_any_step` — for any vector with `max q_i <= 2/n`,
//!   `alpha <= 1/2`: `E[Lambda'] <= Lambda (1 + 3 alpha / n)`.
//! * `quadratic_adv_comp` — for any comparison-adversary vector:
//!   `E[dUpsilon] <= -Delta/n + 2g + 1`.
//! * `gamma_bound` — the smoothed upper bound on `E[dGamma]` dominates the
//!   exact expectation for any vector and `gamma` in `(0, 1)`.
//! * `enumeration` — Monte Carlo gap distributions match exhaustive
//!   enumeration in total variation.
//!
//! A negative-control mode feeds each suite deliberately corrupted vectors
//! (mass moved outside the admissible window, gates skipped) and expects
//! violations; a suite that cannot flag those is broken regardless of how
//! many clean trials it passes.

use serde::Serialize;

use crate::load::LoadState;
use crate::oracle::{
    allocation_vector, check_gamma_bound, enumerate_exact, expected_change, k_event_holds,
    monte_carlo_gap_pmf, total_variation, AllocationVector,
};
use crate::potential::PotentialSpec;
use crate::process::{AdversaryKind, ProcessSpec, RhoSpec};
use crate::rng::RngStream;

pub const ALPHA: f64 = 1.0 / 18.0;
pub const EPS: f64 = 1.0 / 12.0;
pub const BIG_D: f64 = 365.0;
pub const C4: f64 = 730.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    SuperExpDrop,
    LambdaGoodStep,
    LambdaAnyStep,
    QuadraticAdvComp,
    GammaBound,
    Enumeration,
}

impl SuiteKind {
    pub fn all() -> [SuiteKind; 6] {
        [
            SuiteKind::SuperExpDrop,
            SuiteKind::LambdaGoodStep,
            SuiteKind::LambdaAnyStep,
            SuiteKind::QuadraticAdvComp,
            SuiteKind::GammaBound,
            SuiteKind::Enumeration,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::SuperExpDrop => "superexp_drop",
            SuiteKind::LambdaGoodStep => "lambda_good_step",
            SuiteKind::LambdaAnyStep => "lambda_any_step",
            SuiteKind::QuadraticAdvComp => "quadratic_adv_comp",
            SuiteKind::GammaBound => "gamma_bound",
            SuiteKind::Enumeration => "enumeration",
        }
    }

    pub fn parse(s: &str) -> Option<SuiteKind> {
        SuiteKind::all().into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub trial: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub detail: String,
    pub loads: Vec<u64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub trials: u64,
    pub violations: u64,
    /// Smallest `rhs - lhs` seen; negative means a violation occurred.
    pub worst_margin: f64,
    pub notes: String,
    /// First few violations, with full state and vector for reproduction.
    pub violation_samples: Vec<Violation>,
}

impl SuiteReport {
    fn new(suite: &'static str, trials: u64) -> Self {
        SuiteReport {
            suite,
            trials,
            violations: 0,
            worst_margin: f64::INFINITY,
            notes: String::new(),
            violation_samples: Vec::new(),
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, mk_detail: impl Fn() -> Violation) {
        let margin = rhs - lhs;
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if lhs > rhs {
            self.violations += 1;
            if self.violation_samples.len() < 5 {
                self.violation_samples.push(mk_detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub trials: u64,
    pub seed: u64,
    /// Replace honest trials with corrupted ones that must be flagged.
    pub negative_control: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: 10_000,
            seed: 0xBA115,
            negative_control: false,
        }
    }
}

pub fn run_suite(kind: SuiteKind, opts: &VerifyOptions) -> SuiteReport {
    match kind {
        SuiteKind::SuperExpDrop => superexp_suite(opts),
        SuiteKind::LambdaGoodStep => lambda_good_suite(opts),
        SuiteKind::LambdaAnyStep => lambda_any_suite(opts),
        SuiteKind::QuadraticAdvComp => quadratic_suite(opts),
        SuiteKind::GammaBound => gamma_suite(opts),
        SuiteKind::Enumeration => enumeration_suite(opts),
    }
}

pub fn run_suites(kinds: &[SuiteKind], opts: &VerifyOptions) -> Vec<SuiteReport> {
    kinds.iter().map(|&k| run_suite(k, opts)).collect()
}

fn trial_rng(opts: &VerifyOptions, suite: SuiteKind, trial: u64) -> RngStream {
    RngStream::substream(opts.seed ^ (suite as u64).wrapping_mul(0xA5A5_5A5A_0F0F_F0F0), trial)
}

fn random_loads(rng: &mut RngStream, n: usize, max: u64) -> Vec<u64> {
    (0..n).map(|_| rng.below(max + 1)).collect()
}

fn builtin_adversary(rng: &mut RngStream, state: &LoadState) -> AdversaryKind {
    match rng.below(4) {
        0 => AdversaryKind::GreedyMax,
        1 => AdversaryKind::CoinFlip,
        2 => AdversaryKind::AlwaysLighter,
        _ => {
            // random script over a few sampled bin pairs
            let n = state.n();
            let count = 1 + rng.bin(4);
            let reversals = (0..count)
                .map(|_| (rng.bin(n), rng.bin(n)))
                .filter(|(a, b)| a != b)
                .collect();
            AdversaryKind::Scripted { reversals }
        }
    }
}

// ---------------------------------------------------------------------------
// Suite (a): super-exponential drop under K
// ---------------------------------------------------------------------------

fn superexp_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut report = SuiteReport::new(SuiteKind::SuperExpDrop.name(), opts.trials);
    if opts.negative_control {
        return superexp_negative(report);
    }
    let (mut vacuous, mut process_backed, mut random_q) = (0u64, 0u64, 0u64);
    for trial in 0..opts.trials {
        let mut rng = trial_rng(opts, SuiteKind::SuperExpDrop, trial);

        let (state, q, phi, z) = match trial % 3 {
            0 => {
                // nothing at or above z - 1: K holds vacuously.
                // phi ranges over the lemma's full [4, n] window.
                let n = 5 + rng.bin(124);
                let state = LoadState::from_loads(&random_loads(&mut rng, n, 30)).unwrap();
                let view = state.normalized();
                let z = (view.y[0].ceil() as i64 + 2 + rng.below(5) as i64).max(1) as u64;
                let phi = 4.0 + rng.f64() * (n as f64 - 4.0);
                let q = allocation_vector(&ProcessSpec::two_choice(), &state).unwrap();
                vacuous += 1;
                (state, q, phi, z)
            }
            1 => {
                // one outlier high above the pack; its two-choice mass is
                // 1/n^2 <= e^{-phi}/n whenever phi <= ln n, so this mode
                // needs n >= e^4
                let n = 60 + rng.bin(69);
                let mut loads = random_loads(&mut rng, n, 20);
                let base_max = *loads.iter().max().unwrap();
                let excess = 5 + rng.below(25);
                loads[rng.bin(n)] = base_max + excess;
                let state = LoadState::from_loads(&loads).unwrap();
                let view = state.normalized();
                // z between the outlier and the pack
                let z = ((view.y[1].ceil() as i64) + 2).max(1) as u64;
                let phi_hi = (n as f64).ln().min(650.0 / (view.y[0] - z as f64 + 2.0).max(0.1));
                let phi = 4.0 + rng.f64() * (phi_hi - 4.0).max(0.0);
                let q = allocation_vector(&ProcessSpec::two_choice(), &state).unwrap();
                process_backed += 1;
                (state, q, phi, z)
            }
            _ => {
                // arbitrary allocation vector conditioned to satisfy K
                let n = 5 + rng.bin(124);
                let state = LoadState::from_loads(&random_loads(&mut rng, n, 40)).unwrap();
                let view = state.normalized();
                let mut z = (1 + rng.below(view.y[0].abs().ceil() as u64 + 2)).max(1);
                loop {
                    let heavy = view.y.iter().filter(|&&y| y >= z as f64 - 1.0).count();
                    if heavy < n {
                        break;
                    }
                    z += 1;
                }
                let phi = (4.0 + rng.f64() * 8.0)
                    .min(650.0 / (view.y[0] - z as f64 + 2.0).max(0.1))
                    .max(4.0);
                let cap = (-phi).exp() / n as f64;
                let mut q = vec![0.0; n];
                let mut heavy_total = 0.0;
                for (i, &y) in view.y.iter().enumerate() {
                    if y >= z as f64 - 1.0 {
                        q[i] = rng.f64() * cap;
                        heavy_total += q[i];
                    }
                }
                let mut weights: Vec<f64> = vec![0.0; n];
                let mut wsum = 0.0;
                for (i, &y) in view.y.iter().enumerate() {
                    if y < z as f64 - 1.0 {
                        weights[i] = 0.05 + rng.f64();
                        wsum += weights[i];
                    }
                }
                for i in 0..n {
                    if weights[i] > 0.0 {
                        q[i] += (1.0 - heavy_total) * weights[i] / wsum;
                    }
                }
                let q = AllocationVector {
                    q,
                    bin_of_rank: view.bin_of_rank.clone(),
                };
                random_q += 1;
                (state, q, phi, z)
            }
        };

        let view = state.normalized();
        if !k_event_holds(&q, &view, phi, z) {
            // construction failed to establish the hypothesis; not a trial
            continue;
        }
        let n = state.n();
        let pot = PotentialSpec::SuperExp { phi, z };
        let phi_now = pot.eval(&view).unwrap();
        let lhs = phi_now + expected_change(&pot, &q, &view).unwrap();
        let rhs = phi_now * (1.0 - 1.0 / n as f64) + 2.0;
        report.record(lhs, rhs, || Violation {
            trial,
            lhs,
            rhs,
            detail: format!("superexp drop failed at phi={phi}, z={z}, n={n}"),
            loads: state.loads().to_vec(),
            q: q.q.clone(),
        });
    }
    report.notes = format!(
        "modes: vacuous={vacuous} process_backed={process_backed} random_q={random_q}"
    );
    report
}

fn superexp_negative(mut report: SuiteReport) -> SuiteReport {
    // K is deliberately violated: the top bin holds probability 1.
    let n = 16;
    let mut loads = vec![50u64; n];
    loads[0] = 80;
    loads[n - 1] = 0;
    let state = LoadState::from_loads(&loads).unwrap();
    let view = state.normalized();
    let z = 20u64; // top bin sits ~10 above z
    let phi = 4.0;
    let mut q = vec![0.0; n];
    q[0] = 1.0;
    let q = AllocationVector {
        q,
        bin_of_rank: view.bin_of_rank.clone(),
    };
    assert!(!k_event_holds(&q, &view, phi, z));
    let pot = PotentialSpec::SuperExp { phi, z };
    let phi_now = pot.eval(&view).unwrap();
    let lhs = phi_now + expected_change(&pot, &q, &view).unwrap();
    let rhs = phi_now * (1.0 - 1.0 / n as f64) + 2.0;
    report.trials = 1;
    report.record(lhs, rhs, || Violation {
        trial: 0,
        lhs,
        rhs,
        detail: "negative control: K skipped, all mass on the top bin".into(),
        loads: state.loads().to_vec(),
        q: q.q.clone(),
    });
    report.notes = "negative control: expected at least one violation".into();
    report
}

// ---------------------------------------------------------------------------
// Suite (b): Lambda drop at good steps
// ---------------------------------------------------------------------------

/// Builds a state whose absolute-value potential respects `Delta <= D n g`
/// while still pushing a few bins beyond the `c4 g` offset on both sides.
fn good_step_state(rng: &mut RngStream, g: u64, with_extremes: bool) -> LoadState {
    let n = if with_extremes {
        16 + rng.bin(49)
    } else {
        2 + rng.bin(63)
    };
    let base = 900 + rng.below(400);
    let mut loads: Vec<u64> = (0..n).map(|_| base - 40 + rng.below(81)).collect();
    if with_extremes {
        let offset = C4 as u64 * g;
        let hot = 1 + rng.bin(2);
        let cold = 1 + rng.bin(2);
        for _ in 0..hot {
            let i = rng.bin(n);
            loads[i] = base + offset + 3 + rng.below(150);
        }
        for _ in 0..cold {
            let i = rng.bin(n);
            loads[i] = base.saturating_sub(offset + 3 + rng.below(150));
        }
    }
    LoadState::from_loads(&loads).unwrap()
}

fn lambda_good_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut report = SuiteReport::new(SuiteKind::LambdaGoodStep.name(), opts.trials);
    if opts.negative_control {
        return lambda_good_negative(report);
    }
    let (mut case2, mut case3, mut skipped_gate) = (0u64, 0u64, 0u64);
    for trial in 0..opts.trials {
        let mut rng = trial_rng(opts, SuiteKind::LambdaGoodStep, trial);
        let g = [1u64, 2, 4][rng.bin(3)];
        let alpha = if rng.coin() { ALPHA } else { ALPHA * rng.f64().max(0.05) };
        let with_extremes = trial % 2 == 0;
        let state = good_step_state(&mut rng, g, with_extremes);
        let n = state.n();
        let view = state.normalized();

        // good-step gate: Delta <= D n g
        let delta = view.abs_sum();
        if delta > BIG_D * n as f64 * g as f64 {
            skipped_gate += 1;
            continue;
        }
        let offset = C4 * g as f64;
        if view.y[0] > offset + 2.0 {
            case2 += 1;
        }
        if view.y[n - 1] < -offset - 2.0 {
            case3 += 1;
        }

        let adversary = builtin_adversary(&mut rng, &state);
        let spec = ProcessSpec::GAdvComp {
            g,
            adversary,
            strict: false,
        };
        let q = allocation_vector(&spec, &state).unwrap();
        let pot = PotentialSpec::Lambda { alpha, offset };
        let lambda = pot.eval(&view).unwrap();
        let lhs = lambda + expected_change(&pot, &q, &view).unwrap();
        let rhs = lambda * (1.0 - 2.0 * alpha * EPS / n as f64) + 18.0 * alpha;
        report.record(lhs, rhs, || Violation {
            trial,
            lhs,
            rhs,
            detail: format!("lambda good-step drop failed: g={g}, alpha={alpha}, n={n}"),
            loads: state.loads().to_vec(),
            q: q.q.clone(),
        });
    }
    report.notes = format!(
        "coverage: case2(y > c4 g + 2)={case2} case3(y < -c4 g - 2)={case3} gate_resamples={skipped_gate}"
    );
    report
}

fn lambda_good_negative(mut report: SuiteReport) -> SuiteReport {
    // A vector no g-Adv-Comp instance can produce: the far-overloaded bin
    // receives the whole unit of probability.
    let n = 64;
    let g = 1u64;
    let base = 1000u64;
    let mut loads = vec![base; n];
    loads[0] = base + C4 as u64 + 200;
    let state = LoadState::from_loads(&loads).unwrap();
    let view = state.normalized();
    assert!(view.abs_sum() <= BIG_D * n as f64); // still a good step
    let mut q = vec![0.0; n];
    q[0] = 1.0;
    let q = AllocationVector {
        q,
        bin_of_rank: view.bin_of_rank.clone(),
    };
    let pot = PotentialSpec::Lambda {
        alpha: ALPHA,
        offset: C4 * g as f64,
    };
    let lambda = pot.eval(&view).unwrap();
    let lhs = lambda + expected_change(&pot, &q, &view).unwrap();
    let rhs = lambda * (1.0 - 2.0 * ALPHA * EPS / n as f64) + 18.0 * ALPHA;
    report.trials = 1;
    report.record(lhs, rhs, || Violation {
        trial: 0,
        lhs,
        rhs,
        detail: "negative control: unit mass on a bin 60 above the offset".into(),
        loads: state.loads().to_vec(),
        q: q.q.clone(),
    });
    report.notes = "negative control: expected at least one violation".into();
    report
}

// ---------------------------------------------------------------------------
// Suite (c): Lambda bound at arbitrary steps
// ---------------------------------------------------------------------------

fn lambda_any_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut report = SuiteReport::new(SuiteKind::LambdaAnyStep.name(), opts.trials);
    if opts.negative_control {
        return lambda_any_negative(report);
    }
    for trial in 0..opts.trials {
        let mut rng = trial_rng(opts, SuiteKind::LambdaAnyStep, trial);
        let n = 2 + rng.bin(63);
        let state = LoadState::from_loads(&random_loads(&mut rng, n, 2000)).unwrap();
        let view = state.normalized();
        let alpha = (rng.f64() * 0.5).max(1e-3);
        let g = 1 + rng.below(4);
        let offset = C4 * g as f64;

        // every two-sample pairwise process obeys max q_i <= (2n-1)/n^2 < 2/n
        let spec: ProcessSpec = match rng.below(4) {
            0 => ProcessSpec::two_choice(),
            1 => ProcessSpec::GBounded { g },
            2 => ProcessSpec::GMyopicComp { g },
            _ => ProcessSpec::GAdvComp {
                g,
                adversary: builtin_adversary(&mut rng, &state),
                strict: false,
            },
        };
        let q = allocation_vector(&spec, &state).unwrap();
        debug_assert!(q.q.iter().all(|&v| v <= 2.0 / n as f64));

        let pot = PotentialSpec::Lambda { alpha, offset };
        let lambda = pot.eval(&view).unwrap();
        let lhs = lambda + expected_change(&pot, &q, &view).unwrap();
        let rhs = lambda * (1.0 + 3.0 * alpha / n as f64);
        report.record(lhs, rhs, || Violation {
            trial,
            lhs,
            rhs,
            detail: format!("lambda any-step bound failed: alpha={alpha}, n={n}"),
            loads: state.loads().to_vec(),
            q: q.q.clone(),
        });
    }
    report
}

fn lambda_any_negative(mut report: SuiteReport) -> SuiteReport {
    // max q_i = 1 >> 2/n on a state dominated by one huge bin
    let n = 64;
    let mut loads = vec![800u64; n];
    loads[0] = 800 + 730 + 200;
    let state = LoadState::from_loads(&loads).unwrap();
    let view = state.normalized();
    let mut q = vec![0.0; n];
    q[0] = 1.0;
    let q = AllocationVector {
        q,
        bin_of_rank: view.bin_of_rank.clone(),
    };
    let pot = PotentialSpec::Lambda {
        alpha: 0.5,
        offset: 730.0,
    };
    let lambda = pot.eval(&view).unwrap();
    let lhs = lambda + expected_change(&pot, &q, &view).unwrap();
    let rhs = lambda * (1.0 + 3.0 * 0.5 / n as f64);
    report.trials = 1;
    report.record(lhs, rhs, || Violation {
        trial: 0,
        lhs,
        rhs,
        detail: "negative control: max q_i = 1 breaks the 2/n hypothesis".into(),
        loads: state.loads().to_vec(),
        q: q.q.clone(),
    });
    report.notes = "negative control: expected at least one violation".into();
    report
}

// ---------------------------------------------------------------------------
// Suite (d): quadratic potential under the comparison adversary
// ---------------------------------------------------------------------------

fn quadratic_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut report = SuiteReport::new(SuiteKind::QuadraticAdvComp.name(), opts.trials);
    if opts.negative_control {
        return quadratic_negative(report);
    }
    for trial in 0..opts.trials {
        let mut rng = trial_rng(opts, SuiteKind::QuadraticAdvComp, trial);
        let n = 2 + rng.bin(63);
        let state = LoadState::from_loads(&random_loads(&mut rng, n, 2000)).unwrap();
        let view = state.normalized();
        let g = [0u64, 1, 2, 4, 8, 16][rng.bin(6)];
        let spec = ProcessSpec::GAdvComp {
            g,
            adversary: builtin_adversary(&mut rng, &state),
            strict: false,
        };
        let q = allocation_vector(&spec, &state).unwrap();
        let lhs = expected_change(&PotentialSpec::Quadratic, &q, &view).unwrap();
        let rhs = -view.abs_sum() / n as f64 + 2.0 * g as f64 + 1.0;
        report.record(lhs, rhs, || Violation {
            trial,
            lhs,
            rhs,
            detail: format!("quadratic adv-comp bound failed: g={g}, n={n}"),
            loads: state.loads().to_vec(),
            q: q.q.clone(),
        });
    }
    report
}

fn quadratic_negative(mut report: SuiteReport) -> SuiteReport {
    // Move mass far beyond the g-window: take the two-choice vector and
    // shift 0.3 from the lightest rank onto the heaviest.
    let n = 8;
    let mut loads = vec![0u64; n];
    loads[0] = 1000;
    let state = LoadState::from_loads(&loads).unwrap();
    let view = state.normalized();
    let mut q = crate::oracle::two_choice_vector(n);
    q.bin_of_rank = view.bin_of_rank.clone();
    q.q[0] += 0.3;
    q.q[n - 1] -= 0.3;
    let g = 1u64;
    let lhs = expected_change(&PotentialSpec::Quadratic, &q, &view).unwrap();
    let rhs = -view.abs_sum() / n as f64 + 2.0 * g as f64 + 1.0;
    report.trials = 1;
    report.record(lhs, rhs, || Violation {
        trial: 0,
        lhs,
        rhs,
        detail: format!(
            "negative control: 0.3 probability moved from rank {} to rank 0, load gap {} > g = {g}",
            n - 1,
            1000
        ),
        loads: state.loads().to_vec(),
        q: q.q.clone(),
    });
    report.notes = "negative control: expected at least one violation".into();
    report
}

// ---------------------------------------------------------------------------
// Suite (e): smoothed Gamma upper bound
// ---------------------------------------------------------------------------

fn gamma_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut report = SuiteReport::new(SuiteKind::GammaBound.name(), opts.trials);
    if opts.negative_control {
        return gamma_negative(report);
    }
    for trial in 0..opts.trials {
        let mut rng = trial_rng(opts, SuiteKind::GammaBound, trial);
        let n = 2 + rng.bin(31);
        let state = LoadState::from_loads(&random_loads(&mut rng, n, 60)).unwrap();
        let view = state.normalized();
        let gamma = (rng.f64() * 0.999).max(1e-4);
        let spec: ProcessSpec = match rng.below(3) {
            0 => ProcessSpec::two_choice(),
            1 => ProcessSpec::OneChoice,
            _ => ProcessSpec::GAdvComp {
                g: 1 + rng.below(8),
                adversary: builtin_adversary(&mut rng, &state),
                strict: false,
            },
        };
        let q = allocation_vector(&spec, &state).unwrap();
        let check = check_gamma_bound(&q, &view, gamma).unwrap();
        report.record(check.exact, check.bound, || Violation {
            trial,
            lhs: check.exact,
            rhs: check.bound,
            detail: format!("gamma bound failed at gamma={gamma}, n={n}"),
            loads: state.loads().to_vec(),
            q: q.q.clone(),
        });
    }
    report
}

fn gamma_negative(mut report: SuiteReport) -> SuiteReport {
    // exact expectation of a corrupted vector against the bound of the
    // honest one: the mismatch must surface
    let n = 8;
    let mut loads = vec![0u64; n];
    loads[0] = 60;
    let state = LoadState::from_loads(&loads).unwrap();
    let view = state.normalized();
    let honest = allocation_vector(&ProcessSpec::OneChoice, &state).unwrap();
    let mut corrupted = honest.clone();
    corrupted.q = vec![0.0; n];
    corrupted.q[0] = 1.0;
    let gamma = 0.9;
    let exact =
        expected_change(&PotentialSpec::Gamma { gamma }, &corrupted, &view).unwrap();
    let bound = check_gamma_bound(&honest, &view, gamma).unwrap().bound;
    report.trials = 1;
    report.record(exact, bound, || Violation {
        trial: 0,
        lhs: exact,
        rhs: bound,
        detail: "negative control: expectation under a corrupted vector".into(),
        loads: state.loads().to_vec(),
        q: corrupted.q.clone(),
    });
    report.notes = "negative control: expected at least one violation".into();
    report
}

// ---------------------------------------------------------------------------
// Suite (f): enumeration versus Monte Carlo
// ---------------------------------------------------------------------------

/// The processes checked for exact/simulated agreement at `n = 3, m = 4`.
pub fn enumeration_specs() -> Vec<ProcessSpec> {
    vec![
        ProcessSpec::OneChoice,
        ProcessSpec::two_choice(),
        ProcessSpec::GMyopicComp { g: 1 },
        ProcessSpec::GBounded { g: 1 },
        ProcessSpec::NoisyComp {
            rho: RhoSpec::Constant { p: 0.75 },
        },
    ]
}

fn enumeration_suite(opts: &VerifyOptions) -> SuiteReport {
    let runs = opts.trials.max(1000);
    let mut report = SuiteReport::new(SuiteKind::Enumeration.name(), runs);
    // total-variation budget: 0.005 at 1e6 runs, scaled as 1/sqrt(runs)
    let budget = 0.005 * (1e6 / runs as f64).sqrt().max(1.0);
    if opts.negative_control {
        // corrupt the exact pmf by three budgets of mass; honest samples
        // must land outside the tolerance no matter how loose it is
        let mut exact = enumerate_exact(&ProcessSpec::OneChoice, 3, 4, &[]).unwrap();
        let shift = (3.0 * budget).min(exact.gap_pmf[0].1);
        exact.gap_pmf[0].1 -= shift;
        exact.gap_pmf.last_mut().unwrap().1 += shift;
        let mc = monte_carlo_gap_pmf(&ProcessSpec::OneChoice, 3, 4, runs, opts.seed);
        let tv = total_variation(&exact.gap_pmf, &mc);
        report.trials = 1;
        report.record(tv, budget, || Violation {
            trial: 0,
            lhs: tv,
            rhs: budget,
            detail: format!("negative control: {shift:.4} probability mass moved in the exact pmf"),
            loads: vec![],
            q: vec![],
        });
        report.notes = "negative control: expected at least one violation".into();
        return report;
    }
    for (i, spec) in enumeration_specs().into_iter().enumerate() {
        let exact = enumerate_exact(&spec, 3, 4, &[]).unwrap();
        let mc = monte_carlo_gap_pmf(&spec, 3, 4, runs, opts.seed.wrapping_add(i as u64));
        let tv = total_variation(&exact.gap_pmf, &mc);
        report.record(tv, budget, || Violation {
            trial: i as u64,
            lhs: tv,
            rhs: budget,
            detail: format!("{} pmf diverges: tv={tv:.5} > {budget:.5}", spec.name()),
            loads: vec![],
            q: vec![],
        });
    }
    report.notes = format!("5 processes at n=3, m=4, {runs} runs each, budget {budget:.4}");
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(trials: u64) -> VerifyOptions {
        VerifyOptions {
            trials,
            seed: 1234,
            negative_control: false,
        }
    }

    #[test]
    fn all_suites_pass_small() {
        for kind in SuiteKind::all() {
            let trials = if kind == SuiteKind::Enumeration { 20_000 } else { 300 };
            let report = run_suite(kind, &opts(trials));
            assert!(
                report.passed(),
                "{}: {} violations, worst margin {}",
                report.suite,
                report.violations,
                report.worst_margin
            );
        }
    }

    #[test]
    fn negative_controls_fail() {
        for kind in SuiteKind::all() {
            let report = run_suite(
                kind,
                &VerifyOptions {
                    trials: 50_000,
                    seed: 99,
                    negative_control: true,
                },
            );
            assert!(
                !report.passed(),
                "{}: negative control went undetected",
                report.suite
            );
            assert!(!report.violation_samples.is_empty());
        }
    }

    #[test]
    fn lambda_good_step_covers_both_offset_sides() {
        let report = run_suite(SuiteKind::LambdaGoodStep, &opts(400));
        assert!(report.passed());
        // the notes record how many constructed states crossed the offset
        let case2: u64 = report
            .notes
            .split("case2(y > c4 g + 2)=")
            .nth(1)
            .and_then(|s| s.split_whitespace().next())
            .and_then(|s| s.parse().ok())
            .unwrap();
        assert!(case2 > 20, "too few offset-crossing states: {}", report.notes);
    }

    #[test]
    fn suite_names_round_trip() {
        for kind in SuiteKind::all() {
            assert_eq!(SuiteKind::parse(kind.name()), Some(kind));
        }
        assert_eq!(SuiteKind::parse("nope"), None);
    }
}
