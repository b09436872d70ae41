//! Allocation processes: two-sample decision rules under noise.
//!
//! Every process here is an instance of the same template: sample two bins
//! uniformly with replacement (One-Choice samples one), decide which of the
//! two receives the ball, allocate. Noise enters only in the decision:
//!
//! * `GAdvComp` — an adversary resolves any comparison whose load gap is at
//!   most `g`; the framework forces the lighter bin otherwise.
//! * `GBounded` / `GMyopicComp` — the two named adversary instances: always
//!   pick the heavier / pick uniformly at random.
//! * `NoisyComp` / `SigmaNoisyLoad` — the comparison is correct with
//!   probability `rho(delta)`; the sigma instance uses the Gaussian-tail
//!   `rho` or, in `gaussian_estimates` mode, draws fresh normal
//!   perturbations per sample.
//! * `BBatch` / `TauDelay` — decisions see stale loads: a batch-boundary
//!   snapshot, or per-bin estimates constrained to a sliding window.
//!
//! Auxiliary per-run state (snapshots, delay windows, adversary audit
//! counters) lives in [`ProcessAux`]; a [`Simulation`] owns one state, one
//! aux and one rng stream, which is the unit of parallelism.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

use crate::load::LoadState;
use crate::rng::RngStream;

#[derive(Debug, Error, PartialEq)]
pub enum ProcessError {
    #[error("{what} must satisfy {requirement}")]
    BadParameter {
        what: &'static str,
        requirement: &'static str,
    },
    #[error("rho must be non-decreasing: rho({delta}) < rho({})", delta - 1)]
    RhoNotMonotone { delta: u64 },
    #[error("auxiliary state does not match process variant")]
    AuxMismatch,
}

/// Tie handling for the noiseless Two-Choice comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Uniform among the pair; makes the batch and delay degeneracies exact.
    #[default]
    Random,
    LowerIndex,
}

/// A non-decreasing comparison-accuracy map `delta -> [0, 1]`.
///
/// Values below 1/2 are allowed: the step function with value 0 below the
/// threshold is exactly the always-wrong comparison `GBounded` makes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSpec {
    Constant { p: f64 },
    /// `below` for `delta <= g`, `above` for `delta > g`.
    Step { g: u64, below: f64, above: f64 },
    /// `1 - exp(-(delta/sigma)^2) / 2`.
    Gaussian { sigma: f64 },
    /// Explicit values for `delta = 1, 2, ...`; `tail` beyond the table.
    Table { values: Vec<f64>, tail: f64 },
}

impl RhoSpec {
    pub fn validate(&self) -> Result<(), ProcessError> {
        let unit = |what: &'static str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(ProcessError::BadParameter {
                    what,
                    requirement: "be a probability in [0, 1]",
                })
            }
        };
        match self {
            RhoSpec::Constant { p } => unit("rho constant", *p),
            RhoSpec::Step { below, above, .. } => {
                unit("rho step below", *below)?;
                unit("rho step above", *above)?;
                if below > above {
                    return Err(ProcessError::RhoNotMonotone { delta: 1 });
                }
                Ok(())
            }
            RhoSpec::Gaussian { sigma } => {
                if *sigma > 0.0 {
                    Ok(())
                } else {
                    Err(ProcessError::BadParameter {
                        what: "sigma",
                        requirement: "be positive",
                    })
                }
            }
            RhoSpec::Table { values, tail } => {
                for (i, &v) in values.iter().enumerate() {
                    unit("rho table value", v)?;
                    if i > 0 && v < values[i - 1] {
                        return Err(ProcessError::RhoNotMonotone { delta: i as u64 + 1 });
                    }
                }
                unit("rho tail", *tail)?;
                if let Some(&last) = values.last() {
                    if *tail < last {
                        return Err(ProcessError::RhoNotMonotone {
                            delta: values.len() as u64 + 1,
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Probability that a comparison at absolute load difference `delta`
    /// is correct.
    pub fn eval(&self, delta: u64) -> f64 {
        match self {
            RhoSpec::Constant { p } => *p,
            RhoSpec::Step { g, below, above } => {
                if delta <= *g {
                    *below
                } else {
                    *above
                }
            }
            RhoSpec::Gaussian { sigma } => rho_sigma(delta as f64, *sigma).expect("validated"),
            RhoSpec::Table { values, tail } => {
                if delta == 0 {
                    values.first().copied().unwrap_or(*tail)
                } else {
                    values.get(delta as usize - 1).copied().unwrap_or(*tail)
                }
            }
        }
    }
}

/// `rho(delta) = 1 - exp(-(delta/sigma)^2) / 2`, the Gaussian-tail accuracy.
pub fn rho_sigma(delta: f64, sigma: f64) -> Result<f64, ProcessError> {
    if sigma <= 0.0 {
        return Err(ProcessError::BadParameter {
            what: "sigma",
            requirement: "be positive",
        });
    }
    debug_assert!(delta >= 0.0);
    let z = delta / sigma;
    Ok(1.0 - 0.5 * (-z * z).exp())
}

/// How `SigmaNoisyLoad` realizes its noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Flip one coin with the closed-form accuracy (default).
    #[default]
    RhoFormula,
    /// Draw fresh `N(0, sigma^2)` perturbations per sample per step and
    /// compare the perturbed loads. Matches the formula mode only up to the
    /// constant rescaling of sigma.
    GaussianEstimates,
}

/// Built-in adversary strategies for the comparison setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// Always reverse: pick the heavier bin (this is `GBounded`).
    GreedyMax,
    /// Decide controllable comparisons by a fair coin (this is `GMyopicComp`).
    CoinFlip,
    /// Never reverse: pick the lighter bin (noise-free Two-Choice).
    AlwaysLighter,
    /// Test hook: reverse exactly the listed `(winner, loser)` bin pairs;
    /// everything else falls through to the sorted-order lighter bin.
    Scripted { reversals: Vec<(usize, usize)> },
}

/// Decision callback consulted for pairs the adversary can control.
///
/// `choose` runs in simulations and may use randomness; `mass_on_first` is
/// the oracle's analytic view and must return the exact probability that
/// the first bin of the pair receives the ball, or `None` when no closed
/// form exists (such strategies cannot be used with the exact oracle).
pub trait Adversary {
    fn name(&self) -> String;
    fn choose(
        &mut self,
        t: u64,
        pair: (usize, usize),
        loads: &[u64],
        rng: &mut RngStream,
    ) -> usize;
    fn mass_on_first(&self, pair: (usize, usize), loads: &[u64]) -> Option<f64>;
}

/// Sorted-order default: the strictly lighter bin, ties to the bin that
/// sorts later (higher index under the deterministic tie-by-index order).
fn sorted_order_lighter(pair: (usize, usize), loads: &[u64]) -> usize {
    let (a, b) = pair;
    match loads[a].cmp(&loads[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => a.max(b),
    }
}

/// Decision rule for the built-in kinds; shared by the trait impl and the
/// simulation hot path (which avoids cloning the kind every step).
fn builtin_choose(
    kind: &AdversaryKind,
    pair: (usize, usize),
    loads: &[u64],
    rng: &mut RngStream,
) -> usize {
    let (a, b) = pair;
    match kind {
        AdversaryKind::GreedyMax => match loads[a].cmp(&loads[b]) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => {
                if rng.coin() {
                    a
                } else {
                    b
                }
            }
        },
        AdversaryKind::CoinFlip => {
            if rng.coin() {
                a
            } else {
                b
            }
        }
        AdversaryKind::AlwaysLighter => match loads[a].cmp(&loads[b]) {
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal => {
                if rng.coin() {
                    a
                } else {
                    b
                }
            }
        },
        AdversaryKind::Scripted { reversals } => {
            if reversals.contains(&(a, b)) {
                a
            } else if reversals.contains(&(b, a)) {
                b
            } else {
                sorted_order_lighter(pair, loads)
            }
        }
    }
}

impl Adversary for AdversaryKind {
    fn name(&self) -> String {
        match self {
            AdversaryKind::GreedyMax => "greedy_max".into(),
            AdversaryKind::CoinFlip => "coin_flip".into(),
            AdversaryKind::AlwaysLighter => "always_lighter".into(),
            AdversaryKind::Scripted { .. } => "scripted".into(),
        }
    }

    fn choose(
        &mut self,
        _t: u64,
        pair: (usize, usize),
        loads: &[u64],
        rng: &mut RngStream,
    ) -> usize {
        builtin_choose(self, pair, loads, rng)
    }

    fn mass_on_first(&self, pair: (usize, usize), loads: &[u64]) -> Option<f64> {
        let (a, b) = pair;
        let value = match self {
            AdversaryKind::GreedyMax => match loads[a].cmp(&loads[b]) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => 0.5,
            },
            AdversaryKind::CoinFlip => 0.5,
            AdversaryKind::AlwaysLighter => match loads[a].cmp(&loads[b]) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Greater => 0.0,
                std::cmp::Ordering::Equal => 0.5,
            },
            AdversaryKind::Scripted { reversals } => {
                if reversals.contains(&(a, b)) {
                    1.0
                } else if reversals.contains(&(b, a)) {
                    0.0
                } else if sorted_order_lighter(pair, loads) == a {
                    1.0
                } else {
                    0.0
                }
            }
        };
        Some(value)
    }
}

/// Built-in staleness strategies for the delay setting.
///
/// All built-ins are window-local: an estimate depends only on the queried
/// bin's current load and its load at the window's far edge. Strategies
/// that adapt to history beyond the window are not modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StalenessKind {
    /// Report the load as of `tau` steps ago (the weakest information).
    Oldest,
    /// Report the current load (collapses to noiseless Two-Choice).
    Freshest,
    /// Report a uniformly random value inside the admissible window.
    RandomInWindow,
    /// Report the load at the last multiple-of-`tau` boundary; with
    /// `tau = b` this reproduces `BBatch` decisions exactly.
    BatchBoundary,
}

/// One allocation process with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum ProcessSpec {
    OneChoice,
    TwoChoice {
        #[serde(default)]
        tie_break: TieBreak,
    },
    OnePlusBeta {
        beta: f64,
    },
    GBounded {
        g: u64,
    },
    GMyopicComp {
        g: u64,
    },
    NoisyComp {
        rho: RhoSpec,
    },
    SigmaNoisyLoad {
        sigma: f64,
        #[serde(default)]
        mode: SigmaMode,
    },
    GAdvComp {
        g: u64,
        adversary: AdversaryKind,
        /// When set, the adversary callback is consulted on every sampled
        /// pair and overridden attempts to win an uncontrollable pair are
        /// counted in the aux state.
        #[serde(default)]
        strict: bool,
    },
    BBatch {
        b: u64,
    },
    TauDelay {
        tau: u64,
        staleness: StalenessKind,
    },
}

impl ProcessSpec {
    pub fn two_choice() -> Self {
        ProcessSpec::TwoChoice {
            tie_break: TieBreak::Random,
        }
    }

    pub fn validate(&self) -> Result<(), ProcessError> {
        match self {
            ProcessSpec::OnePlusBeta { beta } => {
                if *beta > 0.0 && *beta <= 1.0 {
                    Ok(())
                } else {
                    Err(ProcessError::BadParameter {
                        what: "beta",
                        requirement: "lie in (0, 1]",
                    })
                }
            }
            ProcessSpec::NoisyComp { rho } => rho.validate(),
            ProcessSpec::SigmaNoisyLoad { sigma, .. } => {
                if *sigma > 0.0 {
                    Ok(())
                } else {
                    Err(ProcessError::BadParameter {
                        what: "sigma",
                        requirement: "be positive",
                    })
                }
            }
            ProcessSpec::BBatch { b } => {
                if *b >= 1 {
                    Ok(())
                } else {
                    Err(ProcessError::BadParameter {
                        what: "b",
                        requirement: "be at least 1",
                    })
                }
            }
            ProcessSpec::TauDelay { tau, .. } => {
                if *tau >= 1 {
                    Ok(())
                } else {
                    Err(ProcessError::BadParameter {
                        what: "tau",
                        requirement: "be at least 1",
                    })
                }
            }
            _ => Ok(()),
        }
    }

    /// Short name for CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            ProcessSpec::OneChoice => "one_choice",
            ProcessSpec::TwoChoice { .. } => "two_choice",
            ProcessSpec::OnePlusBeta { .. } => "one_plus_beta",
            ProcessSpec::GBounded { .. } => "g_bounded",
            ProcessSpec::GMyopicComp { .. } => "g_myopic_comp",
            ProcessSpec::NoisyComp { .. } => "noisy_comp",
            ProcessSpec::SigmaNoisyLoad { .. } => "sigma_noisy_load",
            ProcessSpec::GAdvComp { .. } => "g_adv_comp",
            ProcessSpec::BBatch { .. } => "b_batch",
            ProcessSpec::TauDelay { .. } => "tau_delay",
        }
    }

    /// The distinguishing parameter for sweep tables and CSV rows.
    pub fn param(&self) -> String {
        match self {
            ProcessSpec::OneChoice | ProcessSpec::TwoChoice { .. } => String::new(),
            ProcessSpec::OnePlusBeta { beta } => format!("{beta}"),
            ProcessSpec::GBounded { g }
            | ProcessSpec::GMyopicComp { g }
            | ProcessSpec::GAdvComp { g, .. } => format!("{g}"),
            ProcessSpec::NoisyComp { .. } => "rho".into(),
            ProcessSpec::SigmaNoisyLoad { sigma, .. } => format!("{sigma}"),
            ProcessSpec::BBatch { b } => format!("{b}"),
            ProcessSpec::TauDelay { tau, .. } => format!("{tau}"),
        }
    }
}

/// Sliding record of the last `tau - 1` allocations, giving `O(1)` stale
/// load queries without storing `tau` whole load vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayWindow {
    tau: u64,
    ring: VecDeque<u32>,
    in_window: Vec<u32>,
}

impl DelayWindow {
    pub fn new(tau: u64, n: usize) -> Self {
        DelayWindow {
            tau,
            ring: VecDeque::with_capacity(tau.min(1 << 20) as usize),
            in_window: vec![0; n],
        }
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    /// Records that `bin` received the ball.
    pub fn record(&mut self, bin: usize) {
        if self.tau <= 1 {
            return;
        }
        self.ring.push_back(bin as u32);
        if self.ring.len() as u64 > self.tau - 1 {
            let old = self.ring.pop_front().unwrap();
            self.in_window[old as usize] -= 1;
            self.in_window[bin] += 1;
        } else {
            self.in_window[bin] += 1;
        }
    }

    /// Load of `bin` as of `tau` steps ago: current minus in-window arrivals.
    pub fn stale_load(&self, current: u64, bin: usize) -> u64 {
        current - self.in_window[bin] as u64
    }
}

/// Oldest-strategy estimate for `bin`: the load `tau` steps ago.
pub fn stale_estimate(window: &DelayWindow, loads: &[u64], bin: usize) -> u64 {
    window.stale_load(loads[bin], bin)
}

/// Per-run auxiliary state; must match the process variant.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessAux {
    None,
    Adversary {
        violations: u64,
    },
    Batch {
        snapshot: Vec<u64>,
    },
    Delay {
        window: DelayWindow,
        /// Boundary snapshot, used only by the batch-boundary strategy.
        snapshot: Vec<u64>,
    },
}

impl ProcessAux {
    pub fn for_spec(spec: &ProcessSpec, n: usize) -> ProcessAux {
        match spec {
            ProcessSpec::GAdvComp { .. } => ProcessAux::Adversary { violations: 0 },
            ProcessSpec::BBatch { .. } => ProcessAux::Batch {
                snapshot: vec![0; n],
            },
            ProcessSpec::TauDelay { tau, .. } => ProcessAux::Delay {
                window: DelayWindow::new(*tau, n),
                snapshot: vec![0; n],
            },
            _ => ProcessAux::None,
        }
    }

    /// Adversary override count (strict mode only).
    pub fn violations(&self) -> u64 {
        match self {
            ProcessAux::Adversary { violations } => *violations,
            _ => 0,
        }
    }
}

#[inline]
fn lighter(pair: (usize, usize), loads: &[u64], rng: &mut RngStream) -> usize {
    let (a, b) = pair;
    match loads[a].cmp(&loads[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if rng.coin() {
                a
            } else {
                b
            }
        }
    }
}

/// Decides a noisy comparison between two loads; returns 0 or 1 for the
/// winning side. Equal loads go to a uniform winner; otherwise the lighter
/// side wins with probability `rho(delta)`.
pub fn decide_noisy_comparison(
    load1: u64,
    load2: u64,
    rho: &RhoSpec,
    rng: &mut RngStream,
) -> usize {
    if load1 == load2 {
        return usize::from(!rng.coin());
    }
    let delta = load1.abs_diff(load2);
    let lighter_side = usize::from(load1 > load2);
    if rng.f64() < rho.eval(delta) {
        lighter_side
    } else {
        1 - lighter_side
    }
}

/// Batch-rule decision: the bin with the smaller snapshot load wins,
/// snapshot ties break uniformly.
pub fn batch_snapshot_decide(snapshot: &[u64], pair: (usize, usize), rng: &mut RngStream) -> usize {
    lighter(pair, snapshot, rng)
}

/// One decision step: refreshes variant-driven aux state, samples the
/// bin(s) and returns the bin that should receive the ball. The caller
/// allocates and then calls [`note_allocation`].
pub fn step(
    spec: &ProcessSpec,
    state: &LoadState,
    aux: &mut ProcessAux,
    rng: &mut RngStream,
) -> Result<usize, ProcessError> {
    let n = state.n();
    let loads = state.loads();
    match spec {
        ProcessSpec::OneChoice => {
            if !matches!(aux, ProcessAux::None) {
                return Err(ProcessError::AuxMismatch);
            }
            Ok(rng.bin(n))
        }
        ProcessSpec::TwoChoice { tie_break } => {
            if !matches!(aux, ProcessAux::None) {
                return Err(ProcessError::AuxMismatch);
            }
            let pair = (rng.bin(n), rng.bin(n));
            if pair.0 == pair.1 {
                return Ok(pair.0);
            }
            Ok(match tie_break {
                TieBreak::Random => lighter(pair, loads, rng),
                TieBreak::LowerIndex => {
                    let (a, b) = pair;
                    match loads[a].cmp(&loads[b]) {
                        std::cmp::Ordering::Less => a,
                        std::cmp::Ordering::Greater => b,
                        std::cmp::Ordering::Equal => a.min(b),
                    }
                }
            })
        }
        ProcessSpec::OnePlusBeta { beta } => {
            if !matches!(aux, ProcessAux::None) {
                return Err(ProcessError::AuxMismatch);
            }
            let pair = (rng.bin(n), rng.bin(n));
            if pair.0 == pair.1 {
                return Ok(pair.0);
            }
            if rng.f64() < *beta {
                Ok(lighter(pair, loads, rng))
            } else if rng.coin() {
                Ok(pair.0)
            } else {
                Ok(pair.1)
            }
        }
        ProcessSpec::GBounded { g } => {
            if !matches!(aux, ProcessAux::None) {
                return Err(ProcessError::AuxMismatch);
            }
            let (a, b) = (rng.bin(n), rng.bin(n));
            if a == b {
                return Ok(a);
            }
            let diff = loads[a].abs_diff(loads[b]);
            Ok(if diff > *g {
                lighter((a, b), loads, rng)
            } else {
                // heavier wins, ties by coin
                match loads[a].cmp(&loads[b]) {
                    std::cmp::Ordering::Greater => a,
                    std::cmp::Ordering::Less => b,
                    std::cmp::Ordering::Equal => {
                        if rng.coin() {
                            a
                        } else {
                            b
                        }
                    }
                }
            })
        }
        ProcessSpec::GMyopicComp { g } => {
            if !matches!(aux, ProcessAux::None) {
                return Err(ProcessError::AuxMismatch);
            }
            let (a, b) = (rng.bin(n), rng.bin(n));
            if a == b {
                return Ok(a);
            }
            let diff = loads[a].abs_diff(loads[b]);
            Ok(if diff > *g {
                lighter((a, b), loads, rng)
            } else if rng.coin() {
                a
            } else {
                b
            })
        }
        ProcessSpec::NoisyComp { rho } => {
            if !matches!(aux, ProcessAux::None) {
                return Err(ProcessError::AuxMismatch);
            }
            let pair = (rng.bin(n), rng.bin(n));
            if pair.0 == pair.1 {
                return Ok(pair.0);
            }
            let side = decide_noisy_comparison(loads[pair.0], loads[pair.1], rho, rng);
            Ok(if side == 0 { pair.0 } else { pair.1 })
        }
        ProcessSpec::SigmaNoisyLoad { sigma, mode } => {
            if !matches!(aux, ProcessAux::None) {
                return Err(ProcessError::AuxMismatch);
            }
            let (a, b) = (rng.bin(n), rng.bin(n));
            if a == b {
                return Ok(a);
            }
            match mode {
                SigmaMode::RhoFormula => {
                    if loads[a] == loads[b] {
                        return Ok(if rng.coin() { a } else { b });
                    }
                    let delta = loads[a].abs_diff(loads[b]) as f64;
                    let correct = rng.f64() < rho_sigma(delta, *sigma).expect("validated");
                    let light = if loads[a] < loads[b] { a } else { b };
                    Ok(if correct { light } else { a + b - light })
                }
                SigmaMode::GaussianEstimates => {
                    let (z1, z2) = rng.normal_pair();
                    let est_a = loads[a] as f64 + sigma * z1;
                    let est_b = loads[b] as f64 + sigma * z2;
                    Ok(if est_a <= est_b { a } else { b })
                }
            }
        }
        ProcessSpec::GAdvComp {
            g,
            adversary,
            strict,
        } => {
            let ProcessAux::Adversary { violations } = aux else {
                return Err(ProcessError::AuxMismatch);
            };
            let pair = (rng.bin(n), rng.bin(n));
            let (a, b) = pair;
            if a == b {
                return Ok(a);
            }
            let diff = loads[a].abs_diff(loads[b]);
            if diff <= *g {
                Ok(builtin_choose(adversary, pair, loads, rng))
            } else {
                let forced = if loads[a] < loads[b] { a } else { b };
                if *strict {
                    let wanted = builtin_choose(adversary, pair, loads, rng);
                    if wanted != forced {
                        *violations += 1;
                    }
                }
                Ok(forced)
            }
        }
        ProcessSpec::BBatch { b } => {
            let ProcessAux::Batch { snapshot } = aux else {
                return Err(ProcessError::AuxMismatch);
            };
            if state.balls().is_multiple_of(*b) {
                snapshot.copy_from_slice(loads);
            }
            let pair = (rng.bin(n), rng.bin(n));
            if pair.0 == pair.1 {
                return Ok(pair.0);
            }
            Ok(batch_snapshot_decide(snapshot, pair, rng))
        }
        ProcessSpec::TauDelay { tau, staleness } => {
            let ProcessAux::Delay { window, snapshot } = aux else {
                return Err(ProcessError::AuxMismatch);
            };
            if window.tau() != *tau {
                return Err(ProcessError::AuxMismatch);
            }
            if *staleness == StalenessKind::BatchBoundary && state.balls().is_multiple_of(*tau) {
                snapshot.copy_from_slice(loads);
            }
            let pair = (rng.bin(n), rng.bin(n));
            if pair.0 == pair.1 {
                return Ok(pair.0);
            }
            let estimate = |bin: usize, rng: &mut RngStream| -> u64 {
                let current = loads[bin];
                let oldest = window.stale_load(current, bin);
                let raw = match staleness {
                    StalenessKind::Oldest => oldest,
                    StalenessKind::Freshest => current,
                    StalenessKind::RandomInWindow => rng.int_in(oldest, current),
                    StalenessKind::BatchBoundary => snapshot[bin],
                };
                // framework clamp: estimates must stay inside the window
                raw.clamp(oldest, current)
            };
            let ea = estimate(pair.0, rng);
            let eb = estimate(pair.1, rng);
            Ok(match ea.cmp(&eb) {
                std::cmp::Ordering::Less => pair.0,
                std::cmp::Ordering::Greater => pair.1,
                std::cmp::Ordering::Equal => {
                    if rng.coin() {
                        pair.0
                    } else {
                        pair.1
                    }
                }
            })
        }
    }
}

/// Post-allocation bookkeeping; call once per step after the ball lands.
pub fn note_allocation(spec: &ProcessSpec, aux: &mut ProcessAux, bin: usize) {
    if let (ProcessSpec::TauDelay { .. }, ProcessAux::Delay { window, .. }) = (spec, aux) {
        window.record(bin);
    }
}

/// One simulation run: a process, its state, aux data and rng stream.
pub struct Simulation {
    pub spec: ProcessSpec,
    pub state: LoadState,
    pub aux: ProcessAux,
    pub rng: RngStream,
}

impl Simulation {
    pub fn new(spec: ProcessSpec, n: usize, rng: RngStream) -> Result<Self, ProcessError> {
        spec.validate()?;
        let state = LoadState::new(n).expect("n validated by caller");
        let aux = ProcessAux::for_spec(&spec, n);
        Ok(Simulation {
            spec,
            state,
            aux,
            rng,
        })
    }

    /// Decides, allocates and updates aux state; returns the chosen bin.
    #[inline]
    pub fn step(&mut self) -> usize {
        let bin = step(&self.spec, &self.state, &mut self.aux, &mut self.rng)
            .expect("aux constructed for spec");
        self.state.allocate_unchecked(bin);
        note_allocation(&self.spec, &mut self.aux, bin);
        bin
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }
}
