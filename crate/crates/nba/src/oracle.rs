//! Exact, sample-free computation of one-step allocation behaviour.
//!
//! Everything here works with closed-form probabilities: allocation vectors
//! are built by enumerating all `n^2` ordered bin pairs and distributing
//! each pair's `1/n^2` mass by the process's decision probability, with
//! randomized decisions (myopic coins, `rho`, ties) entering analytically.
//! That exactness is the point — the module certifies one-step drop
//! inequalities, and a sampled vector could not distinguish a genuine
//! violation from noise.
//!
//! Rank space everywhere: the analysis-side objects (allocation vectors, the
//! reversible-pair set, potentials) are indexed by load rank, while the
//! simulator is bin-indexed, so every vector carries its rank-to-bin
//! permutation.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::load::{LoadState, NormalizedView};
use crate::math::normal_cdf;
use crate::potential::{NeumaierSum, PotentialError, PotentialSpec};
use crate::process::{
    Adversary, ProcessAux, ProcessSpec, SigmaMode, StalenessKind, TieBreak,
};
use crate::process::{rho_sigma, DelayWindow};
use crate::rng::RngStream;

/// Largest `n` the pair-enumeration oracle accepts by default.
pub const DEFAULT_ORACLE_BOUND: usize = 256;

/// Outcome-tree size guard for exhaustive enumeration.
pub const ENUMERATION_GUARD: f64 = 1e7;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("n = {n} exceeds the oracle bound {bound}; use Monte Carlo instead")]
    TooManyBins { n: usize, bound: usize },
    #[error("process variant requires auxiliary state (snapshot or delay window)")]
    NeedsAux,
    #[error("auxiliary state does not match the process variant")]
    AuxMismatch,
    #[error("exact oracle cannot evaluate this process: {0}")]
    Unsupported(String),
    #[error("enumeration tree of ~{size:.3e} outcomes exceeds {guard:.0e}; use Monte Carlo instead")]
    TreeTooLarge { size: f64, guard: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Exact per-rank allocation probabilities for one process at one state.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationVector {
    /// `q[i]` = probability that the bin of rank `i` (0 = most loaded)
    /// receives the next ball.
    pub q: Vec<f64>,
    /// Rank-to-bin permutation of the underlying state.
    pub bin_of_rank: Vec<usize>,
}

impl AllocationVector {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn sum(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for &v in &self.q {
            s.add(v);
        }
        s.value()
    }

    /// Probability that a specific bin receives the ball.
    pub fn bin_probability(&self, bin: usize) -> f64 {
        let rank = self
            .bin_of_rank
            .iter()
            .position(|&b| b == bin)
            .expect("bin in permutation");
        self.q[rank]
    }

    /// Largest absolute rank-wise difference to another vector.
    pub fn max_component_diff(&self, other: &AllocationVector) -> f64 {
        self.q
            .iter()
            .zip(other.q.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The closed-form noiseless Two-Choice vector: `q_i = (2i - 1)/n^2` with
/// ranks counted from 1.
pub fn two_choice_vector(n: usize) -> AllocationVector {
    let n2 = (n * n) as f64;
    AllocationVector {
        q: (0..n).map(|i| (2 * i + 1) as f64 / n2).collect(),
        bin_of_rank: (0..n).collect(),
    }
}

/// Ordered rank pairs `(i, j)` whose comparison the adversary can reverse:
/// `0 < y_i - y_j <= g`, computed on integer loads so ties are exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairSet(pub Vec<(usize, usize)>);

impl PairSet {
    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.0.contains(&pair)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn manipulable_pairs(state: &LoadState, g: u64) -> PairSet {
    let view = state.normalized();
    let n = state.n();
    let load_of_rank: Vec<u64> = view.bin_of_rank.iter().map(|&b| state.load(b)).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (hi, lo) = (load_of_rank[i], load_of_rank[j]);
            if hi > lo && hi - lo <= g {
                pairs.push((i, j));
            }
        }
    }
    PairSet(pairs)
}

/// Everything a pairwise decision can depend on at a fixed state.
struct PairCtx<'a> {
    loads: &'a [u64],
    snapshot: Option<&'a [u64]>,
    window: Option<(&'a DelayWindow, StalenessKind)>,
}

impl<'a> PairCtx<'a> {
    fn plain(loads: &'a [u64]) -> Self {
        PairCtx {
            loads,
            snapshot: None,
            window: None,
        }
    }
}

/// Probability mass the ordered-pair decision puts on bin `a` when the
/// unordered pair `{a, b}` is sampled, `a != b`. Exact by construction;
/// randomized decisions contribute fractional mass.
fn pair_mass_on_first(
    spec: &ProcessSpec,
    ctx: &PairCtx<'_>,
    a: usize,
    b: usize,
) -> Result<f64, OracleError> {
    let loads = ctx.loads;
    let lighter_mass = |xa: u64, xb: u64| -> f64 {
        match xa.cmp(&xb) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Greater => 0.0,
            std::cmp::Ordering::Equal => 0.5,
        }
    };
    match spec {
        ProcessSpec::OneChoice => unreachable!("one-choice is not pairwise"),
        ProcessSpec::TwoChoice { tie_break } => Ok(match tie_break {
            TieBreak::Random => lighter_mass(loads[a], loads[b]),
            TieBreak::LowerIndex => match loads[a].cmp(&loads[b]) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Greater => 0.0,
                std::cmp::Ordering::Equal => {
                    if a < b {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
        }),
        ProcessSpec::OnePlusBeta { beta } => {
            Ok(beta * lighter_mass(loads[a], loads[b]) + (1.0 - beta) * 0.5)
        }
        ProcessSpec::GBounded { g } => {
            let diff = loads[a].abs_diff(loads[b]);
            Ok(if diff > *g {
                lighter_mass(loads[a], loads[b])
            } else {
                // heavier wins inside the window, ties split
                1.0 - lighter_mass(loads[a], loads[b])
            })
        }
        ProcessSpec::GMyopicComp { g } => {
            let diff = loads[a].abs_diff(loads[b]);
            Ok(if diff > *g {
                lighter_mass(loads[a], loads[b])
            } else {
                0.5
            })
        }
        ProcessSpec::NoisyComp { rho } => Ok(noisy_mass(loads[a], loads[b], |d| rho.eval(d))),
        ProcessSpec::SigmaNoisyLoad { sigma, mode } => Ok(match mode {
            SigmaMode::RhoFormula => noisy_mass(loads[a], loads[b], |d| {
                rho_sigma(d as f64, *sigma).expect("validated")
            }),
            SigmaMode::GaussianEstimates => noisy_mass(loads[a], loads[b], |d| {
                normal_cdf(d as f64 / (std::f64::consts::SQRT_2 * sigma))
            }),
        }),
        ProcessSpec::GAdvComp { g, adversary, .. } => {
            let diff = loads[a].abs_diff(loads[b]);
            if diff > *g {
                Ok(lighter_mass(loads[a], loads[b]))
            } else {
                adversary.mass_on_first((a, b), loads).ok_or_else(|| {
                    OracleError::Unsupported(format!(
                        "adversary {} has no analytic pair decision",
                        adversary.name()
                    ))
                })
            }
        }
        ProcessSpec::BBatch { .. } => {
            let snap = ctx.snapshot.ok_or(OracleError::NeedsAux)?;
            Ok(lighter_mass(snap[a], snap[b]))
        }
        ProcessSpec::TauDelay { .. } => {
            let (window, kind) = ctx.window.ok_or(OracleError::NeedsAux)?;
            match kind {
                StalenessKind::Oldest => Ok(lighter_mass(
                    window.stale_load(loads[a], a),
                    window.stale_load(loads[b], b),
                )),
                StalenessKind::Freshest => Ok(lighter_mass(loads[a], loads[b])),
                StalenessKind::BatchBoundary => {
                    let snap = ctx.snapshot.ok_or(OracleError::NeedsAux)?;
                    let clamp = |bin: usize| -> u64 {
                        snap[bin].clamp(window.stale_load(loads[bin], bin), loads[bin])
                    };
                    Ok(lighter_mass(clamp(a), clamp(b)))
                }
                StalenessKind::RandomInWindow => {
                    let range = |bin: usize| {
                        (window.stale_load(loads[bin], bin), loads[bin])
                    };
                    Ok(uniform_interval_less_mass(range(a), range(b)))
                }
            }
        }
    }
}

/// `P[winner = lighter side] = rho(delta)` turned into mass on `a`.
fn noisy_mass(xa: u64, xb: u64, rho: impl Fn(u64) -> f64) -> f64 {
    match xa.cmp(&xb) {
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => rho(xb - xa),
        std::cmp::Ordering::Greater => 1.0 - rho(xa - xb),
    }
}

/// `P[A < B] + P[A = B]/2` for independent uniform integers on the two
/// inclusive ranges; the exact decision mass of `random_in_window`.
fn uniform_interval_less_mass((a0, a1): (u64, u64), (b0, b1): (u64, u64)) -> f64 {
    let (sa, sb) = ((a1 - a0 + 1) as f64, (b1 - b0 + 1) as f64);
    let mut less = 0.0f64;
    let mut equal = 0.0f64;
    for x in a0..=a1 {
        let lo = b0.max(x + 1);
        if b1 >= lo {
            less += (b1 - lo + 1) as f64;
        }
        if (b0..=b1).contains(&x) {
            equal += 1.0;
        }
    }
    (less + 0.5 * equal) / (sa * sb)
}

/// Exact allocation vector for an aux-free process at `state`.
pub fn allocation_vector(
    spec: &ProcessSpec,
    state: &LoadState,
) -> Result<AllocationVector, OracleError> {
    allocation_vector_with_aux(spec, state, None)
}

/// Exact allocation vector; `aux` is required for batch and delay variants.
///
/// Decisions are evaluated in bin space (snapshots, windows and scripted
/// adversaries address bins) and accumulated into rank space through the
/// view's permutation.
pub fn allocation_vector_with_aux(
    spec: &ProcessSpec,
    state: &LoadState,
    aux: Option<&ProcessAux>,
) -> Result<AllocationVector, OracleError> {
    let n = state.n();
    if n > DEFAULT_ORACLE_BOUND {
        return Err(OracleError::TooManyBins {
            n,
            bound: DEFAULT_ORACLE_BOUND,
        });
    }
    let view = state.normalized();
    if matches!(spec, ProcessSpec::OneChoice) {
        return Ok(AllocationVector {
            q: vec![1.0 / n as f64; n],
            bin_of_rank: view.bin_of_rank,
        });
    }

    let ctx = match (spec, aux) {
        (ProcessSpec::BBatch { .. }, Some(ProcessAux::Batch { snapshot })) => PairCtx {
            loads: state.loads(),
            snapshot: Some(snapshot),
            window: None,
        },
        (ProcessSpec::BBatch { .. }, _) => return Err(OracleError::NeedsAux),
        (
            ProcessSpec::TauDelay { staleness, .. },
            Some(ProcessAux::Delay { window, snapshot }),
        ) => PairCtx {
            loads: state.loads(),
            snapshot: Some(snapshot),
            window: Some((window, *staleness)),
        },
        (ProcessSpec::TauDelay { .. }, _) => return Err(OracleError::NeedsAux),
        _ => PairCtx::plain(state.loads()),
    };

    let n2 = (n * n) as f64;
    let mut q = vec![1.0 / n2; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (ba, bb) = (view.bin_of_rank[i], view.bin_of_rank[j]);
            let w = pair_mass_on_first(spec, &ctx, ba, bb)?;
            q[i] += 2.0 / n2 * w;
            q[j] += 2.0 / n2 * (1.0 - w);
        }
    }
    Ok(AllocationVector {
        q,
        bin_of_rank: view.bin_of_rank,
    })
}

/// Exact expected one-step change `sum_i q_i (Phi(y + bump_i) - Phi(y))` of
/// a potential under an allocation vector, both over the same state.
pub fn expected_change(
    potential: &PotentialSpec,
    q: &AllocationVector,
    view: &NormalizedView,
) -> Result<f64, PotentialError> {
    debug_assert_eq!(q.n(), view.n());
    let mut sum = NeumaierSum::new();
    for (rank, &mass) in q.q.iter().enumerate() {
        if mass != 0.0 {
            sum.add(mass * potential.delta_for_placement(view, rank)?);
        }
    }
    Ok(sum.value())
}

/// The sufficient condition for a super-exponential drop: every bin at or
/// above `z - 1` receives probability at most `e^{-phi}/n`.
pub fn k_event_holds(q: &AllocationVector, view: &NormalizedView, phi: f64, z: u64) -> bool {
    let cap = (-phi).exp() / view.n() as f64;
    view.y
        .iter()
        .zip(q.q.iter())
        .all(|(&y, &mass)| y < z as f64 - 1.0 || mass <= cap)
}

/// Both sides of the smoothed-potential upper bound on `E[dGamma]`:
/// the exact expectation and `h(y) + sum_i q_i f(y_i)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaBoundCheck {
    pub exact: f64,
    pub bound: f64,
}

impl GammaBoundCheck {
    pub fn holds(&self) -> bool {
        self.exact <= self.bound
    }

    pub fn margin(&self) -> f64 {
        self.bound - self.exact
    }
}

pub fn check_gamma_bound(
    q: &AllocationVector,
    view: &NormalizedView,
    gamma: f64,
) -> Result<GammaBoundCheck, OracleError> {
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    let exact = expected_change(&PotentialSpec::Gamma { gamma }, q, view)?;
    let n = view.n() as f64;
    let g2 = gamma * gamma;
    let mut bound = NeumaierSum::new();
    for (rank, (&y, &mass)) in view.y.iter().zip(q.q.iter()).enumerate() {
        let up = guard(gamma * y, rank)?;
        let down = guard(-gamma * y, rank)?;
        // h-term (allocation-independent) plus q-weighted f-term
        bound.add(-(gamma / n - g2 / (n * n)) * up + (gamma / n + g2 / (n * n)) * down);
        bound.add(mass * ((gamma + g2) * up + (-gamma + g2) * down));
    }
    Ok(GammaBoundCheck {
        exact,
        bound: bound.value(),
    })
}

fn guard(exponent: f64, rank: usize) -> Result<f64, OracleError> {
    if exponent > crate::potential::MAX_EXPONENT {
        return Err(OracleError::Potential(PotentialError::ExponentOverflow {
            rank,
            exponent,
        }));
    }
    Ok(exponent.exp())
}

/// Exact distribution of `Gap(m)` plus exact expected potentials per step,
/// by exhaustive expansion of the outcome tree with analytic probabilities.
#[derive(Debug, Clone)]
pub struct ExactEnumeration {
    /// `(gap value, probability)`, ascending in gap.
    pub gap_pmf: Vec<(f64, f64)>,
    /// `expected_potentials[t][p]` = exact `E[potential p at step t]`,
    /// for `t = 0..=m`.
    pub expected_potentials: Vec<Vec<f64>>,
}

impl ExactEnumeration {
    /// `P[gap >= x]` for the smallest pmf support point at or above `x`.
    pub fn tail(&self, x: f64) -> f64 {
        self.gap_pmf
            .iter()
            .filter(|(v, _)| *v >= x - 1e-12)
            .map(|(_, p)| p)
            .sum()
    }

    /// Checks first-order stochastic dominance over another gap pmf:
    /// `P[self >= x] >= P[other >= x]` at every support point.
    pub fn stochastically_dominates(&self, other: &ExactEnumeration) -> bool {
        let mut support: Vec<f64> = self
            .gap_pmf
            .iter()
            .chain(other.gap_pmf.iter())
            .map(|(v, _)| *v)
            .collect();
        support.sort_by(f64::total_cmp);
        support.dedup();
        support
            .iter()
            .all(|&x| self.tail(x) >= other.tail(x) - 1e-12)
    }
}

type EnumKey = (Vec<u64>, Option<Vec<u64>>);

/// Exhaustively enumerates `m` steps of `spec` on `n` bins.
///
/// Supported for every pairwise process without hidden history (the delay
/// variants other than `b_batch` depend on the allocation order inside the
/// window, which the state tree does not carry).
pub fn enumerate_exact(
    spec: &ProcessSpec,
    n: usize,
    m: u64,
    potentials: &[PotentialSpec],
) -> Result<ExactEnumeration, OracleError> {
    let size = (n as f64).powi(m as i32);
    if size > ENUMERATION_GUARD {
        return Err(OracleError::TreeTooLarge {
            size,
            guard: ENUMERATION_GUARD,
        });
    }
    if matches!(spec, ProcessSpec::TauDelay { .. }) {
        return Err(OracleError::Unsupported(
            "tau_delay decisions depend on in-window history; use Monte Carlo".into(),
        ));
    }

    let batch = match spec {
        ProcessSpec::BBatch { b } => Some(*b),
        _ => None,
    };
    let mut frontier: BTreeMap<EnumKey, f64> = BTreeMap::new();
    frontier.insert(
        (vec![0; n], batch.map(|_| vec![0; n])),
        1.0,
    );

    let mut expected_potentials = Vec::with_capacity(m as usize + 1);
    for t in 0..=m {
        if !potentials.is_empty() {
            let mut row = vec![NeumaierSum::new(); potentials.len()];
            for ((loads, _), &prob) in &frontier {
                let view = LoadState::from_loads(loads).expect("nonempty").normalized();
                for (slot, pot) in row.iter_mut().zip(potentials.iter()) {
                    slot.add(prob * pot.eval(&view)?);
                }
            }
            expected_potentials.push(row.into_iter().map(|s| s.value()).collect());
        }
        if t == m {
            break;
        }
        let mut next: BTreeMap<EnumKey, f64> = BTreeMap::new();
        for ((loads, snapshot), prob) in frontier {
            let snapshot = match (batch, snapshot) {
                (Some(b), Some(s)) => Some(if t % b == 0 { loads.clone() } else { s }),
                (_, s) => s,
            };
            let dist = bin_distribution(spec, &loads, snapshot.as_deref())?;
            for (bin, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let mut child = loads.clone();
                child[bin] += 1;
                *next.entry((child, snapshot.clone())).or_insert(0.0) += prob * p;
            }
        }
        frontier = next;
    }

    // collapse to the gap pmf; max load is integral so group by it
    let mean = m as f64 / n as f64;
    let mut by_max: BTreeMap<u64, f64> = BTreeMap::new();
    for ((loads, _), prob) in &frontier {
        *by_max.entry(*loads.iter().max().unwrap()).or_insert(0.0) += prob;
    }
    Ok(ExactEnumeration {
        gap_pmf: by_max
            .into_iter()
            .map(|(max, p)| (max as f64 - mean, p))
            .collect(),
        expected_potentials,
    })
}

/// Bin-space distribution of the next allocation at a fixed (loads,
/// snapshot) configuration.
fn bin_distribution(
    spec: &ProcessSpec,
    loads: &[u64],
    snapshot: Option<&[u64]>,
) -> Result<Vec<f64>, OracleError> {
    let n = loads.len();
    if matches!(spec, ProcessSpec::OneChoice) {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let ctx = PairCtx {
        loads,
        snapshot,
        window: None,
    };
    let n2 = (n * n) as f64;
    let mut dist = vec![1.0 / n2; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let w = pair_mass_on_first(spec, &ctx, a, b)?;
            dist[a] += 2.0 / n2 * w;
            dist[b] += 2.0 / n2 * (1.0 - w);
        }
    }
    Ok(dist)
}

/// Monte Carlo gap pmf over `runs` simulations, comparable to
/// [`enumerate_exact`] output (same support convention).
pub fn monte_carlo_gap_pmf(
    spec: &ProcessSpec,
    n: usize,
    m: u64,
    runs: u64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut by_max: BTreeMap<u64, u64> = BTreeMap::new();
    for r in 0..runs {
        let mut sim = crate::process::Simulation::new(
            spec.clone(),
            n,
            RngStream::substream(seed, r),
        )
        .expect("valid spec");
        sim.run(m);
        *by_max.entry(sim.state.max_load()).or_insert(0) += 1;
    }
    let mean = m as f64 / n as f64;
    by_max
        .into_iter()
        .map(|(max, c)| (max as f64 - mean, c as f64 / runs as f64))
        .collect()
}

/// Total-variation distance between two gap pmfs on merged support.
pub fn total_variation(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut support: Vec<f64> = a.iter().chain(b.iter()).map(|(v, _)| *v).collect();
    support.sort_by(f64::total_cmp);
    support.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let mass = |pmf: &[(f64, f64)], x: f64| -> f64 {
        pmf.iter()
            .filter(|(v, _)| (v - x).abs() < 1e-9)
            .map(|(_, p)| p)
            .sum()
    };
    0.5 * support
        .iter()
        .map(|&x| (mass(a, x) - mass(b, x)).abs())
        .sum::<f64>()
}

pub mod verify;
