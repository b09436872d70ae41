//! Potential functions evaluated on normalized load views.
//!
//! Five families cover everything the drop-inequality suites and the
//! instrumented experiments need:
//!
//! * `Gamma`   — hyperbolic cosine, `sum_i e^{g y_i} + e^{-g y_i}`
//! * `Lambda`  — hyperbolic cosine with an offset,
//!   `sum_i e^{a (y_i - off)^+} + e^{a (-y_i - off)^+}` (the `V` variant is
//!   the same shape with a smaller smoothing parameter)
//! * `AbsoluteValue` — `sum_i |y_i|`
//! * `Quadratic`     — `sum_i y_i^2`
//! * `SuperExp`      — `sum_i e^{phi (y_i - z)^+}`
//!
//! Evaluation is in double precision with a hard exponent guard: any single
//! exponent above [`MAX_EXPONENT`] raises an error instead of silently
//! saturating to infinity, because the inequality checks downstream would
//! otherwise compare garbage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::load::NormalizedView;

/// Exponent ceiling for all exponential potentials.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("exponent {exponent} at rank {rank} exceeds {MAX_EXPONENT}; potential would overflow")]
    ExponentOverflow { rank: usize, exponent: f64 },
    #[error("{what} must be positive, got {value}")]
    BadParameter { what: &'static str, value: f64 },
}

/// One potential-function instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "potential", rename_all = "snake_case")]
pub enum PotentialSpec {
    Gamma { gamma: f64 },
    Lambda { alpha: f64, offset: f64 },
    AbsoluteValue,
    Quadratic,
    V { alpha1: f64, offset: f64 },
    SuperExp { phi: f64, z: u64 },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), PotentialError> {
        let check = |what: &'static str, v: f64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(PotentialError::BadParameter { what, value: v })
            }
        };
        match *self {
            PotentialSpec::Gamma { gamma } => check("gamma", gamma, gamma > 0.0 && gamma < 1.0),
            PotentialSpec::Lambda { alpha, offset } => {
                check("alpha", alpha, alpha > 0.0 && alpha <= 0.5)?;
                check("offset", offset, offset >= 0.0)
            }
            PotentialSpec::V { alpha1, offset } => {
                check("alpha1", alpha1, alpha1 > 0.0 && alpha1 <= 0.5)?;
                check("offset", offset, offset >= 0.0)
            }
            PotentialSpec::SuperExp { phi, .. } => check("phi", phi, phi > 0.0),
            PotentialSpec::AbsoluteValue | PotentialSpec::Quadratic => Ok(()),
        }
    }

    /// Short name used in checkpoint CSV rows.
    pub fn name(&self) -> String {
        match self {
            PotentialSpec::Gamma { gamma } => format!("gamma[{gamma}]"),
            PotentialSpec::Lambda { alpha, offset } => format!("lambda[{alpha},{offset}]"),
            PotentialSpec::AbsoluteValue => "abs".into(),
            PotentialSpec::Quadratic => "quad".into(),
            PotentialSpec::V { alpha1, offset } => format!("v[{alpha1},{offset}]"),
            PotentialSpec::SuperExp { phi, z } => format!("superexp[{phi},{z}]"),
        }
    }

    /// Evaluates the potential on a normalized view.
    pub fn eval(&self, view: &NormalizedView) -> Result<f64, PotentialError> {
        let mut sum = NeumaierSum::new();
        match *self {
            PotentialSpec::Gamma { gamma } => {
                for (rank, &y) in view.y.iter().enumerate() {
                    sum.add(guarded_exp(gamma * y, rank)?);
                    sum.add(guarded_exp(-gamma * y, rank)?);
                }
            }
            PotentialSpec::Lambda { alpha, offset } | PotentialSpec::V { alpha1: alpha, offset } => {
                for (rank, &y) in view.y.iter().enumerate() {
                    sum.add(guarded_exp(alpha * pos(y - offset), rank)?);
                    sum.add(guarded_exp(alpha * pos(-y - offset), rank)?);
                }
            }
            PotentialSpec::AbsoluteValue => {
                for &y in &view.y {
                    sum.add(y.abs());
                }
            }
            PotentialSpec::Quadratic => {
                for &y in &view.y {
                    sum.add(y * y);
                }
            }
            PotentialSpec::SuperExp { phi, z } => {
                for (rank, &y) in view.y.iter().enumerate() {
                    sum.add(guarded_exp(phi * pos(y - z as f64), rank)?);
                }
            }
        }
        Ok(sum.value())
    }

    /// Change of the potential when one ball lands in the rank-`placed` bin.
    ///
    /// Every `y_j` shifts by `-1/n` and the chosen bin additionally gains 1.
    /// Each per-bin difference is computed in a cancellation-free form
    /// (`expm1` for the exponential families, factored differences for the
    /// quadratic), so results stay accurate to a few ulps even when the
    /// potential itself is large.
    pub fn delta_for_placement(
        &self,
        view: &NormalizedView,
        placed: usize,
    ) -> Result<f64, PotentialError> {
        let n = view.n() as f64;
        let shift = -1.0 / n;
        let mut sum = NeumaierSum::new();
        for (rank, &y) in view.y.iter().enumerate() {
            // the shift d is kept exact; forming y + d would round and the
            // quadratic difference would pick up ulp(y)-sized noise per bin
            let d = if rank == placed { 1.0 + shift } else { shift };
            let term = match *self {
                PotentialSpec::Gamma { gamma } => {
                    let up = guarded_exp(gamma * y, rank)?;
                    let down = guarded_exp(-gamma * y, rank)?;
                    up * (gamma * d).exp_m1() + down * (-gamma * d).exp_m1()
                }
                PotentialSpec::Lambda { alpha, offset }
                | PotentialSpec::V { alpha1: alpha, offset } => {
                    hinge_exp_diff(alpha, y - offset, d, rank)?
                        + hinge_exp_diff(alpha, -y - offset, -d, rank)?
                }
                PotentialSpec::AbsoluteValue => {
                    if y >= 0.0 && y + d >= 0.0 {
                        d
                    } else if y <= 0.0 && y + d <= 0.0 {
                        -d
                    } else {
                        (y + d).abs() - y.abs()
                    }
                }
                PotentialSpec::Quadratic => d * (2.0 * y + d),
                PotentialSpec::SuperExp { phi, z } => {
                    hinge_exp_diff(phi, y - z as f64, d, rank)?
                }
            };
            sum.add(term);
        }
        Ok(sum.value())
    }
}

#[inline]
fn pos(u: f64) -> f64 {
    u.max(0.0)
}

#[inline]
fn guarded_exp(exponent: f64, rank: usize) -> Result<f64, PotentialError> {
    if exponent > MAX_EXPONENT {
        return Err(PotentialError::ExponentOverflow { rank, exponent });
    }
    Ok(exponent.exp())
}

/// `e^{a (u+d)^+} - e^{a u^+}` without cancellation across the hinge.
#[inline]
fn hinge_exp_diff(a: f64, u: f64, d: f64, rank: usize) -> Result<f64, PotentialError> {
    let u_new = u + d;
    let (p, p_new) = (pos(u), pos(u_new));
    if p == 0.0 && p_new == 0.0 {
        return Ok(0.0);
    }
    if p > 0.0 && p_new > 0.0 {
        // both sides above the hinge: exact exponent difference is d
        let base = guarded_exp(a * u, rank)?;
        if a * u_new > MAX_EXPONENT {
            return Err(PotentialError::ExponentOverflow {
                rank,
                exponent: a * u_new,
            });
        }
        return Ok(base * (a * d).exp_m1());
    }
    // one side sits on the hinge: both exponents are small near the crossing
    if a * p > MAX_EXPONENT || a * p_new > MAX_EXPONENT {
        return Err(PotentialError::ExponentOverflow {
            rank,
            exponent: (a * p).max(a * p_new),
        });
    }
    Ok((a * p_new).exp_m1() - (a * p).exp_m1())
}

/// Compensated (Neumaier) summation; keeps long reductions at ulp accuracy.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::LoadState;
    use crate::rng::RngStream;

    fn view_of(loads: &[u64]) -> NormalizedView {
        LoadState::from_loads(loads).unwrap().normalized()
    }

    #[test]
    fn empty_system_values() {
        let v = view_of(&[0, 0, 0, 0]);
        let n = 4.0;
        assert_eq!(
            PotentialSpec::Gamma { gamma: 0.3 }.eval(&v).unwrap(),
            2.0 * n
        );
        assert_eq!(
            PotentialSpec::Lambda { alpha: 0.1, offset: 5.0 }.eval(&v).unwrap(),
            2.0 * n
        );
        assert_eq!(PotentialSpec::AbsoluteValue.eval(&v).unwrap(), 0.0);
        assert_eq!(PotentialSpec::Quadratic.eval(&v).unwrap(), 0.0);
        assert_eq!(
            PotentialSpec::SuperExp { phi: 4.0, z: 2 }.eval(&v).unwrap(),
            n
        );
    }

    #[test]
    fn gamma_on_small_vector() {
        // y = [1, 0, -1], gamma = 0.5: 2(e^{1/2} + e^{-1/2}) + 2
        let v = view_of(&[2, 1, 0]);
        let got = PotentialSpec::Gamma { gamma: 0.5 }.eval(&v).unwrap();
        assert!((got - 6.5105038608255231).abs() < 1e-12, "{got}");
    }

    #[test]
    fn superexp_on_small_vector() {
        // y = [3, 0, -3], phi = 4, z = 2: e^4 + 1 + 1
        let v = view_of(&[6, 3, 0]);
        assert_eq!(v.y, vec![3.0, 0.0, -3.0]);
        let got = PotentialSpec::SuperExp { phi: 4.0, z: 2 }.eval(&v).unwrap();
        assert!((got - 56.598150033144236).abs() < 1e-12, "{got}");
    }

    #[test]
    fn overflow_is_an_error_not_infinity() {
        let v = view_of(&[10_000, 0]);
        let err = PotentialSpec::Gamma { gamma: 0.9 }.eval(&v).unwrap_err();
        match err {
            PotentialError::ExponentOverflow { rank, exponent } => {
                assert_eq!(rank, 0);
                assert!(exponent > MAX_EXPONENT);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lower_bounds_and_equality_cases() {
        let mut rng = RngStream::new(77);
        for _ in 0..200 {
            let n = 2 + rng.bin(16);
            let loads: Vec<u64> = (0..n).map(|_| rng.below(30)).collect();
            let v = view_of(&loads);
            let nf = n as f64;
            let gamma = PotentialSpec::Gamma { gamma: 0.4 }.eval(&v).unwrap();
            assert!(gamma >= 2.0 * nf - 1e-12);
            let lambda = PotentialSpec::Lambda { alpha: 0.2, offset: 3.0 }
                .eval(&v)
                .unwrap();
            assert!(lambda >= 2.0 * nf - 1e-12);
            // equality iff every |y_i| <= offset
            let all_inside = v.y.iter().all(|y| y.abs() <= 3.0);
            assert_eq!((lambda - 2.0 * nf).abs() < 1e-9, all_inside);
            let se = PotentialSpec::SuperExp { phi: 5.0, z: 4 }.eval(&v).unwrap();
            assert!(se >= nf - 1e-12);
            let all_below = v.y.iter().all(|&y| y <= 4.0);
            assert_eq!((se - nf).abs() < 1e-9, all_below);
        }
    }

    #[test]
    fn quadratic_dominates_scaled_abs() {
        // Cauchy-Schwarz: Upsilon >= Delta^2 / n
        let mut rng = RngStream::new(78);
        for _ in 0..200 {
            let n = 2 + rng.bin(32);
            let loads: Vec<u64> = (0..n).map(|_| rng.below(100)).collect();
            let v = view_of(&loads);
            let quad = PotentialSpec::Quadratic.eval(&v).unwrap();
            let abs = PotentialSpec::AbsoluteValue.eval(&v).unwrap();
            assert!(quad >= abs * abs / n as f64 - 1e-9);
        }
    }

    #[test]
    fn one_step_smoothness_of_gamma() {
        // Gamma^{t+1} within [e^-g, e^g] * Gamma^t for any single allocation,
        // exhaustively over small states.
        let gamma = 0.37;
        let spec = PotentialSpec::Gamma { gamma };
        for a in 0..4u64 {
            for b in 0..4u64 {
                for c in 0..4u64 {
                    let loads = [a, b, c];
                    for bin in 0..3 {
                        let before = LoadState::from_loads(&loads).unwrap();
                        let mut after = before.clone();
                        after.allocate(bin).unwrap();
                        let p0 = spec.eval(&before.normalized()).unwrap();
                        let p1 = spec.eval(&after.normalized()).unwrap();
                        assert!(p1 <= gamma.exp() * p0 + 1e-9);
                        assert!(p1 >= (-gamma).exp() * p0 - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn one_step_smoothness_of_v() {
        let alpha1 = 0.05;
        let spec = PotentialSpec::V { alpha1, offset: 2.0 };
        let mut rng = RngStream::new(79);
        for _ in 0..300 {
            let n = 2 + rng.bin(8);
            let loads: Vec<u64> = (0..n).map(|_| rng.below(20)).collect();
            let before = LoadState::from_loads(&loads).unwrap();
            let mut after = before.clone();
            after.allocate(rng.bin(n)).unwrap();
            let p0 = spec.eval(&before.normalized()).unwrap();
            let p1 = spec.eval(&after.normalized()).unwrap();
            assert!(p1 <= alpha1.exp() * p0 + 1e-9);
            assert!(p1 >= (-alpha1).exp() * p0 - 1e-9);
        }
    }

    #[test]
    fn delta_matches_direct_difference() {
        let mut rng = RngStream::new(80);
        let specs = [
            PotentialSpec::Gamma { gamma: 0.13 },
            PotentialSpec::Lambda { alpha: 0.1, offset: 4.0 },
            PotentialSpec::AbsoluteValue,
            PotentialSpec::Quadratic,
            PotentialSpec::SuperExp { phi: 4.0, z: 3 },
        ];
        for _ in 0..100 {
            let n = 2 + rng.bin(12);
            let loads: Vec<u64> = (0..n).map(|_| rng.below(25)).collect();
            let state = LoadState::from_loads(&loads).unwrap();
            let view = state.normalized();
            let placed = rng.bin(n);
            let placed_bin = view.bin_of_rank[placed];
            let mut after = state.clone();
            after.allocate(placed_bin).unwrap();
            for spec in &specs {
                let fast = spec.delta_for_placement(&view, placed).unwrap();
                let direct = spec.eval(&after.normalized()).unwrap()
                    - spec.eval(&view).unwrap();
                assert!(
                    (fast - direct).abs() < 1e-8 * (1.0 + direct.abs()),
                    "{spec:?}: {fast} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(PotentialSpec::Gamma { gamma: 1.5 }.validate().is_err());
        assert!(PotentialSpec::Gamma { gamma: 0.0 }.validate().is_err());
        assert!(PotentialSpec::Lambda { alpha: 0.6, offset: 1.0 }.validate().is_err());
        assert!(PotentialSpec::SuperExp { phi: -1.0, z: 1 }.validate().is_err());
        assert!(PotentialSpec::Quadratic.validate().is_ok());
    }
}
