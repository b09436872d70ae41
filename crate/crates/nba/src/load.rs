//! Bin load vectors, normalized views and the gap metric.
//!
//! Loads stay exact unsigned integers for the whole simulation; conversion
//! to reals happens only when a [`NormalizedView`] is taken, so a run of
//! 10^9 allocations accumulates no floating-point drift.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("bin index {bin} out of range for {n} bins")]
    BinOutOfRange { bin: usize, n: usize },
    #[error("bin count must be positive")]
    EmptySystem,
}

/// The simulated system state: `n` bins, `t` balls allocated so far.
///
/// `max_load` is maintained exactly on every allocation. The minimum is
/// tracked as (value, number of bins at that value) and refreshed by an
/// `O(n)` scan only when the last minimal bin is raised, which amortizes to
/// `O(1)` per allocation because the minimum can rise at most `t/n` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadState {
    n: usize,
    t: u64,
    x: Vec<u64>,
    max_load: u64,
    min_load: u64,
    min_count: usize,
}

impl LoadState {
    /// An empty system of `n` bins.
    pub fn new(n: usize) -> Result<Self, LoadError> {
        if n == 0 {
            return Err(LoadError::EmptySystem);
        }
        Ok(LoadState {
            n,
            t: 0,
            x: vec![0; n],
            max_load: 0,
            min_load: 0,
            min_count: n,
        })
    }

    /// Builds a state with arbitrary loads; `t` is set to their sum.
    ///
    /// Intended for oracle experiments and tests, where mid-flight states
    /// need to be constructed without replaying an allocation history.
    pub fn from_loads(loads: &[u64]) -> Result<Self, LoadError> {
        if loads.is_empty() {
            return Err(LoadError::EmptySystem);
        }
        let mut s = LoadState {
            n: loads.len(),
            t: loads.iter().sum(),
            x: loads.to_vec(),
            max_load: 0,
            min_load: 0,
            min_count: 0,
        };
        s.recompute_caches();
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn balls(&self) -> u64 {
        self.t
    }

    pub fn loads(&self) -> &[u64] {
        &self.x
    }

    pub fn load(&self, bin: usize) -> u64 {
        self.x[bin]
    }

    pub fn max_load(&self) -> u64 {
        self.max_load
    }

    pub fn min_load(&self) -> u64 {
        self.min_load
    }

    /// Average load `t / n`.
    pub fn mean_load(&self) -> f64 {
        self.t as f64 / self.n as f64
    }

    /// Places one ball into `bin`.
    pub fn allocate(&mut self, bin: usize) -> Result<(), LoadError> {
        if bin >= self.n {
            return Err(LoadError::BinOutOfRange { bin, n: self.n });
        }
        self.allocate_unchecked(bin);
        Ok(())
    }

    /// Hot-path allocation for bins already validated by a process step.
    #[inline]
    pub(crate) fn allocate_unchecked(&mut self, bin: usize) {
        let old = self.x[bin];
        let new = old + 1;
        self.x[bin] = new;
        self.t += 1;
        if new > self.max_load {
            self.max_load = new;
        }
        if old == self.min_load {
            self.min_count -= 1;
            if self.min_count == 0 {
                self.refresh_min();
            }
        }
    }

    fn refresh_min(&mut self) {
        let mut min = u64::MAX;
        let mut count = 0;
        for &v in &self.x {
            if v < min {
                min = v;
                count = 1;
            } else if v == min {
                count += 1;
            }
        }
        self.min_load = min;
        self.min_count = count;
    }

    /// Recomputes every cache from the raw loads.
    pub fn recompute_caches(&mut self) {
        self.max_load = self.x.iter().copied().max().unwrap_or(0);
        self.refresh_min();
    }

    /// `Gap(t) = max_i x_i - t/n`, the standard imbalance metric.
    ///
    /// Always non-negative; zero exactly when every bin holds `t/n` balls.
    pub fn gap(&self) -> f64 {
        self.max_load as f64 - self.mean_load()
    }

    /// Sorted normalized view of the current loads.
    pub fn normalized(&self) -> NormalizedView {
        NormalizedView::of(self)
    }
}

/// Normalized loads `y_i = x_i - t/n` sorted non-increasingly.
///
/// The sort is deterministic: ties are broken by original bin index, and the
/// permutation is kept so rank-space quantities can be mapped back to bins.
#[derive(Debug, Clone)]
pub struct NormalizedView {
    /// Normalized loads, `y[0] >= y[1] >= ...`.
    pub y: Vec<f64>,
    /// `bin_of_rank[r]` is the bin occupying rank `r`.
    pub bin_of_rank: Vec<usize>,
    /// Number of bins with `y_i >= 0` (the overloaded set).
    pub overloaded_count: usize,
    /// Number of bins with `y_i < 0` (the underloaded set).
    pub underloaded_count: usize,
}

impl NormalizedView {
    pub fn of(state: &LoadState) -> Self {
        // one correction pass on the mean so the normalized loads sum to
        // zero at full double precision; with the raw mean the residual is
        // ~t*eps, which the exact-expectation oracle would inherit
        let mean0 = state.mean_load();
        let residual: f64 = state.loads().iter().map(|&x| x as f64 - mean0).sum::<f64>()
            / state.n() as f64;
        let mean = mean0 + residual;
        let mut order: Vec<usize> = (0..state.n()).collect();
        // stable sort: descending load, ties by original index
        order.sort_by(|&a, &b| state.load(b).cmp(&state.load(a)).then(a.cmp(&b)));
        let y: Vec<f64> = order.iter().map(|&i| state.load(i) as f64 - mean).collect();
        let overloaded = y.iter().take_while(|&&v| v >= 0.0).count();
        NormalizedView {
            underloaded_count: y.len() - overloaded,
            overloaded_count: overloaded,
            bin_of_rank: order,
            y,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// The gap, `y_1` in rank space.
    pub fn gap(&self) -> f64 {
        self.y[0]
    }

    /// Absolute-value potential `sum |y_i|`.
    pub fn abs_sum(&self) -> f64 {
        self.y.iter().map(|v| v.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn allocate_increments_and_caches() {
        let mut s = LoadState::new(3).unwrap();
        s.allocate(1).unwrap();
        assert_eq!(s.loads(), &[0, 1, 0]);
        assert_eq!(s.balls(), 1);

        let mut s = LoadState::from_loads(&[2, 0, 1]).unwrap();
        s.allocate(0).unwrap();
        assert_eq!(s.loads(), &[3, 0, 1]);
        assert_eq!(s.balls(), 4);
        assert_eq!(s.max_load(), 3);
        assert_eq!(s.min_load(), 0);
    }

    #[test]
    fn allocate_rejects_bad_bin() {
        let mut s = LoadState::new(2).unwrap();
        assert_eq!(
            s.allocate(2),
            Err(LoadError::BinOutOfRange { bin: 2, n: 2 })
        );
    }

    #[test]
    fn conservation_over_random_allocations() {
        let mut rng = RngStream::new(17);
        let mut s = LoadState::new(7).unwrap();
        for k in 1..=5000u64 {
            s.allocate(rng.bin(7)).unwrap();
            assert_eq!(s.balls(), k);
        }
        assert_eq!(s.loads().iter().sum::<u64>(), 5000);
        let (max, min) = (s.max_load(), s.min_load());
        s.recompute_caches();
        assert_eq!((max, min), (s.max_load(), s.min_load()));
    }

    #[test]
    fn min_cache_tracks_rising_minimum() {
        let mut s = LoadState::new(3).unwrap();
        for bin in [0, 1, 2, 0, 1, 2, 0] {
            s.allocate(bin).unwrap();
            let want = *s.loads().iter().min().unwrap();
            assert_eq!(s.min_load(), want);
        }
    }

    #[test]
    fn gap_values() {
        let s = LoadState::from_loads(&[2, 0, 1]).unwrap();
        assert_eq!(s.gap(), 1.0);
        let s = LoadState::new(4).unwrap();
        assert_eq!(s.gap(), 0.0);
    }

    #[test]
    fn gap_zero_iff_balanced() {
        let s = LoadState::from_loads(&[3, 3, 3]).unwrap();
        assert_eq!(s.gap(), 0.0);
        let s = LoadState::from_loads(&[3, 3, 4]).unwrap();
        assert!(s.gap() > 0.0);
    }

    #[test]
    fn normalized_simple_cases() {
        let v = LoadState::from_loads(&[1, 1]).unwrap().normalized();
        assert_eq!(v.y, vec![0.0, 0.0]);

        let v = LoadState::from_loads(&[2, 0, 1]).unwrap().normalized();
        assert_eq!(v.y, vec![1.0, 0.0, -1.0]);
        assert_eq!(v.bin_of_rank, vec![0, 2, 1]);
        assert_eq!(v.overloaded_count, 2);
        assert_eq!(v.underloaded_count, 1);
    }

    #[test]
    fn normalized_example_vector() {
        // n=8, t=102, mean 12.75
        let v = LoadState::from_loads(&[21, 19, 13, 12, 12, 11, 8, 6])
            .unwrap()
            .normalized();
        let want = [8.25, 6.25, 0.25, -0.75, -0.75, -1.75, -4.75, -6.75];
        for (a, b) in v.y.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(v.gap(), 8.25);
    }

    #[test]
    fn normalized_sums_to_zero_and_is_sorted() {
        let mut rng = RngStream::new(23);
        for _ in 0..200 {
            let n = 1 + rng.bin(40);
            let loads: Vec<u64> = (0..n).map(|_| rng.below(500)).collect();
            let v = LoadState::from_loads(&loads).unwrap().normalized();
            let sum: f64 = v.y.iter().sum();
            assert!(sum.abs() <= 1e-9 * n as f64, "sum {sum} for n={n}");
            assert!(v.y.windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(v.overloaded_count + v.underloaded_count, n);
            // permutation is a bijection
            let mut seen = vec![false; n];
            for &b in &v.bin_of_rank {
                assert!(!seen[b]);
                seen[b] = true;
            }
        }
    }
}
