//! l2 estimators: CountSketch, AMS and the median-of-CountSketch tracker.

mod ams;
mod count_sketch;
mod median;
pub mod state;

pub use ams::{AmsSigns, AmsSketch};
pub use count_sketch::CountSketch;
pub use median::{median_estimate, MedianTracker};

use crate::error::{invalid, Error, Result};
use crate::metrics::FrequencyOracle;

/// Largest counter magnitude. Any insertion-only stream of at most
/// `u64::MAX` items stays within it, and the squared norm of such a counter
/// vector always fits in a `u128`.
pub const COUNTER_LIMIT: u128 = u64::MAX as u128;

/// A streaming estimator of `||f^(t)||_2^2`.
pub trait Estimator {
    fn update(&mut self, item: u64) -> Result<()>;

    /// Same state transition as `count` calls to [`Estimator::update`].
    fn update_by(&mut self, item: u64, count: u64) -> Result<()> {
        for _ in 0..count {
            self.update(item)?;
        }
        Ok(())
    }

    fn estimate(&self) -> f64;

    /// Total counter writes performed so far.
    fn counter_writes(&self) -> u64;
}

impl<E: Estimator + ?Sized> Estimator for Box<E> {
    fn update(&mut self, item: u64) -> Result<()> {
        (**self).update(item)
    }

    fn update_by(&mut self, item: u64, count: u64) -> Result<()> {
        (**self).update_by(item, count)
    }

    fn estimate(&self) -> f64 {
        (**self).estimate()
    }

    fn counter_writes(&self) -> u64 {
        (**self).counter_writes()
    }
}

/// Adds `delta` to `counter`, keeping `sum_sq = Σ counter²` current.
#[inline]
pub(crate) fn apply_delta(counter: &mut i128, sum_sq: &mut u128, delta: i128) -> Result<()> {
    let old = *counter;
    let new = old + delta;
    let mag = new.unsigned_abs();
    if mag > COUNTER_LIMIT {
        return Err(Error::Overflow(format!(
            "counter magnitude {mag} exceeds {COUNTER_LIMIT}"
        )));
    }
    let old_sq = old.unsigned_abs() * old.unsigned_abs();
    let next = (*sum_sq - old_sq)
        .checked_add(mag * mag)
        .ok_or_else(|| Error::Overflow("squared sketch norm exceeds 128 bits".into()))?;
    *counter = new;
    *sum_sq = next;
    Ok(())
}

/// `⌈2/(ε²δ)⌉`, the Chebyshev-sized row count for constant-δ modes.
pub fn default_rows(eps: f64, delta: f64) -> Result<usize> {
    check_eps_delta(eps, delta)?;
    Ok(ceil_tolerant(2.0 / (eps * eps * delta)))
}

/// `2⌈ln(1/δ)⌉ + 1` replicas (always odd).
pub fn default_replicas(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta {delta} not in (0, 1)")));
    }
    Ok(2 * ceil_tolerant((1.0 / delta).ln()) + 1)
}

fn check_eps_delta(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps {eps} must be positive")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta {delta} not in (0, 1]")));
    }
    Ok(())
}

// Ceiling that ignores floating noise just above an integer, so that
// 2/(0.2²·0.25) yields 200 rather than 201.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Estimator families selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    CountSketch,
    Ams,
    AmsIndependent,
    Median,
    Oracle,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::CountSketch => "cs",
            Self::Ams => "ams",
            Self::AmsIndependent => "ams_indep",
            Self::Median => "median",
            Self::Oracle => "oracle",
        }
    }
}

/// Closed set of estimators, for the CLI and the benchmark.
#[derive(Debug, Clone)]
pub enum AnyEstimator {
    CountSketch(CountSketch),
    Ams(AmsSketch),
    Median(MedianTracker),
    Oracle(FrequencyOracle),
}

impl AnyEstimator {
    /// `r` is only used by the median tracker.
    pub fn build(kind: EstimatorKind, k: usize, r: usize, seed: u64) -> Result<Self> {
        Ok(match kind {
            EstimatorKind::CountSketch => Self::CountSketch(CountSketch::new(k, seed)?),
            EstimatorKind::Ams => Self::Ams(AmsSketch::new(k, seed)?),
            EstimatorKind::AmsIndependent => Self::Ams(AmsSketch::new_independent(k, seed)?),
            EstimatorKind::Median => Self::Median(MedianTracker::new(k, r, seed)?),
            EstimatorKind::Oracle => Self::Oracle(FrequencyOracle::new()),
        })
    }

    /// Unit updates absorbed so far.
    pub fn updates(&self) -> u64 {
        match self {
            Self::CountSketch(s) => s.updates(),
            Self::Ams(s) => s.updates(),
            Self::Median(s) => s.updates(),
            Self::Oracle(o) => o.length(),
        }
    }
}

impl Estimator for AnyEstimator {
    fn update(&mut self, item: u64) -> Result<()> {
        match self {
            Self::CountSketch(s) => s.update(item),
            Self::Ams(s) => s.update(item),
            Self::Median(s) => s.update(item),
            Self::Oracle(o) => o.update(item),
        }
    }

    fn update_by(&mut self, item: u64, count: u64) -> Result<()> {
        match self {
            Self::CountSketch(s) => s.update_by(item, count),
            Self::Ams(s) => s.update_by(item, count),
            Self::Median(s) => s.update_by(item, count),
            Self::Oracle(o) => o.update_by(item, count),
        }
    }

    fn estimate(&self) -> f64 {
        match self {
            Self::CountSketch(s) => s.estimate(),
            Self::Ams(s) => s.estimate(),
            Self::Median(s) => s.estimate(),
            Self::Oracle(o) => o.estimate(),
        }
    }

    fn counter_writes(&self) -> u64 {
        match self {
            Self::CountSketch(s) => s.counter_writes(),
            Self::Ams(s) => s.counter_writes(),
            Self::Median(s) => s.counter_writes(),
            Self::Oracle(o) => o.counter_writes(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_row_count() {
        assert_eq!(default_rows(0.2, 0.25).unwrap(), 200);
        assert_eq!(default_rows(0.02, 0.25).unwrap(), 20_000);
        assert_eq!(default_rows(0.3, 1.0).unwrap(), 23);
        assert!(default_rows(0.0, 0.5).is_err());
        assert!(default_rows(0.1, 0.0).is_err());
    }

    #[test]
    fn default_replica_count_is_odd() {
        assert_eq!(default_replicas(0.01).unwrap(), 11);
        assert_eq!(default_replicas(0.5).unwrap(), 3);
        assert_eq!(default_replicas(0.25).unwrap(), 5);
        for d in [0.9, 0.3, 0.1, 1e-3, 1e-9] {
            assert_eq!(default_replicas(d).unwrap() % 2, 1);
        }
        assert!(default_replicas(1.0).is_err());
    }
}
