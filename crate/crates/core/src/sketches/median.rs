use crate::derive_seed;
use crate::error::{invalid, Result};
use crate::sketches::{CountSketch, Estimator};

/// Median of an odd-length list: the `⌈r/2⌉`-th order statistic.
pub fn median_estimate(values: &[f64]) -> Result<f64> {
    if values.is_empty() || values.len().is_multiple_of(2) {
        return Err(invalid(format!(
            "median needs an odd, non-empty list (got {})",
            values.len()
        )));
    }
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    Ok(*m)
}

/// `r` independent CountSketch replicas with a shared row count; reports the
/// median of their estimates.
#[derive(Debug, Clone)]
pub struct MedianTracker {
    replicas: Vec<CountSketch>,
    base_seed: u64,
}

impl MedianTracker {
    /// Replica `i` is seeded with `derive_seed(base_seed, i)`.
    pub fn new(k: usize, r: usize, base_seed: u64) -> Result<Self> {
        if r == 0 || r.is_multiple_of(2) {
            return Err(invalid(format!("replica count must be odd, got {r}")));
        }
        let replicas = (0..r as u64)
            .map(|i| CountSketch::new(k, derive_seed(base_seed, i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            replicas,
            base_seed,
        })
    }

    pub(crate) fn from_replicas(replicas: Vec<CountSketch>, base_seed: u64) -> Result<Self> {
        if replicas.is_empty() || replicas.len().is_multiple_of(2) {
            return Err(invalid("replica count must be odd"));
        }
        Ok(Self {
            replicas,
            base_seed,
        })
    }

    pub fn r(&self) -> usize {
        self.replicas.len()
    }

    pub fn k(&self) -> usize {
        self.replicas[0].k()
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn replicas(&self) -> &[CountSketch] {
        &self.replicas
    }

    pub fn updates(&self) -> u64 {
        self.replicas[0].updates()
    }

    /// Exact median of the replicas' integer estimates.
    pub fn estimate_exact(&self) -> u128 {
        let mut v: Vec<u128> = self.replicas.iter().map(|s| s.estimate_exact()).collect();
        let mid = v.len() / 2;
        *v.select_nth_unstable(mid).1
    }
}

impl Estimator for MedianTracker {
    fn update(&mut self, item: u64) -> Result<()> {
        self.replicas.iter_mut().try_for_each(|s| s.update(item))
    }

    fn update_by(&mut self, item: u64, count: u64) -> Result<()> {
        self.replicas
            .iter_mut()
            .try_for_each(|s| s.update_by(item, count))
    }

    fn estimate(&self) -> f64 {
        self.estimate_exact() as f64
    }

    fn counter_writes(&self) -> u64 {
        self.replicas
            .iter()
            .fold(0u64, |acc, s| acc.saturating_add(s.counter_writes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        assert_eq!(median_estimate(&[1.0, 2.0, 100.0]).unwrap(), 2.0);
        assert_eq!(median_estimate(&[5.0]).unwrap(), 5.0);
        assert_eq!(median_estimate(&[3.0, 1.0, 2.0, 9.0, 4.0]).unwrap(), 3.0);
    }

    #[test]
    fn median_matches_sort_oracle() {
        let values: Vec<f64> = (0..101u64).map(|i| ((i * 37) % 101) as f64).collect();
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(median_estimate(&values).unwrap(), sorted[50]);
    }

    #[test]
    fn even_or_empty_lists_are_rejected() {
        assert!(median_estimate(&[]).is_err());
        assert!(median_estimate(&[1.0, 2.0]).is_err());
        assert!(MedianTracker::new(8, 4, 0).is_err());
        assert!(MedianTracker::new(8, 0, 0).is_err());
    }

    #[test]
    fn single_replica_is_a_count_sketch() {
        let mut t = MedianTracker::new(16, 1, 9).unwrap();
        let mut cs = CountSketch::new(16, derive_seed(9, 0)).unwrap();
        for item in [1u64, 2, 3, 1, 5, 8, 1, 2] {
            t.update(item).unwrap();
            cs.update(item).unwrap();
            assert_eq!(t.estimate(), cs.estimate());
        }
    }

    #[test]
    fn replicas_are_distinctly_seeded() {
        let t = MedianTracker::new(8, 7, 1).unwrap();
        let mut seeds: Vec<u64> = t.replicas().iter().map(|s| s.seed().unwrap()).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 7);
    }

    #[test]
    fn single_item_is_exact_across_replicas() {
        let mut t = MedianTracker::new(8, 3, 4).unwrap();
        t.update_by(10, 9).unwrap();
        assert_eq!(t.estimate(), 81.0);
    }

    #[test]
    fn update_writes_one_counter_per_replica() {
        let mut t = MedianTracker::new(100, 5, 0).unwrap();
        t.update(3).unwrap();
        assert_eq!(t.counter_writes(), 5);
    }
}
