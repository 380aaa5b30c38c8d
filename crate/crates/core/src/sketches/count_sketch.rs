use crate::derive_seed;
use crate::error::{invalid, Error, Result};
use crate::hashing::{sample_kwise, KWiseHash, MERSENNE_61};
use crate::sketches::{apply_delta, Estimator};

/// CountSketch with `k` signed counters.
///
/// Item `i` lands in bucket `h(i)` with sign `g(i)`, so the sketch is `Πf` for
/// the matrix with a single `±1` per column. The squared norm of the counter
/// vector is maintained alongside the counters, which keeps both updates and
/// estimates O(1) regardless of `k`.
#[derive(Debug, Clone)]
pub struct CountSketch {
    counters: Vec<i128>,
    sum_sq: u128,
    bucket: KWiseHash,
    sign: KWiseHash,
    seed: Option<u64>,
    writes: u64,
    updates: u64,
}

impl CountSketch {
    /// Samples `h` and `g` from seeds derived from `seed`.
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        let bucket = sample_kwise(k as u64, derive_seed(seed, 0))?;
        let sign = sample_kwise(2, derive_seed(seed, 1))?;
        let mut sketch = Self::from_hashes(bucket, sign)?;
        sketch.seed = Some(seed);
        Ok(sketch)
    }

    /// Builds a sketch around explicit hashes. `sign` must have range 2.
    pub fn from_hashes(bucket: KWiseHash, sign: KWiseHash) -> Result<Self> {
        if sign.range() != 2 {
            return Err(invalid("sign hash must have range 2"));
        }
        if bucket.range() > usize::MAX as u64 {
            return Err(invalid("bucket range exceeds addressable memory"));
        }
        Ok(Self {
            counters: vec![0; bucket.range() as usize],
            sum_sq: 0,
            bucket,
            sign,
            seed: None,
            writes: 0,
            updates: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.counters.len()
    }

    pub fn counters(&self) -> &[i128] {
        &self.counters
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn bucket_hash(&self) -> &KWiseHash {
        &self.bucket
    }

    pub fn sign_hash(&self) -> &KWiseHash {
        &self.sign
    }

    /// Number of unit updates absorbed so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// `||Πf||_2^2` as an exact integer.
    pub fn estimate_exact(&self) -> u128 {
        self.sum_sq
    }

    /// Recomputes `sum_j counters[j]^2` from scratch.
    pub fn recompute_sum_sq(&self) -> Result<u128> {
        self.counters.iter().try_fold(0u128, |acc, &c| {
            let sq = c.unsigned_abs() * c.unsigned_abs();
            acc.checked_add(sq)
                .ok_or_else(|| Error::Overflow("sum of squared counters".into()))
        })
    }

    pub(crate) fn restore(k: usize, seed: u64, counters: Vec<i128>, updates: u64) -> Result<Self> {
        let mut sketch = Self::new(k, seed)?;
        if counters.len() != k {
            return Err(Error::State(format!(
                "expected {k} counters, found {}",
                counters.len()
            )));
        }
        sketch.counters = counters;
        sketch.sum_sq = sketch.recompute_sum_sq()?;
        sketch.updates = updates;
        Ok(sketch)
    }

    #[inline]
    fn add(&mut self, item: u64, count: u64) -> Result<()> {
        if item >= MERSENNE_61 {
            return Err(invalid(format!("item {item} not below 2^61-1")));
        }
        if count == 0 {
            return Ok(());
        }
        let j = self.bucket.eval_unchecked(item) as usize;
        let delta = self.sign.sign_unchecked(item) as i128 * count as i128;
        apply_delta(&mut self.counters[j], &mut self.sum_sq, delta)?;
        self.writes = self.writes.saturating_add(count);
        self.updates = self.updates.saturating_add(count);
        Ok(())
    }
}

impl Estimator for CountSketch {
    fn update(&mut self, item: u64) -> Result<()> {
        self.add(item, 1)
    }

    fn update_by(&mut self, item: u64, count: u64) -> Result<()> {
        self.add(item, count)
    }

    fn estimate(&self) -> f64 {
        self.sum_sq as f64
    }

    fn counter_writes(&self) -> u64 {
        self.writes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketches::COUNTER_LIMIT;

    fn constant(value: u64, range: u64) -> KWiseHash {
        let mut c = [0u64; 8];
        c[0] = value;
        KWiseHash::from_coeffs(c, range).unwrap()
    }

    #[test]
    fn single_update_touches_one_bucket() {
        // h = 2, g = -1 for every item
        let mut cs = CountSketch::from_hashes(constant(2, 4), constant(0, 2)).unwrap();
        cs.update(9).unwrap();
        assert_eq!(cs.counters(), &[0, 0, -1, 0]);
        assert_eq!(cs.counter_writes(), 1);
    }

    #[test]
    fn single_item_stream_is_exact() {
        let mut cs = CountSketch::new(16, 3).unwrap();
        for _ in 0..5 {
            cs.update(42).unwrap();
        }
        assert_eq!(cs.estimate_exact(), 25);
        let j = cs.bucket_hash().eval(42).unwrap() as usize;
        let g = cs.sign_hash().eval_sign(42).unwrap() as i128;
        assert_eq!(cs.counters()[j], 5 * g);
    }

    #[test]
    fn equal_sign_collision_doubles() {
        let a = 7u64;
        let mut cs = CountSketch::from_hashes(constant(0, 1), constant(1, 2)).unwrap();
        cs.update_by(1, a).unwrap();
        cs.update_by(2, a).unwrap();
        assert_eq!(cs.counters(), &[2 * a as i128]);
        assert_eq!(cs.estimate_exact(), 4 * (a as u128).pow(2));
    }

    #[test]
    fn opposite_sign_collision_cancels() {
        // g(x) = x mod 2: item 1 -> +1, item 2 -> -1
        let mut c = [0u64; 8];
        c[1] = 1;
        let sign = KWiseHash::from_coeffs(c, 2).unwrap();
        let mut cs = CountSketch::from_hashes(constant(0, 1), sign).unwrap();
        cs.update_by(1, 6).unwrap();
        cs.update_by(2, 6).unwrap();
        assert_eq!(cs.estimate(), 0.0);
    }

    #[test]
    fn empty_sketch_estimates_zero() {
        let cs = CountSketch::new(8, 0).unwrap();
        assert_eq!(cs.estimate(), 0.0);
        assert_eq!(cs.recompute_sum_sq().unwrap(), 0);
    }

    #[test]
    fn item_outside_field_is_rejected() {
        let mut cs = CountSketch::new(8, 0).unwrap();
        assert!(matches!(
            cs.update(MERSENNE_61),
            Err(Error::InvalidParameter(_))
        ));
        assert_eq!(cs.counter_writes(), 0);
    }

    #[test]
    fn counter_overflow_is_reported() {
        let mut cs = CountSketch::from_hashes(constant(0, 1), constant(1, 2)).unwrap();
        cs.update_by(1, u64::MAX).unwrap();
        assert_eq!(cs.counters()[0] as u128, COUNTER_LIMIT);
        assert!(matches!(cs.update(1), Err(Error::Overflow(_))));
        assert_eq!(cs.counters()[0] as u128, COUNTER_LIMIT);
    }

    #[test]
    fn batched_and_unit_updates_agree() {
        let mut a = CountSketch::new(32, 11).unwrap();
        let mut b = CountSketch::new(32, 11).unwrap();
        for item in 1..50u64 {
            a.update_by(item, item % 5).unwrap();
            for _ in 0..item % 5 {
                b.update(item).unwrap();
            }
        }
        assert_eq!(a.counters(), b.counters());
        assert_eq!(a.counter_writes(), b.counter_writes());
        assert_eq!(a.estimate_exact(), a.recompute_sum_sq().unwrap());
    }

    #[test]
    fn zero_rows_is_invalid() {
        assert!(CountSketch::new(0, 1).is_err());
    }
}
