use crate::error::{invalid, Error, Result};
use crate::hashing::{sample_kwise, KWiseHash, MERSENNE_61};
use crate::sketches::{apply_delta, Estimator};
use crate::{derive_seed, splitmix64};

/// Where an [`AmsSketch`] gets its `±1` entries.
#[derive(Debug, Clone)]
pub enum AmsSigns {
    /// One independent 8-wise hash per row.
    KWise(Vec<KWiseHash>),
    /// A keyed PRF per `(row, item)` that stands in for fully independent
    /// Rademacher entries.
    Independent { seed: u64 },
    /// Explicit `table[row][item]` signs for fixtures.
    Table(Vec<Vec<i8>>),
}

/// Dense `±1/√k` sketch. Accumulators hold `sum_i s_j(i) f_i`; the `1/k`
/// normalization is applied when reading the estimate.
#[derive(Debug, Clone)]
pub struct AmsSketch {
    accumulators: Vec<i128>,
    sum_sq: u128,
    signs: AmsSigns,
    seed: Option<u64>,
    writes: u64,
    updates: u64,
}

impl AmsSketch {
    /// 8-wise row hashes derived from `seed`.
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        let rows = (0..k as u64)
            .map(|j| sample_kwise(2, derive_seed(seed, j)))
            .collect::<Result<Vec<_>>>()?;
        let mut sketch = Self::with_signs(k, AmsSigns::KWise(rows))?;
        sketch.seed = Some(seed);
        Ok(sketch)
    }

    /// PRF-backed signs emulating a fully independent sketch.
    pub fn new_independent(k: usize, seed: u64) -> Result<Self> {
        let mut sketch = Self::with_signs(k, AmsSigns::Independent { seed })?;
        sketch.seed = Some(seed);
        Ok(sketch)
    }

    pub fn from_row_hashes(rows: Vec<KWiseHash>) -> Result<Self> {
        if rows.iter().any(|h| h.range() != 2) {
            return Err(invalid("AMS row hashes must have range 2"));
        }
        Self::with_signs(rows.len(), AmsSigns::KWise(rows))
    }

    /// Fixture constructor: `table[row][item]` must be `±1`.
    pub fn from_sign_table(table: Vec<Vec<i8>>) -> Result<Self> {
        if table.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(invalid("sign table entries must be +1 or -1"));
        }
        Self::with_signs(table.len(), AmsSigns::Table(table))
    }

    fn with_signs(k: usize, signs: AmsSigns) -> Result<Self> {
        if k == 0 {
            return Err(invalid("AMS sketch needs at least one row"));
        }
        Ok(Self {
            accumulators: vec![0; k],
            sum_sq: 0,
            signs,
            seed: None,
            writes: 0,
            updates: 0,
        })
    }

    pub(crate) fn restore(
        k: usize,
        seed: u64,
        independent: bool,
        accumulators: Vec<i128>,
        updates: u64,
    ) -> Result<Self> {
        let mut sketch = if independent {
            Self::new_independent(k, seed)?
        } else {
            Self::new(k, seed)?
        };
        if accumulators.len() != k {
            return Err(Error::State(format!(
                "expected {k} accumulators, found {}",
                accumulators.len()
            )));
        }
        sketch.sum_sq = accumulators.iter().try_fold(0u128, |acc, &a| {
            acc.checked_add(a.unsigned_abs() * a.unsigned_abs())
                .ok_or_else(|| Error::State("accumulator norm overflows".into()))
        })?;
        sketch.accumulators = accumulators;
        sketch.updates = updates;
        Ok(sketch)
    }

    pub fn k(&self) -> usize {
        self.accumulators.len()
    }

    pub fn accumulators(&self) -> &[i128] {
        &self.accumulators
    }

    pub fn signs(&self) -> &AmsSigns {
        &self.signs
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// `sum_j accumulators[j]^2`, before the `1/k` normalization.
    pub fn raw_sum_sq(&self) -> u128 {
        self.sum_sq
    }

    fn add(&mut self, item: u64, count: u64) -> Result<()> {
        if item >= MERSENNE_61 {
            return Err(invalid(format!("item {item} not below 2^61-1")));
        }
        if count == 0 {
            return Ok(());
        }
        let c = count as i128;
        match &self.signs {
            AmsSigns::KWise(rows) => {
                for (acc, h) in self.accumulators.iter_mut().zip(rows) {
                    apply_delta(acc, &mut self.sum_sq, h.sign_unchecked(item) as i128 * c)?;
                }
            }
            AmsSigns::Independent { seed } => {
                let base = splitmix64(seed ^ splitmix64(item));
                for (block, chunk) in self.accumulators.chunks_mut(64).enumerate() {
                    let word = splitmix64(base.wrapping_add(block as u64));
                    for (bit, acc) in chunk.iter_mut().enumerate() {
                        let s = if (word >> bit) & 1 == 1 { c } else { -c };
                        apply_delta(acc, &mut self.sum_sq, s)?;
                    }
                }
            }
            AmsSigns::Table(table) => {
                let idx = item as usize;
                if table.iter().any(|row| idx >= row.len()) {
                    return Err(invalid(format!("item {item} missing from sign table")));
                }
                for (acc, row) in self.accumulators.iter_mut().zip(table) {
                    apply_delta(acc, &mut self.sum_sq, row[idx] as i128 * c)?;
                }
            }
        }
        let k = self.accumulators.len() as u64;
        self.writes = self.writes.saturating_add(count.saturating_mul(k));
        self.updates = self.updates.saturating_add(count);
        Ok(())
    }
}

impl Estimator for AmsSketch {
    fn update(&mut self, item: u64) -> Result<()> {
        self.add(item, 1)
    }

    fn update_by(&mut self, item: u64, count: u64) -> Result<()> {
        self.add(item, count)
    }

    fn estimate(&self) -> f64 {
        self.sum_sq as f64 / self.accumulators.len() as f64
    }

    fn counter_writes(&self) -> u64 {
        self.writes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plus_one() -> KWiseHash {
        let mut c = [0u64; 8];
        c[0] = 1;
        KWiseHash::from_coeffs(c, 2).unwrap()
    }

    #[test]
    fn all_plus_row_sums_frequencies() {
        let mut ams = AmsSketch::from_row_hashes(vec![plus_one()]).unwrap();
        ams.update(1).unwrap();
        ams.update(2).unwrap();
        assert_eq!(ams.accumulators(), &[2]);
    }

    #[test]
    fn one_update_moves_every_row_by_one() {
        for mut ams in [
            AmsSketch::new(24, 5).unwrap(),
            AmsSketch::new_independent(130, 5).unwrap(),
        ] {
            ams.update(77).unwrap();
            assert!(ams.accumulators().iter().all(|a| a.abs() == 1));
            assert_eq!(ams.counter_writes(), ams.k() as u64);
        }
    }

    #[test]
    fn table_signs_hand_computation() {
        // s1 = (+1, +1), s2 = (+1, -1) on items 1 and 2
        let table = vec![vec![1, 1, 1], vec![1, 1, -1]];
        let mut ams = AmsSketch::from_sign_table(table).unwrap();
        ams.update(1).unwrap();
        ams.update(2).unwrap();
        assert_eq!(ams.accumulators(), &[2, 0]);
        assert_eq!(ams.estimate(), 2.0);
    }

    #[test]
    fn empty_sketch_estimates_zero() {
        assert_eq!(AmsSketch::new(4, 0).unwrap().estimate(), 0.0);
    }

    #[test]
    fn single_item_is_exact_for_any_signs() {
        for mut ams in [
            AmsSketch::new(9, 1).unwrap(),
            AmsSketch::new_independent(9, 1).unwrap(),
        ] {
            ams.update_by(123, 6).unwrap();
            assert_eq!(ams.estimate(), 36.0);
        }
    }

    #[test]
    fn independent_signs_are_balanced() {
        let mut plus = 0i64;
        let mut total = 0i64;
        for item in 0..2_000u64 {
            let mut ams = AmsSketch::new_independent(70, 99).unwrap();
            ams.update(item).unwrap();
            plus += ams.accumulators().iter().filter(|&&a| a == 1).count() as i64;
            total += 70;
        }
        let frac = plus as f64 / total as f64;
        let sigma = (0.25 / total as f64).sqrt();
        assert!((frac - 0.5).abs() < 4.0 * sigma, "fraction of +1 = {frac}");
    }

    #[test]
    fn bad_fixtures_are_rejected() {
        assert!(AmsSketch::from_sign_table(vec![vec![0]]).is_err());
        assert!(AmsSketch::new(0, 0).is_err());
        let mut ams = AmsSketch::from_sign_table(vec![vec![1]]).unwrap();
        assert!(ams.update(3).is_err());
    }
}
