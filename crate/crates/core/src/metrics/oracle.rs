use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sketches::Estimator;

/// Exact frequency vector with the squared norm kept current in O(1) per update.
#[derive(Debug, Clone, Default)]
pub struct FrequencyOracle {
    freqs: HashMap<u64, u64>,
    norm_sq: u128,
    length: u64,
}

impl FrequencyOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn norm_sq(&self) -> u128 {
        self.norm_sq
    }

    /// Number of updates processed, `t`.
    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn frequency(&self, item: u64) -> u64 {
        self.freqs.get(&item).copied().unwrap_or(0)
    }

    pub fn support(&self) -> usize {
        self.freqs.len()
    }

    pub fn frequencies(&self) -> &HashMap<u64, u64> {
        &self.freqs
    }

    /// `(f+c)^2 - f^2 = 2fc + c^2` added to the norm.
    pub fn add(&mut self, item: u64, count: u64) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let overflow = || Error::Overflow("exact frequency norm exceeds 128 bits".into());
        let f = self.frequency(item);
        let new_f = f.checked_add(count).ok_or_else(overflow)?;
        let length = self.length.checked_add(count).ok_or_else(overflow)?;
        let c = count as u128;
        let growth = (2 * f as u128)
            .checked_mul(c)
            .and_then(|x| x.checked_add(c * c))
            .ok_or_else(overflow)?;
        self.norm_sq = self.norm_sq.checked_add(growth).ok_or_else(overflow)?;
        self.freqs.insert(item, new_f);
        self.length = length;
        Ok(())
    }
}

impl Estimator for FrequencyOracle {
    fn update(&mut self, item: u64) -> Result<()> {
        self.add(item, 1)
    }

    fn update_by(&mut self, item: u64, count: u64) -> Result<()> {
        self.add(item, count)
    }

    fn estimate(&self) -> f64 {
        self.norm_sq as f64
    }

    fn counter_writes(&self) -> u64 {
        self.length
    }
}
