//! 8-wise independent hashing over the Mersenne prime field `2^61 - 1`.
//!
//! A hash is a uniformly random degree-7 polynomial evaluated at the item id
//! and reduced into `[0, range)` by a final `mod range`. That last step biases
//! each bucket by at most `range / p <= 2^32 / 2^61`, which every experiment in
//! this crate tolerates.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// The field modulus `2^61 - 1`.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Independence degree of the family (number of polynomial coefficients).
pub const INDEPENDENCE: usize = 8;

/// Largest supported output range.
pub const MAX_RANGE: u64 = 1 << 32;

/// A member of the 8-wise independent polynomial family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseHash {
    coeffs: [u64; INDEPENDENCE],
    range: u64,
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let p = (a as u128) * (b as u128);
    let lo = (p as u64) & MERSENNE_61;
    let hi = (p >> 61) as u64;
    let s = lo + hi;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

fn check_range(range: u64) -> Result<()> {
    if range == 0 || range > MAX_RANGE {
        return Err(invalid(format!("hash range {range} not in [1, 2^32]")));
    }
    Ok(())
}

/// Samples a hash with output range `range` whose coefficients are drawn from a
/// ChaCha8 stream keyed by `seed`. Words are truncated to 61 bits and the single
/// value equal to `p` is rejected, so each coefficient is uniform on `[0, p)`.
pub fn sample_kwise(range: u64, seed: u64) -> Result<KWiseHash> {
    check_range(range)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = [0u64; INDEPENDENCE];
    for c in coeffs.iter_mut() {
        *c = loop {
            let v = rng.next_u64() >> 3;
            if v < MERSENNE_61 {
                break v;
            }
        };
    }
    Ok(KWiseHash { coeffs, range })
}

impl KWiseHash {
    /// Builds a hash from explicit coefficients (lowest degree first).
    pub fn from_coeffs(coeffs: [u64; INDEPENDENCE], range: u64) -> Result<Self> {
        check_range(range)?;
        if let Some(c) = coeffs.iter().find(|&&c| c >= MERSENNE_61) {
            return Err(invalid(format!("coefficient {c} not below 2^61-1")));
        }
        Ok(Self { coeffs, range })
    }

    pub fn coeffs(&self) -> &[u64; INDEPENDENCE] {
        &self.coeffs
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    /// `((sum_d coeffs[d] * x^d) mod p) mod range`.
    pub fn eval(&self, x: u64) -> Result<u64> {
        if x >= MERSENNE_61 {
            return Err(invalid(format!("item {x} not below 2^61-1")));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the input bound check. `x` must be below `p`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: u64) -> u64 {
        let mut acc = self.coeffs[INDEPENDENCE - 1];
        for &c in self.coeffs[..INDEPENDENCE - 1].iter().rev() {
            acc = add_mod(mul_mod(acc, x), c);
        }
        acc % self.range
    }

    /// Maps bucket 1 to `+1` and bucket 0 to `-1`. Requires `range == 2`.
    pub fn eval_sign(&self, x: u64) -> Result<i8> {
        if self.range != 2 {
            return Err(invalid(format!(
                "sign hash needs range 2, got {}",
                self.range
            )));
        }
        Ok(if self.eval(x)? == 1 { 1 } else { -1 })
    }

    #[inline]
    pub(crate) fn sign_unchecked(&self, x: u64) -> i8 {
        if self.eval_unchecked(x) == 1 {
            1
        } else {
            -1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(coeffs: &[u64]) -> KWiseHash {
        let mut c = [0u64; INDEPENDENCE];
        c[..coeffs.len()].copy_from_slice(coeffs);
        KWiseHash::from_coeffs(c, 7).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_kwise(16, 99).unwrap();
        let b = sample_kwise(16, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_kwise(16, 100).unwrap());
        assert!(a.coeffs().iter().all(|&c| c < MERSENNE_61));
    }

    #[test]
    fn range_bounds_are_enforced() {
        assert!(sample_kwise(0, 0).is_err());
        assert!(sample_kwise(MAX_RANGE + 1, 0).is_err());
        assert!(sample_kwise(MAX_RANGE, 0).is_ok());
        assert!(KWiseHash::from_coeffs([MERSENNE_61; 8], 4).is_err());
    }

    #[test]
    fn zero_polynomial_maps_to_zero() {
        let h = KWiseHash::from_coeffs([0; 8], 5).unwrap();
        for x in [0, 1, 17, MERSENNE_61 - 1] {
            assert_eq!(h.eval(x).unwrap(), 0);
        }
        let g = KWiseHash::from_coeffs([0; 8], 2).unwrap();
        assert_eq!(g.eval_sign(12345).unwrap(), -1);
    }

    #[test]
    fn hand_evaluated_linear_polynomial() {
        // (3 + 5*4) mod 7 = 2
        assert_eq!(poly(&[3, 5]).eval(4).unwrap(), 2);
    }

    #[test]
    fn constant_polynomial_with_wide_range() {
        let mut c = [0u64; 8];
        c[0] = 1;
        let h = KWiseHash::from_coeffs(c, MAX_RANGE).unwrap();
        assert_eq!(h.eval(5).unwrap(), 1);
    }

    #[test]
    fn full_degree_matches_naive_modular_evaluation() {
        let h = sample_kwise(1000, 5).unwrap();
        for x in [0u64, 1, 2, 1 << 40, MERSENNE_61 - 1] {
            let p = MERSENNE_61 as u128;
            let mut acc = 0u128;
            let mut pow = 1u128;
            for &c in h.coeffs() {
                acc = (acc + (c as u128) * pow) % p;
                pow = pow * (x as u128) % p;
            }
            assert_eq!(h.eval(x).unwrap(), (acc as u64) % 1000);
        }
    }

    #[test]
    fn inputs_outside_field_are_rejected() {
        let h = sample_kwise(4, 1).unwrap();
        assert!(h.eval(MERSENNE_61).is_err());
        assert!(h.eval(u64::MAX).is_err());
    }

    #[test]
    fn sign_requires_binary_range() {
        let h = sample_kwise(3, 1).unwrap();
        assert!(h.eval_sign(1).is_err());
        let g = sample_kwise(2, 1).unwrap();
        assert_eq!(g.eval_sign(77).unwrap(), g.eval_sign(77).unwrap());
    }

    #[test]
    fn buckets_are_uniform_for_seed_42() {
        let h = sample_kwise(8, 42).unwrap();
        let mut counts = [0u64; 8];
        for x in 0..10_000u64 {
            let b = h.eval(x).unwrap();
            assert!(b < 8);
            counts[b as usize] += 1;
        }
        let n: f64 = 10_000.0;
        let p = 1.0 / 8.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
        // chi-square with 7 degrees of freedom; 24.32 is the 0.999 quantile
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - n * p).powi(2) / (n * p))
            .sum();
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    #[test]
    fn sign_mean_is_near_zero_for_seed_7() {
        let g = sample_kwise(2, 7).unwrap();
        let sum: i64 = (0..100_000u64)
            .map(|x| g.eval_sign(x).unwrap() as i64)
            .sum();
        let mean = sum as f64 / 100_000.0;
        assert!(mean.abs() <= 0.02, "mean = {mean}");
    }

    #[test]
    fn pairwise_collision_rate_matches_one_over_k() {
        let k = 16u64;
        let h = sample_kwise(k, 2024).unwrap();
        let pairs = 100_000u64;
        let hits = (0..pairs)
            .filter(|&j| h.eval(2 * j).unwrap() == h.eval(2 * j + 1).unwrap())
            .count() as f64;
        let p = 1.0 / k as f64;
        let sigma = (pairs as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits - pairs as f64 * p).abs() <= 3.0 * sigma,
            "hits = {hits}"
        );
    }
}
