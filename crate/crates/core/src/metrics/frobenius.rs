//! The collision matrix `B̃_{η,x}`: entries `x_i x_i'` for `i != i'` sharing a
//! bucket, zero diagonal. Its squared Frobenius norm is computed per bucket as
//! `Σ_b [(Σ_{i∈b} x_i²)² - Σ_{i∈b} x_i⁴]`, which never materializes the
//! `n x n` matrix.

use std::ops::{Add, Mul, Sub};

use num_rational::Ratio;
use num_traits::Zero;

use crate::derive_seed;
use crate::error::{invalid, Result};
use crate::hashing::sample_kwise;

/// `||B̃||_F²` for squared coordinates `sq` under the bucket `assignment`.
pub fn offdiag_frobenius_sq<T>(sq: &[T], assignment: &[usize], k: usize) -> T
where
    T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let mut mass = vec![T::zero(); k];
    let mut quartic = vec![T::zero(); k];
    for (&s, &b) in sq.iter().zip(assignment) {
        mass[b] = mass[b] + s;
        quartic[b] = quartic[b] + s * s;
    }
    mass.iter()
        .zip(&quartic)
        .fold(T::zero(), |acc, (&m, &q)| acc + (m * m - q))
}

/// `E_η ||B̃||_F² = (1/k) Σ_{i≠i'} x_i² x_i'²` in closed form.
pub fn expected_frobenius_sq(x: &[f64], k: usize) -> f64 {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    let quartic: f64 = x.iter().map(|v| v.powi(4)).sum();
    (norm_sq * norm_sq - quartic) / k as f64
}

/// Expectation over all `k^n` equally likely assignments, computed exactly.
pub fn exhaustive_mean(sq: &[Ratio<i128>], k: usize) -> Result<Ratio<i128>> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let n = sq.len() as u32;
    let total = (k as u128)
        .checked_pow(n)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| invalid("too many assignments to enumerate"))? as usize;
    let mut assignment = vec![0usize; sq.len()];
    let mut sum = Ratio::zero();
    for code in 0..total {
        let mut c = code;
        for slot in assignment.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        sum += offdiag_frobenius_sq(sq, &assignment, k);
    }
    Ok(sum / Ratio::from_integer(total as i128))
}

/// Monte Carlo samples of `||B̃_{η,x}||_F²`.
#[derive(Debug, Clone)]
pub struct FrobeniusStats {
    pub k: usize,
    pub samples: Vec<f64>,
    pub mean_f2: f64,
    /// Sample standard deviation of the per-trial values.
    pub std_f2: f64,
}

impl FrobeniusStats {
    /// Fraction of trials with `||B̃||_F > theta`.
    pub fn tail_fraction(&self, theta: f64) -> f64 {
        let hits = self.samples.iter().filter(|&&f2| f2.sqrt() > theta).count();
        hits as f64 / self.samples.len() as f64
    }

    /// Standard error of `mean_f2`.
    pub fn std_error(&self) -> f64 {
        self.std_f2 / (self.samples.len() as f64).sqrt()
    }
}

/// `√2 ||x||² / √(δk)`: the level `||B̃||_F` exceeds with probability at most δ/2.
pub fn tail_threshold(x: &[f64], delta: f64, k: usize) -> f64 {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    2f64.sqrt() * norm_sq / (delta * k as f64).sqrt()
}

/// `||x||⁴ / k`.
pub fn cauchy_schwarz_bound(x: &[f64], k: usize) -> f64 {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    norm_sq * norm_sq / k as f64
}

/// Samples `trials` bucket hashes (coordinate `i` is item `i + 1`) and records
/// `||B̃_{η,x}||_F²` for each. Signs do not enter the statistic.
pub fn frobenius_stat(x: &[f64], k: usize, trials: u32, seed: u64) -> Result<FrobeniusStats> {
    if trials == 0 || k == 0 {
        return Err(invalid("frobenius_stat needs trials >= 1 and k >= 1"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("vector has non-finite entries"));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(invalid("vector is identically zero"));
    }
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let mut assignment = vec![0usize; x.len()];
    let mut samples = Vec::with_capacity(trials as usize);
    for trial in 0..trials as u64 {
        let h = sample_kwise(k as u64, derive_seed(seed, trial))?;
        for (i, slot) in assignment.iter_mut().enumerate() {
            *slot = h.eval_unchecked(i as u64 + 1) as usize;
        }
        samples.push(offdiag_frobenius_sq(&sq, &assignment, k));
    }
    let n = samples.len() as f64;
    let mean_f2 = samples.iter().sum::<f64>() / n;
    let std_f2 = if samples.len() > 1 {
        (samples.iter().map(|s| (s - mean_f2).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(FrobeniusStats {
        k,
        samples,
        mean_f2,
        std_f2,
    })
}
