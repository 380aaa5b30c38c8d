use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::streams::Stream;

/// `1, 2, ..., m`.
pub fn gen_distinct(m: u64) -> Result<Stream> {
    if m == 0 {
        return Err(invalid("distinct stream needs m >= 1"));
    }
    Ok((1..=m).collect())
}

/// `m` i.i.d. uniform draws from `[n] = {1, ..., n}`.
pub fn gen_uniform(n: u64, m: u64, seed: u64) -> Result<Stream> {
    if n == 0 || m == 0 {
        return Err(invalid("uniform stream needs n, m >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| rng.gen_range(1..=n)).collect())
}

/// Inverse-CDF table for `p_i ∝ i^-α` on `{1, ..., n}`.
#[derive(Debug, Clone)]
pub struct ZipfTable {
    cdf: Vec<f64>,
}

impl ZipfTable {
    pub fn new(n: u64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("zipf needs n >= 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("zipf exponent {alpha} must be positive")));
        }
        // Kahan-compensated prefix sums keep the tail mass accurate for large n.
        let mut cdf = Vec::with_capacity(n as usize);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in 1..=n {
            let y = (i as f64).powf(-alpha) - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            cdf.push(sum);
        }
        for c in cdf.iter_mut() {
            *c /= sum;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { cdf })
    }

    pub fn probability(&self, item: u64) -> f64 {
        let i = (item - 1) as usize;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        (idx.min(self.cdf.len() - 1) + 1) as u64
    }
}

/// `m` i.i.d. Zipf(α) draws from `{1, ..., n}`.
pub fn gen_zipf(n: u64, m: u64, alpha: f64, seed: u64) -> Result<Stream> {
    if m == 0 {
        return Err(invalid("zipf stream needs m >= 1"));
    }
    let table = ZipfTable::new(n, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| table.sample(&mut rng)).collect())
}
