//! Adversarial streams for the strong-tracking lower bounds.

use crate::error::{invalid, Error, Result};
use crate::sketches::ceil_tolerant;
use crate::streams::{gen_distinct, Stream};

fn overflow(what: &str) -> Error {
    Error::InvalidParameter(format!("{what} overflows 64 bits; lower ell"))
}

/// AMS checkpoints `t_j = Σ_{i<=j} ⌈10/ε⌉^i` for `j = 1..=ell`.
pub fn ams_checkpoints(eps: f64, ell: u32) -> Result<Vec<u64>> {
    // ε = 0.1 is admitted so that ⌈10/ε⌉ = 100 configurations are expressible
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(invalid(format!(
            "AMS hard instance needs 0 < eps <= 0.1, got {eps}"
        )));
    }
    if ell == 0 {
        return Err(invalid("ell must be at least 1"));
    }
    let base = ceil_tolerant(10.0 / eps) as u64;
    let mut times = Vec::with_capacity(ell as usize);
    let (mut delta, mut t) = (1u64, 0u64);
    for _ in 0..ell {
        delta = delta.checked_mul(base).ok_or_else(|| overflow("Δ_j"))?;
        t = t.checked_add(delta).ok_or_else(|| overflow("t_j"))?;
        times.push(t);
    }
    Ok(times)
}

/// Largest `ell` with `t_ell <= m`; zero when `m < t_1`.
pub fn ams_levels_for_length(eps: f64, m: u64) -> Result<u32> {
    ams_checkpoints(eps, 1)?;
    let base = ceil_tolerant(10.0 / eps) as u64;
    let (mut delta, mut t, mut ell) = (1u64, 0u64, 0u32);
    loop {
        let next = delta
            .checked_mul(base)
            .and_then(|d| t.checked_add(d).map(|nt| (d, nt)));
        match next {
            Some((d, nt)) if nt <= m => {
                delta = d;
                t = nt;
                ell += 1;
            }
            _ => return Ok(ell),
        }
    }
}

/// The all-distinct stream up to `t_ell`, with the AMS checkpoints.
pub fn gen_ams_hard(eps: f64, ell: u32) -> Result<(Stream, Vec<u64>)> {
    let times = ams_checkpoints(eps, ell)?;
    let stream = gen_distinct(*times.last().unwrap())?;
    Ok((stream, times))
}

/// Block-structured CountSketch hard instance.
#[derive(Debug, Clone)]
pub struct CsHardInstance {
    pub stream: Stream,
    /// Cumulative length after each block.
    pub checkpoints: Vec<u64>,
    /// `Δ = ⌈100/ε⌉`.
    pub delta: u64,
    /// `w = ⌈1/ε⌉`, fresh items per block.
    pub width: u64,
}

/// Block `j` appends `Δ^j` contiguous copies of each of the `w` fresh ids
/// `w(j-1)+1 ..= wj`. After block `j` the frequency vector holds `w`
/// coordinates at each of `Δ, Δ², ..., Δ^j`.
pub fn gen_cs_hard(eps: f64, ell: u32) -> Result<CsHardInstance> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(invalid(format!(
            "CountSketch hard instance needs 0 < eps <= 0.5, got {eps}"
        )));
    }
    if ell == 0 {
        return Err(invalid("ell must be at least 1"));
    }
    let delta = ceil_tolerant(100.0 / eps) as u64;
    let width = ceil_tolerant(1.0 / eps) as u64;
    let mut stream = Stream::new();
    let mut checkpoints = Vec::with_capacity(ell as usize);
    let mut copies = 1u64;
    for j in 1..=ell as u64 {
        copies = copies.checked_mul(delta).ok_or_else(|| overflow("Δ^j"))?;
        for item in width * (j - 1) + 1..=width * j {
            stream
                .push_run(item, copies)
                .map_err(|_| overflow("stream length"))?;
        }
        checkpoints.push(stream.len());
    }
    Ok(CsHardInstance {
        stream,
        checkpoints,
        delta,
        width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::FrequencyOracle;
    use crate::sketches::Estimator;

    #[test]
    fn ams_checkpoint_arithmetic() {
        assert_eq!(ams_checkpoints(0.1, 2).unwrap(), vec![100, 10_100]);
        assert_eq!(ams_checkpoints(0.1, 1).unwrap(), vec![100]);
        assert_eq!(
            ams_checkpoints(0.1, 3).unwrap(),
            vec![100, 10_100, 1_010_100]
        );
    }

    #[test]
    fn ams_checkpoints_track_their_last_increment() {
        for eps in [0.1, 0.07, 0.05, 0.01] {
            let base = ceil_tolerant(10.0 / eps) as u64;
            let times = ams_checkpoints(eps, 4).unwrap();
            let mut delta = base;
            for (j, &t) in times.iter().enumerate() {
                if j >= 1 {
                    assert!((t - delta) as f64 <= eps / 5.0 * t as f64);
                }
                delta *= base;
            }
            assert!(times.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn ams_levels_bracket_the_length() {
        for m in [100u64, 5_000, 10_100, 10_099, 2_000_000] {
            let ell = ams_levels_for_length(0.1, m).unwrap();
            let t = ams_checkpoints(0.1, ell + 1).unwrap();
            if ell > 0 {
                assert!(t[ell as usize - 1] <= m);
            }
            assert!(m < t[ell as usize]);
        }
        assert_eq!(ams_levels_for_length(0.1, 99).unwrap(), 0);
    }

    #[test]
    fn ams_parameters_are_validated() {
        assert!(ams_checkpoints(0.2, 1).is_err());
        assert!(ams_checkpoints(0.1, 0).is_err());
        assert!(ams_checkpoints(0.1, 10).is_err());
    }

    #[test]
    fn first_cs_block_for_half_eps() {
        let inst = gen_cs_hard(0.5, 1).unwrap();
        assert_eq!((inst.delta, inst.width), (200, 2));
        let items: Vec<u64> = inst.stream.items().collect();
        assert_eq!(items.len(), 400);
        assert!(items[..200].iter().all(|&x| x == 1));
        assert!(items[200..].iter().all(|&x| x == 2));
        assert_eq!(inst.checkpoints, vec![400]);
    }

    #[test]
    fn cs_checkpoint_vectors_match_the_block_layout() {
        let inst = gen_cs_hard(0.45, 3).unwrap();
        let (d, w) = (inst.delta, inst.width);
        assert_eq!((d, w), (223, 3));
        let mut oracle = FrequencyOracle::new();
        let mut next = 0;
        for run in inst.stream.runs() {
            oracle.update_by(run.item, run.count).unwrap();
            if oracle.length() == inst.checkpoints[next] {
                let j = next as u32 + 1;
                // w coordinates at each Δ^{j'}, j' <= j
                for jp in 1..=j {
                    for item in w * (jp as u64 - 1) + 1..=w * jp as u64 {
                        assert_eq!(oracle.frequency(item), d.pow(jp));
                    }
                }
                assert_eq!(oracle.support() as u64, w * j as u64);
                let norm: u128 = (1..=j).map(|jp| w as u128 * (d as u128).pow(2 * jp)).sum();
                assert_eq!(oracle.norm_sq(), norm);
                next += 1;
            }
        }
        assert_eq!(next, 3);
        let total: u64 = (1..=3).map(|j| w * d.pow(j)).sum();
        assert_eq!(inst.stream.len(), total);
        assert_eq!(inst.stream.support() as u64, w * 3);
    }

    #[test]
    fn cs_hard_deepest_instance_fits_in_u64() {
        let inst = gen_cs_hard(0.45, 8).unwrap();
        assert_eq!(inst.checkpoints.len(), 8);
        assert!(gen_cs_hard(0.45, 9).is_err());
        assert!(gen_cs_hard(0.6, 1).is_err());
        assert!(gen_cs_hard(0.3, 0).is_err());
    }
}
