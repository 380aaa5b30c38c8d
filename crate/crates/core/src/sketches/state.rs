//! Versioned little-endian checkpoint blobs.
//!
//! ```text
//! magic   "L2TK"          4 bytes
//! version u16             currently 1
//! kind    u8              1 = CountSketch, 2 = MedianTracker, 3 = AMS
//! signs   u8              AMS only: 0 = 8-wise rows, 1 = independent PRF
//! k       u64             counters per replica
//! r       u32             replicas (1 unless kind = 2)
//! updates u64             unit updates absorbed
//! seeds   r x u64        (kind 2 prefixes the tracker's base seed)
//! counters r x k x i128
//! ```
//!
//! Hashes are rebuilt from the stored seeds, so only seeded sketches can be
//! checkpointed.

use crate::error::{Error, Result};
use crate::sketches::{AmsSigns, AmsSketch, AnyEstimator, CountSketch, MedianTracker};

pub const MAGIC: &[u8; 4] = b"L2TK";
pub const VERSION: u16 = 1;

const KIND_COUNT: u8 = 1;
const KIND_MEDIAN: u8 = 2;
const KIND_AMS: u8 = 3;

struct Header {
    kind: u8,
    signs: u8,
    k: u64,
    r: u32,
    updates: u64,
    seeds: Vec<u64>,
}

fn unseeded() -> Error {
    Error::State("only seeded sketches can be checkpointed".into())
}

fn write_blob(h: &Header, counters: &[&[i128]]) -> Vec<u8> {
    let k = h.k as usize;
    let mut out = Vec::with_capacity(32 + h.seeds.len() * (8 + 16 * k));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(h.kind);
    out.push(h.signs);
    out.extend_from_slice(&h.k.to_le_bytes());
    out.extend_from_slice(&h.r.to_le_bytes());
    out.extend_from_slice(&h.updates.to_le_bytes());
    for s in &h.seeds {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for row in counters {
        for c in row.iter() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

/// Serializes a seeded sketch. The oracle and fixture-built sketches have
/// no seed to store and are rejected.
pub fn encode(est: &AnyEstimator) -> Result<Vec<u8>> {
    match est {
        AnyEstimator::CountSketch(s) => {
            let seed = s.seed().ok_or_else(unseeded)?;
            let h = Header {
                kind: KIND_COUNT,
                signs: 0,
                k: s.k() as u64,
                r: 1,
                updates: s.updates(),
                seeds: vec![seed],
            };
            Ok(write_blob(&h, &[s.counters()]))
        }
        AnyEstimator::Median(t) => {
            let mut seeds = vec![t.base_seed()];
            for s in t.replicas() {
                seeds.push(s.seed().ok_or_else(unseeded)?);
            }
            let h = Header {
                kind: KIND_MEDIAN,
                signs: 0,
                k: t.k() as u64,
                r: t.r() as u32,
                updates: t.updates(),
                seeds,
            };
            let rows: Vec<&[i128]> = t.replicas().iter().map(|s| s.counters()).collect();
            Ok(write_blob(&h, &rows))
        }
        AnyEstimator::Ams(a) => {
            let seed = a.seed().ok_or_else(unseeded)?;
            let signs = match a.signs() {
                AmsSigns::KWise(_) => 0,
                AmsSigns::Independent { .. } => 1,
                AmsSigns::Table(_) => return Err(unseeded()),
            };
            let h = Header {
                kind: KIND_AMS,
                signs,
                k: a.k() as u64,
                r: 1,
                updates: a.updates(),
                seeds: vec![seed],
            };
            Ok(write_blob(&h, &[a.accumulators()]))
        }
        AnyEstimator::Oracle(_) => Err(Error::State("the exact oracle has no sketch state".into())),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::State("truncated blob".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i128(&mut self) -> Result<i128> {
        Ok(i128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn counters(&mut self, k: usize) -> Result<Vec<i128>> {
        (0..k).map(|_| self.i128()).collect()
    }
}

pub fn decode(buf: &[u8]) -> Result<AnyEstimator> {
    let mut rd = Reader { buf, pos: 0 };
    if rd.take(4)? != MAGIC {
        return Err(Error::State("bad magic".into()));
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(Error::State(format!("unsupported version {version}")));
    }
    let kind = rd.u8()?;
    let signs = rd.u8()?;
    let k = usize::try_from(rd.u64()?).map_err(|_| Error::State("k too large".into()))?;
    let r = rd.u32()? as usize;
    let updates = rd.u64()?;
    // guards allocation on corrupt input
    let payload = r
        .checked_mul(k)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| Error::State("oversized blob".into()))?;
    if payload > buf.len() {
        return Err(Error::State("truncated blob".into()));
    }
    let est = match kind {
        KIND_COUNT => {
            if r != 1 {
                return Err(Error::State(format!("CountSketch blob with r = {r}")));
            }
            let seed = rd.u64()?;
            let counters = rd.counters(k)?;
            AnyEstimator::CountSketch(CountSketch::restore(k, seed, counters, updates)?)
        }
        KIND_MEDIAN => {
            let base = rd.u64()?;
            let seeds = (0..r).map(|_| rd.u64()).collect::<Result<Vec<_>>>()?;
            let mut replicas = Vec::with_capacity(r);
            for seed in seeds {
                let counters = rd.counters(k)?;
                replicas.push(CountSketch::restore(k, seed, counters, updates)?);
            }
            AnyEstimator::Median(MedianTracker::from_replicas(replicas, base)?)
        }
        KIND_AMS => {
            if r != 1 || signs > 1 {
                return Err(Error::State("malformed AMS header".into()));
            }
            let seed = rd.u64()?;
            let acc = rd.counters(k)?;
            AnyEstimator::Ams(AmsSketch::restore(k, seed, signs == 1, acc, updates)?)
        }
        other => return Err(Error::State(format!("unknown sketch kind {other}"))),
    };
    if rd.pos != buf.len() {
        return Err(Error::State("trailing bytes after sketch state".into()));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketches::{Estimator, EstimatorKind};

    fn fed(kind: EstimatorKind) -> AnyEstimator {
        let mut e = AnyEstimator::build(kind, 13, 3, 77).unwrap();
        for item in [4u64, 8, 15, 16, 23, 42, 4, 4] {
            e.update(item).unwrap();
        }
        e
    }

    #[test]
    fn header_layout() {
        let blob = encode(&fed(EstimatorKind::CountSketch)).unwrap();
        assert_eq!(&blob[..4], b"L2TK");
        assert_eq!(u16::from_le_bytes([blob[4], blob[5]]), 1);
        assert_eq!(blob[6], 1);
        assert_eq!(u64::from_le_bytes(blob[8..16].try_into().unwrap()), 13);
        assert_eq!(u32::from_le_bytes(blob[16..20].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(blob[20..28].try_into().unwrap()), 8);
        assert_eq!(blob.len(), 28 + 8 + 13 * 16);
    }

    #[test]
    fn restored_sketches_continue_identically() {
        for kind in [
            EstimatorKind::CountSketch,
            EstimatorKind::Median,
            EstimatorKind::Ams,
            EstimatorKind::AmsIndependent,
        ] {
            let mut original = fed(kind);
            let mut restored = decode(&encode(&original).unwrap()).unwrap();
            assert_eq!(restored.estimate(), original.estimate());
            assert_eq!(restored.updates(), original.updates());
            for item in [99u64, 4, 1000, 7] {
                original.update(item).unwrap();
                restored.update(item).unwrap();
            }
            assert_eq!(restored.estimate(), original.estimate(), "{kind:?}");
            assert_eq!(
                encode(&restored).unwrap(),
                encode(&original).unwrap(),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn corrupt_blobs_are_rejected() {
        let blob = encode(&fed(EstimatorKind::Median)).unwrap();
        assert!(decode(&blob[..blob.len() - 1]).is_err());
        let mut bad = blob.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = blob.clone();
        bad[4] = 9;
        assert!(decode(&bad).is_err());
        let mut long = blob;
        long.push(0);
        assert!(decode(&long).is_err());
        assert!(encode(&AnyEstimator::build(EstimatorKind::Oracle, 1, 1, 0).unwrap()).is_err());
    }
}
