//! Stream sources: hard instances, synthetic workloads and files.
//!
//! Streams are stored run-length encoded. A [`Run`] of `count` copies of one
//! item is the same stream as `count` consecutive unit arrivals; it only
//! exists so the hard instances, whose lengths reach `10^19`, fit in memory.

mod generators;
mod hard;
mod io;

use std::path::PathBuf;

pub use generators::{gen_distinct, gen_uniform, gen_zipf, ZipfTable};
pub use hard::{ams_checkpoints, ams_levels_for_length, gen_ams_hard, gen_cs_hard, CsHardInstance};
pub use io::{parse_stream, read_stream, write_items, write_stream};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub item: u64,
    pub count: u64,
}

/// An insertion-only stream `a_1, ..., a_m`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stream {
    runs: Vec<Run>,
    len: u64,
}

impl Stream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one arrival.
    pub fn push(&mut self, item: u64) -> Result<()> {
        self.push_run(item, 1)
    }

    /// Appends `count` consecutive arrivals of `item`.
    pub fn push_run(&mut self, item: u64, count: u64) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        self.len = self
            .len
            .checked_add(count)
            .ok_or_else(|| Error::Overflow("stream length exceeds u64".into()))?;
        match self.runs.last_mut() {
            Some(last) if last.item == item => last.count += count,
            _ => self.runs.push(Run { item, count }),
        }
        Ok(())
    }

    /// Number of arrivals, `m`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    /// Expands the runs into unit arrivals.
    pub fn items(&self) -> impl Iterator<Item = u64> + '_ {
        self.runs
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.item, r.count as usize))
    }

    /// Number of distinct items.
    pub fn support(&self) -> usize {
        let mut ids: Vec<u64> = self.runs.iter().map(|r| r.item).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

impl FromIterator<u64> for Stream {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        let mut s = Stream::new();
        for item in iter {
            // a Vec-backed iterator cannot exceed u64::MAX items
            s.push(item).expect("stream length overflow");
        }
        s
    }
}

/// Generator family plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamSpec {
    Distinct {
        m: u64,
    },
    Uniform {
        n: u64,
        m: u64,
        seed: u64,
    },
    Zipf {
        n: u64,
        m: u64,
        alpha: f64,
        seed: u64,
    },
    /// All-distinct stream truncated at the last checkpoint `t_ell`.
    AmsHard {
        eps: f64,
        ell: u32,
    },
    CsHard {
        eps: f64,
        ell: u32,
    },
    File {
        path: PathBuf,
    },
}

/// A built stream and, for hard instances, its checkpoint times.
#[derive(Debug, Clone)]
pub struct GeneratedStream {
    pub stream: Stream,
    pub checkpoints: Option<Vec<u64>>,
}

impl StreamSpec {
    pub fn family(&self) -> &'static str {
        match self {
            Self::Distinct { .. } => "distinct",
            Self::Uniform { .. } => "uniform",
            Self::Zipf { .. } => "zipf",
            Self::AmsHard { .. } => "ams_hard",
            Self::CsHard { .. } => "cs_hard",
            Self::File { .. } => "file",
        }
    }

    pub fn build(&self) -> Result<GeneratedStream> {
        let plain = |stream| GeneratedStream {
            stream,
            checkpoints: None,
        };
        Ok(match self {
            Self::Distinct { m } => plain(gen_distinct(*m)?),
            Self::Uniform { n, m, seed } => plain(gen_uniform(*n, *m, *seed)?),
            Self::Zipf { n, m, alpha, seed } => plain(gen_zipf(*n, *m, *alpha, *seed)?),
            Self::AmsHard { eps, ell } => {
                let (stream, checkpoints) = gen_ams_hard(*eps, *ell)?;
                GeneratedStream {
                    stream,
                    checkpoints: Some(checkpoints),
                }
            }
            Self::CsHard { eps, ell } => {
                let inst = gen_cs_hard(*eps, *ell)?;
                GeneratedStream {
                    stream: inst.stream,
                    checkpoints: Some(inst.checkpoints),
                }
            }
            Self::File { path } => plain(read_stream(path)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_coalesce_adjacent_items() {
        let s: Stream = [1, 1, 2, 2, 2, 1].into_iter().collect();
        assert_eq!(
            s.runs(),
            &[
                Run { item: 1, count: 2 },
                Run { item: 2, count: 3 },
                Run { item: 1, count: 1 }
            ]
        );
        assert_eq!(s.len(), 6);
        assert_eq!(s.items().collect::<Vec<_>>(), vec![1, 1, 2, 2, 2, 1]);
        assert_eq!(s.support(), 2);
    }

    #[test]
    fn length_overflow_is_reported() {
        let mut s = Stream::new();
        s.push_run(1, u64::MAX).unwrap();
        assert!(s.push(2).is_err());
    }

    #[test]
    fn identical_specs_build_identical_streams() {
        let specs = [
            StreamSpec::Uniform {
                n: 50,
                m: 500,
                seed: 1,
            },
            StreamSpec::Zipf {
                n: 50,
                m: 500,
                alpha: 1.1,
                seed: 1,
            },
            StreamSpec::CsHard { eps: 0.4, ell: 2 },
        ];
        for spec in specs {
            assert_eq!(spec.build().unwrap().stream, spec.build().unwrap().stream);
        }
    }
}
