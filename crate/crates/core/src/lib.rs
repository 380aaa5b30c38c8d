//! Linear sketches for tracking the l2 norm of an insertion-only stream.
//!
//! The crate provides:
//! - [`hashing::KWiseHash`], an 8-wise independent polynomial hash family over
//!   the Mersenne field `2^61 - 1`.
//! - [`sketches::CountSketch`], [`sketches::AmsSketch`] and
//!   [`sketches::MedianTracker`] estimators of `||f||_2^2`.
//! - [`metrics`] for exact ground truth, weak/strong tracking evaluation,
//!   Monte Carlo failure rates and the collision-matrix Frobenius statistic.
//! - [`streams`] for hard-instance and synthetic workloads plus file I/O.
//! - [`epsnet`] for the greedy prefix net of an insertion-only stream.
//! - [`bench`] for update-cost instrumentation and timing.

pub mod bench;
pub mod cli;
pub mod epsnet;
pub mod error;
pub mod hashing;
pub mod metrics;
pub mod sketches;
pub mod streams;

pub use error::{Error, Result};
pub use hashing::KWiseHash;
pub use metrics::{
    failure_probability, track_run, EvalPolicy, FailureReport, FrequencyOracle, TrackConfig,
    TrackingMode, TrackingReport,
};
pub use sketches::{AmsSketch, CountSketch, Estimator, MedianTracker};
pub use streams::{Run, Stream, StreamSpec};

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives the `index`-th child seed of `base`. Distinct indices give distinct
/// children for a fixed base since `splitmix64` is a bijection.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}
