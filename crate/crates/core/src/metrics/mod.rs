//! Ground truth and tracking-error evaluation.

pub mod frobenius;
mod oracle;
mod tracking;

pub use frobenius::{frobenius_stat, FrobeniusStats};
pub use oracle::FrequencyOracle;
pub use tracking::{
    failure_probability, track_run, write_trace_csv, EvalPolicy, FailureReport, Summary,
    TracePoint, TrackConfig, TrackingMode, TrackingReport, CSV_VERSION_LINE,
};
