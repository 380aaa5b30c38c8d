use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::metrics::FrequencyOracle;
use crate::sketches::Estimator;
use crate::streams::Stream;

/// Normalization of the tracking error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackingMode {
    /// Divide by the final `||f^(m)||_2^2`.
    Weak,
    /// Divide by the current `||f^(t)||_2^2`.
    Strong,
}

/// Which prefixes are compared against the truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalPolicy {
    EveryStep,
    /// `t = 2^i - 1` for `i >= 1`, plus the final time `m`.
    Dyadic,
    /// The given times; those beyond `m` are ignored.
    Explicit(Vec<u64>),
}

impl EvalPolicy {
    pub fn label(&self) -> &'static str {
        match self {
            Self::EveryStep => "every-step",
            Self::Dyadic => "dyadic",
            Self::Explicit(_) => "explicit-times",
        }
    }

    fn times(&self, m: u64) -> Result<Option<Vec<u64>>> {
        Ok(match self {
            Self::EveryStep => None,
            Self::Dyadic => {
                let mut times: Vec<u64> = (1..64)
                    .map(|i| (1u64 << i) - 1)
                    .take_while(|&t| t <= m)
                    .collect();
                if times.last() != Some(&m) {
                    times.push(m);
                }
                Some(times)
            }
            Self::Explicit(times) => {
                if times.contains(&0) {
                    return Err(invalid("time 0 is never evaluated"));
                }
                let mut times: Vec<u64> = times.iter().copied().filter(|&t| t <= m).collect();
                times.sort_unstable();
                times.dedup();
                Some(times)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrackConfig {
    pub mode: TrackingMode,
    pub policy: EvalPolicy,
    pub record_trace: bool,
    /// The estimator has already absorbed this many leading arrivals (for
    /// resuming from a checkpoint); only later times are evaluated.
    pub resume_after: u64,
}

impl TrackConfig {
    pub fn new(mode: TrackingMode, policy: EvalPolicy) -> Self {
        Self {
            mode,
            policy,
            record_trace: false,
            resume_after: 0,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: u64,
    pub estimate: f64,
    pub truth: f64,
    pub normalized_error: f64,
}

#[derive(Debug, Clone)]
pub struct TrackingReport {
    pub mode: TrackingMode,
    pub policy: &'static str,
    /// `max_t |σ_t - ||f^(t)||²| / Δ_t` over the evaluated times.
    pub sup_error: f64,
    pub argmax_t: u64,
    pub evaluated: u64,
    pub final_norm_sq: u128,
    pub trace: Option<Vec<TracePoint>>,
}

struct Evaluator {
    mode: TrackingMode,
    best: f64,
    argmax_t: u64,
    evaluated: u64,
    trace: Option<Vec<TracePoint>>,
}

impl Evaluator {
    fn observe(&mut self, t: u64, estimate: f64, truth: f64) {
        let dev = (estimate - truth).abs();
        let score = match self.mode {
            // weak normalization is applied once ||f^(m)||² is known
            TrackingMode::Weak => dev,
            TrackingMode::Strong => {
                if truth == 0.0 {
                    return;
                }
                dev / truth
            }
        };
        if self.evaluated == 0 || score > self.best {
            self.best = score;
            self.argmax_t = t;
        }
        self.evaluated += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TracePoint {
                t,
                estimate,
                truth,
                normalized_error: score,
            });
        }
    }
}

/// Feeds `stream` to `estimator` and to an exact oracle, comparing them at
/// the times selected by `cfg.policy`.
pub fn track_run<E: Estimator + ?Sized>(
    stream: &Stream,
    estimator: &mut E,
    cfg: &TrackConfig,
) -> Result<TrackingReport> {
    let m = stream.len();
    if m == 0 {
        return Err(invalid("cannot track an empty stream"));
    }
    let resume = cfg.resume_after;
    if resume >= m {
        return Err(invalid(format!(
            "resume point {resume} leaves nothing of a length-{m} stream"
        )));
    }
    let checkpoints = cfg
        .policy
        .times(m)?
        .map(|ts| ts.into_iter().filter(|&t| t > resume).collect::<Vec<_>>());
    if checkpoints.as_ref().is_some_and(|c| c.is_empty()) {
        return Err(invalid("no evaluation time falls inside the stream"));
    }

    let mut oracle = FrequencyOracle::new();
    let mut eval = Evaluator {
        mode: cfg.mode,
        best: 0.0,
        argmax_t: 0,
        evaluated: 0,
        trace: cfg.record_trace.then(Vec::new),
    };
    let mut t = 0u64;
    let mut next_cp = 0usize;

    for run in stream.runs() {
        let mut remaining = run.count;
        while remaining > 0 {
            if t < resume {
                let step = remaining.min(resume - t);
                oracle.add(run.item, step)?;
                t += step;
                remaining -= step;
                continue;
            }
            match &checkpoints {
                None => {
                    estimator.update(run.item)?;
                    oracle.add(run.item, 1)?;
                    t += 1;
                    remaining -= 1;
                    eval.observe(t, estimator.estimate(), oracle.norm_sq() as f64);
                }
                Some(cps) => {
                    let target = cps.get(next_cp).copied();
                    let step = target.map_or(remaining, |c| remaining.min(c - t));
                    estimator.update_by(run.item, step)?;
                    oracle.add(run.item, step)?;
                    t += step;
                    remaining -= step;
                    if target == Some(t) {
                        eval.observe(t, estimator.estimate(), oracle.norm_sq() as f64);
                        next_cp += 1;
                    }
                }
            }
        }
    }

    let final_norm_sq = oracle.norm_sq();
    let mut sup_error = eval.best;
    let mut trace = eval.trace;
    if cfg.mode == TrackingMode::Weak {
        let scale = final_norm_sq as f64;
        sup_error /= scale;
        if let Some(trace) = trace.as_mut() {
            for p in trace.iter_mut() {
                p.normalized_error /= scale;
            }
        }
    }
    Ok(TrackingReport {
        mode: cfg.mode,
        policy: cfg.policy.label(),
        sup_error,
        argmax_t: eval.argmax_t,
        evaluated: eval.evaluated,
        final_norm_sq,
        trace,
    })
}

/// Outcome of repeated independent tracking runs.
#[derive(Debug, Clone)]
pub struct FailureReport {
    pub eps: f64,
    pub trials: u32,
    pub failures: u32,
    pub fraction: f64,
    /// One report per trial, in trial order. Only trial 0 carries a trace.
    pub reports: Vec<TrackingReport>,
}

impl FailureReport {
    pub fn sup_errors(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.sup_error).collect()
    }

    /// Whether trial `i` exceeded `eps`.
    pub fn failed(&self, i: usize) -> bool {
        self.reports[i].sup_error > self.eps
    }

    /// The trial with the largest sup error (earliest on ties).
    pub fn worst(&self) -> &TrackingReport {
        self.reports
            .iter()
            .reduce(|a, b| if b.sup_error > a.sup_error { b } else { a })
            .expect("at least one trial")
    }
}

/// Runs `trials` independent tracking runs with estimator seeds
/// `base_seed + 0, ..., base_seed + trials - 1` and counts those whose sup
/// error exceeds `eps`. Trials run on the current rayon pool; results are
/// ordered by trial index.
pub fn failure_probability<E, F>(
    stream: &Stream,
    factory: F,
    eps: f64,
    cfg: &TrackConfig,
    trials: u32,
    base_seed: u64,
) -> Result<FailureReport>
where
    E: Estimator,
    F: Fn(u64) -> Result<E> + Sync,
{
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let reports = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut trial_cfg = cfg.clone();
            trial_cfg.record_trace = cfg.record_trace && i == 0;
            let mut est = factory(base_seed.wrapping_add(i as u64))?;
            track_run(stream, &mut est, &trial_cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = reports.iter().filter(|r| r.sup_error > eps).count() as u32;
    Ok(FailureReport {
        eps,
        trials,
        failures,
        fraction: failures as f64 / trials as f64,
        reports,
    })
}

/// Summary line emitted after a trace.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mode: TrackingMode,
    pub policy: &'static str,
    pub sup_error: f64,
    pub argmax_t: u64,
    pub trials: u32,
    pub failures: Option<u32>,
}

pub const CSV_VERSION_LINE: &str = "# l2track v1";

/// `# l2track v1` followed by `t,estimate,truth,normalized_error` rows.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    writeln!(out, "t,estimate,truth,normalized_error")?;
    for p in trace {
        writeln!(
            out,
            "{},{},{},{}",
            p.t, p.estimate, p.truth, p.normalized_error
        )?;
    }
    Ok(())
}
