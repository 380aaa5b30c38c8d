//! Update-cost measurement: a deterministic counter-write instrument plus
//! wall-clock timing of whole batches.

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::metrics::CSV_VERSION_LINE;
use crate::sketches::{
    ceil_tolerant, default_replicas, default_rows, AnyEstimator, Estimator, EstimatorKind,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub estimator: &'static str,
    pub eps: f64,
    pub k: usize,
    pub r: usize,
    /// Median over timed batches.
    pub ns_per_update: f64,
    pub ops_per_update: u64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub estimators: Vec<EstimatorKind>,
    pub eps_grid: Vec<f64>,
    pub delta: f64,
    pub warmup_batches: u32,
    pub timed_batches: u32,
    pub batch_size: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(estimators: Vec<EstimatorKind>, eps_grid: Vec<f64>, delta: f64, seed: u64) -> Self {
        Self {
            estimators,
            eps_grid,
            delta,
            warmup_batches: 3,
            timed_batches: 10,
            batch_size: 1_000_000,
            seed,
        }
    }
}

/// `(k, r)` used for `kind` at accuracy `eps`: `⌈2/(ε²δ)⌉` rows for the
/// single sketches, `⌈8/ε²⌉` rows times `2⌈ln(1/δ)⌉+1` replicas for the
/// median tracker.
pub fn sketch_shape(kind: EstimatorKind, eps: f64, delta: f64) -> Result<(usize, usize)> {
    match kind {
        EstimatorKind::Median => {
            default_rows(eps, 1.0)?;
            Ok((ceil_tolerant(8.0 / (eps * eps)), default_replicas(delta)?))
        }
        EstimatorKind::Oracle => Ok((0, 1)),
        _ => Ok((default_rows(eps, delta)?, 1)),
    }
}

/// Feeds `items` one at a time and returns the counter writes per update,
/// failing if that number is not the same for every item.
pub fn measure_ops_per_update<E: Estimator + ?Sized>(est: &mut E, items: &[u64]) -> Result<u64> {
    let mut per_update = None;
    for &item in items {
        let before = est.counter_writes();
        est.update(item)?;
        let ops = est.counter_writes() - before;
        match per_update {
            None => per_update = Some(ops),
            Some(prev) if prev != ops => {
                return Err(Error::State(format!(
                    "update cost varies between items: {prev} vs {ops}"
                )))
            }
            Some(_) => {}
        }
    }
    per_update.ok_or_else(|| invalid("no items to measure"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn bench_one(
    kind: EstimatorKind,
    eps: f64,
    cfg: &BenchConfig,
    items: &[u64],
) -> Result<BenchResult> {
    let (k, r) = sketch_shape(kind, eps, cfg.delta)?;
    let mut est = AnyEstimator::build(kind, k, r, cfg.seed)?;
    let ops_per_update = measure_ops_per_update(&mut est, &items[..items.len().min(1000)])?;

    for _ in 0..cfg.warmup_batches {
        for &item in items {
            est.update(item)?;
        }
    }
    let mut per_batch = Vec::with_capacity(cfg.timed_batches as usize);
    for _ in 0..cfg.timed_batches {
        let start = Instant::now();
        for &item in items {
            est.update(black_box(item))?;
        }
        black_box(est.estimate());
        let ns = start.elapsed().as_nanos() as f64;
        per_batch.push(ns / items.len() as f64);
    }
    Ok(BenchResult {
        estimator: kind.name(),
        eps,
        k,
        r,
        // a zero reading only means the clock was too coarse
        ns_per_update: median(per_batch).max(f64::MIN_POSITIVE),
        ops_per_update,
    })
}

/// Benchmarks every (estimator, ε) pair of the grid on one shared batch of
/// uniformly random item ids.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchResult>> {
    if cfg.timed_batches == 0 || cfg.batch_size == 0 {
        return Err(invalid(
            "need at least one timed batch of at least one update",
        ));
    }
    if cfg.estimators.is_empty() || cfg.eps_grid.is_empty() {
        return Err(invalid("empty benchmark grid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let items: Vec<u64> = (0..cfg.batch_size)
        .map(|_| rng.gen_range(1..=1 << 20))
        .collect();
    let mut results = Vec::new();
    for &kind in &cfg.estimators {
        for &eps in &cfg.eps_grid {
            results.push(bench_one(kind, eps, cfg, &items)?);
        }
    }
    Ok(results)
}

pub fn write_bench_csv<W: Write>(results: &[BenchResult], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    writeln!(out, "estimator,eps,k,r,ns_per_update,ops_per_update")?;
    for b in results {
        writeln!(
            out,
            "{},{},{},{},{:.3},{}",
            b.estimator, b.eps, b.k, b.r, b.ns_per_update, b.ops_per_update
        )?;
    }
    Ok(())
}
