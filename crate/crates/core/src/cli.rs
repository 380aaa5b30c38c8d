//! The `l2track` command line.
//!
//! Exit codes: 0 on success, 2 on usage errors and invalid parameters, 3 on
//! runtime failures (I/O, malformed input, overflow). Data goes to stdout or
//! `--out`; diagnostics go to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::bench::{run_bench, sketch_shape, write_bench_csv, BenchConfig};
use crate::epsnet::{greedy_net, greedy_net_relative, verify_net};
use crate::error::Error;
use crate::metrics::frobenius::{
    cauchy_schwarz_bound, expected_frobenius_sq, frobenius_stat, tail_threshold,
};
use crate::metrics::{
    failure_probability, track_run, write_trace_csv, EvalPolicy, Summary, TrackConfig, TrackingMode,
};
use crate::sketches::{state, AnyEstimator, EstimatorKind};
use crate::splitmix64;
use crate::streams::{write_items, GeneratedStream, StreamSpec};

#[derive(Debug, Parser)]
#[command(
    name = "l2track",
    version,
    about = "l2-norm tracking sketches and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated stream, one item id per line.
    Gen(GenArgs),
    /// Track ||f^(t)||² with an estimator and report the tracking error.
    Track(TrackArgs),
    /// Time updates and count counter writes per update.
    Bench(BenchArgs),
    /// Monte Carlo statistics of the collision-matrix Frobenius norm.
    Frobenius(FrobeniusArgs),
    /// Build and verify a greedy ε-net over the stream prefixes.
    Epsnet(EpsnetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Distinct,
    Uniform,
    Zipf,
    #[value(name = "ams_hard")]
    AmsHard,
    #[value(name = "cs_hard")]
    CsHard,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Est {
    Cs,
    Ams,
    Median,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Signs {
    Kwise,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Eval {
    #[value(name = "every-step")]
    EveryStep,
    Dyadic,
    /// The hard instance's checkpoints, or --times.
    Checkpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dist {
    Uniform,
    Ones,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Output path, or `-` for stdout.
    #[arg(long, default_value = "-")]
    out: String,
    /// Worker threads for Monte Carlo trials.
    #[arg(long)]
    threads: Option<u32>,
}

#[derive(Debug, Args)]
struct StreamArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    path: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    stream: StreamArgs,
    /// Accuracy parameter of the hard instances.
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct TrackArgs {
    #[command(flatten)]
    stream: StreamArgs,
    #[arg(long, value_enum)]
    est: Option<Est>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum, default_value = "kwise")]
    signs: Signs,
    #[arg(long, value_enum, default_value = "weak")]
    mode: Mode,
    /// Defaults to the hard instance's checkpoints, else every step.
    #[arg(long, value_enum)]
    eval: Option<Eval>,
    /// Comma-separated evaluation times for `--eval checkpoints`.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<u64>>,
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Emit only the JSON summary.
    #[arg(long)]
    no_trace: bool,
    /// Write the final estimator state (single trial only).
    #[arg(long)]
    save_state: Option<PathBuf>,
    /// Resume from a saved state; its update count is the resume point.
    #[arg(long)]
    load_state: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "cs,ams,median"
    )]
    est: Vec<Est>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.05,0.02")]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 3)]
    warmup: u32,
    #[arg(long, default_value_t = 10)]
    batches: u32,
    #[arg(long, default_value_t = 1_000_000)]
    batch_size: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct FrobeniusArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    trials: u32,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: Dist,
    /// Comma-separated δ values for the tail check.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5")]
    delta: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EpsnetArgs {
    #[command(flatten)]
    stream: StreamArgs,
    /// Absolute radius.
    #[arg(long, conflicts_with = "eps_rel")]
    eps: Option<f64>,
    /// Radius as a fraction of ||f^(m)||_2.
    #[arg(long)]
    eps_rel: Option<f64>,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> CliResult<T> {
    match value {
        Some(v) => Ok(v),
        None => usage(format!("--{flag} is required for {family}")),
    }
}

fn need_seed(common: &Common, what: &str) -> CliResult<u64> {
    match common.seed {
        Some(s) => Ok(s),
        None => usage(format!("--seed is required for {what}")),
    }
}

fn stream_spec(args: &StreamArgs, eps: Option<f64>, seed: Option<u64>) -> CliResult<StreamSpec> {
    let fam = args.family;
    let name = format!("{fam:?}").to_lowercase();
    let seed_for = |s: Option<u64>| need(s, "seed", &name);
    Ok(match fam {
        Family::Distinct => StreamSpec::Distinct {
            m: need(args.m, "m", &name)?,
        },
        Family::Uniform => StreamSpec::Uniform {
            n: need(args.n, "n", &name)?,
            m: need(args.m, "m", &name)?,
            seed: seed_for(seed)?,
        },
        Family::Zipf => StreamSpec::Zipf {
            n: need(args.n, "n", &name)?,
            m: need(args.m, "m", &name)?,
            alpha: need(args.alpha, "alpha", &name)?,
            seed: seed_for(seed)?,
        },
        Family::AmsHard => StreamSpec::AmsHard {
            eps: need(eps, "eps", "ams_hard")?,
            ell: need(args.ell, "ell", "ams_hard")?,
        },
        Family::CsHard => StreamSpec::CsHard {
            eps: need(eps, "eps", "cs_hard")?,
            ell: need(args.ell, "ell", "cs_hard")?,
        },
        Family::File => StreamSpec::File {
            path: need(args.path.clone(), "path", "file")?,
        },
    })
}

fn open_out(path: &str) -> CliResult<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn with_threads<T: Send>(
    threads: Option<u32>,
    f: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    match threads {
        None => f(),
        Some(0) => usage("--threads must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| Failure::Runtime(Error::State(e.to_string())))?;
            pool.install(f)
        }
    }
}

fn cmd_gen(args: GenArgs) -> CliResult<()> {
    let spec = stream_spec(&args.stream, args.eps, args.common.seed)?;
    let GeneratedStream { stream, .. } = spec.build()?;
    let out = open_out(&args.common.out)?;
    write_items(&stream, out)?;
    Ok(())
}

fn estimator_kind(est: Est, signs: Signs) -> EstimatorKind {
    match (est, signs) {
        (Est::Cs, _) => EstimatorKind::CountSketch,
        (Est::Ams, Signs::Kwise) => EstimatorKind::Ams,
        (Est::Ams, Signs::Independent) => EstimatorKind::AmsIndependent,
        (Est::Median, _) => EstimatorKind::Median,
        (Est::Oracle, _) => EstimatorKind::Oracle,
    }
}

fn estimator_shape(args: &TrackArgs, kind: EstimatorKind) -> CliResult<(usize, usize)> {
    if kind == EstimatorKind::Oracle {
        return Ok((0, 1));
    }
    let name = kind.name();
    let median = kind == EstimatorKind::Median;
    let (k, r) = match (args.k, args.r) {
        (Some(k), Some(r)) => (k, r),
        (Some(k), None) if !median => (k, 1),
        (k, r) => {
            let eps = need(args.eps, "eps", &format!("{name} without --k"))?;
            let delta = need(args.delta, "delta", &format!("{name} without --k"))?;
            let (dk, dr) = sketch_shape(kind, eps, delta)?;
            (k.unwrap_or(dk), r.unwrap_or(dr))
        }
    };
    if !median && args.r.is_some() {
        return usage("--r only applies to --est median");
    }
    Ok((k, r))
}

fn eval_policy(args: &TrackArgs, generated: &GeneratedStream) -> CliResult<EvalPolicy> {
    let eval = args.eval.unwrap_or(if generated.checkpoints.is_some() {
        Eval::Checkpoints
    } else {
        Eval::EveryStep
    });
    if args.times.is_some() && eval != Eval::Checkpoints {
        return usage("--times needs --eval checkpoints");
    }
    Ok(match eval {
        Eval::EveryStep => EvalPolicy::EveryStep,
        Eval::Dyadic => EvalPolicy::Dyadic,
        Eval::Checkpoints => match (&args.times, &generated.checkpoints) {
            (Some(times), _) => EvalPolicy::Explicit(times.clone()),
            (None, Some(cps)) => EvalPolicy::Explicit(cps.clone()),
            (None, None) => return usage("--eval checkpoints needs --times for this family"),
        },
    })
}

fn cmd_track(args: TrackArgs) -> CliResult<()> {
    if args.trials == 0 {
        return usage("--trials must be at least 1");
    }
    if args.load_state.is_some() && args.est.is_some() {
        return usage("--load-state restores the estimator; drop --est");
    }
    if (args.save_state.is_some() || args.load_state.is_some()) && args.trials != 1 {
        return usage("--save-state/--load-state need --trials 1");
    }
    let restored = match &args.load_state {
        Some(path) => Some(state::decode(&std::fs::read(path)?)?),
        None => None,
    };
    let kind = match (&restored, args.est) {
        (Some(_), _) => None,
        (None, Some(e)) => Some(estimator_kind(e, args.signs)),
        (None, None) => return usage("--est is required"),
    };
    let randomized = kind.is_some_and(|k| k != EstimatorKind::Oracle)
        || matches!(args.stream.family, Family::Uniform | Family::Zipf);
    let seed = if randomized {
        Some(need_seed(&args.common, "randomized streams and sketches")?)
    } else {
        args.common.seed
    };

    let spec = stream_spec(&args.stream, args.eps, seed)?;
    let generated = spec.build()?;
    let policy = eval_policy(&args, &generated)?;
    let mode = match args.mode {
        Mode::Weak => TrackingMode::Weak,
        Mode::Strong => TrackingMode::Strong,
    };
    let mut cfg = TrackConfig::new(mode, policy);
    cfg.record_trace = !args.no_trace;
    let stream = &generated.stream;
    let mut out = open_out(&args.common.out)?;

    let (report, failures) = if let Some(mut est) = restored {
        cfg.resume_after = est.updates();
        let report = track_run(stream, &mut est, &cfg)?;
        save_state(&args, &est)?;
        let failed = args.eps.map(|eps| (report.sup_error > eps) as u32);
        (report, failed)
    } else {
        let kind = kind.expect("estimator kind chosen above");
        let (k, r) = estimator_shape(&args, kind)?;
        // sketch seeds are kept apart from the stream generator's seed
        let base = splitmix64(seed.unwrap_or(0));
        if args.trials == 1 {
            let mut est = AnyEstimator::build(kind, k, r, base)?;
            let report = track_run(stream, &mut est, &cfg)?;
            save_state(&args, &est)?;
            let failed = args.eps.map(|eps| (report.sup_error > eps) as u32);
            (report, failed)
        } else {
            let threshold = args.eps.unwrap_or(f64::INFINITY);
            let rep = with_threads(args.common.threads, || {
                Ok(failure_probability(
                    stream,
                    |s| AnyEstimator::build(kind, k, r, s),
                    threshold,
                    &cfg,
                    args.trials,
                    base,
                )?)
            })?;
            let failures = args.eps.map(|_| rep.failures);
            let mut worst = rep.worst().clone();
            // the trace always comes from trial 0
            worst.trace = rep.reports[0].trace.clone();
            (worst, failures)
        }
    };

    if let Some(trace) = &report.trace {
        write_trace_csv(trace, &mut out)?;
    }
    let summary = Summary {
        mode: report.mode,
        policy: report.policy,
        sup_error: report.sup_error,
        argmax_t: report.argmax_t,
        trials: args.trials,
        failures,
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string(&summary).expect("plain struct")
    )?;
    out.flush()?;
    Ok(())
}

fn save_state(args: &TrackArgs, est: &AnyEstimator) -> CliResult<()> {
    if let Some(path) = &args.save_state {
        std::fs::write(path, state::encode(est)?)?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    if args.warmup < 3 || args.batches < 10 || args.batch_size < 1_000_000 {
        return usage("bench needs --warmup >= 3, --batches >= 10 and --batch-size >= 1000000");
    }
    let seed = need_seed(&args.common, "bench")?;
    let kinds = args
        .est
        .iter()
        .map(|&e| estimator_kind(e, Signs::Kwise))
        .collect();
    let mut cfg = BenchConfig::new(kinds, args.eps.clone(), args.delta, seed);
    cfg.warmup_batches = args.warmup;
    cfg.timed_batches = args.batches;
    cfg.batch_size = args.batch_size;
    let results = run_bench(&cfg)?;
    let mut out = open_out(&args.common.out)?;
    write_bench_csv(&results, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TailRow {
    delta: f64,
    threshold: f64,
    fraction: f64,
}

fn cmd_frobenius(args: FrobeniusArgs) -> CliResult<()> {
    if args.dim == 0 {
        return usage("--dim must be at least 1");
    }
    let seed = need_seed(&args.common, "frobenius")?;
    let x: Vec<f64> = match args.dist {
        Dist::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..args.dim).map(|_| rng.gen::<f64>()).collect()
        }
        Dist::Ones => vec![1.0; args.dim],
    };
    let st = frobenius_stat(&x, args.k, args.trials, splitmix64(seed))?;
    let tail: Vec<TailRow> = args
        .delta
        .iter()
        .map(|&delta| {
            let threshold = tail_threshold(&x, delta, args.k);
            TailRow {
                delta,
                threshold,
                fraction: st.tail_fraction(threshold),
            }
        })
        .collect();
    let doc = json!({
        "dim": args.dim,
        "k": args.k,
        "trials": args.trials,
        "mean_f2": st.mean_f2,
        "std_f2": st.std_f2,
        "std_error": st.std_error(),
        "expected_f2": expected_frobenius_sq(&x, args.k),
        "cauchy_schwarz_bound": cauchy_schwarz_bound(&x, args.k),
        "tail": tail,
    });
    let mut out = open_out(&args.common.out)?;
    writeln!(out, "{doc}")?;
    out.flush()?;
    Ok(())
}

fn cmd_epsnet(args: EpsnetArgs) -> CliResult<()> {
    let spec = stream_spec(&args.stream, None, args.common.seed)?;
    let stream = spec.build()?.stream;
    let net = match (args.eps, args.eps_rel) {
        (Some(eps), None) => greedy_net(&stream, eps)?,
        (None, Some(rel)) => greedy_net_relative(&stream, rel)?,
        _ => return usage("exactly one of --eps and --eps-rel is required"),
    };
    let check = verify_net(&stream, &net);
    let doc = json!({
        "eps": net.eps,
        "size": net.size(),
        "bound": net.stated_bound(),
        "norm_sq_bound": net.norm_sq_bound(),
        "covered": check.covered,
        "max_min_distance": check.max_min_distance,
    });
    let mut out = open_out(&args.common.out)?;
    writeln!(out, "{doc}")?;
    out.flush()?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Track(a) => cmd_track(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Frobenius(a) => cmd_frobenius(a),
        Command::Epsnet(a) => cmd_epsnet(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            3
        }
    }
}
