//! The `sil` command-line driver.
//!
//! Every subcommand validates its flags before doing any work, writes JSON
//! (with `"schema": 1`) or CSV, and maps failures to exit codes: 0 on success,
//! 2 on validation or capacity errors, 3 when a computed invariant is flagged.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sil_core::cache::sieve_block_cached;
use sil_core::decomp::{dyadic_from_audit, qjh_sup_profile, ramare_from_audit, RamareAudit};
use sil_core::dirichlet::{lemma1_profile_for, lemma2_profile, prime_poly};
use sil_core::interval::{compute_variance_at, default_threshold, sliding_sums, window_length};
use sil_core::num_complex::Complex64;
use sil_core::pipeline::{coefficient_poly, lemma4_chain, PipelineConfig, StudyOptions, DEFAULT_T_BUDGET};
use sil_core::sieve::{PrimeWindow, Sieve, SieveConfig};
use sil_core::{scaling_study, DirichletPoly, GridPolicy, MultiplicativeFunction, ValueSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;
pub const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "sil", version, about = "Multiplicative functions in short intervals")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SIL_THREADS")]
    threads: Option<usize>,

    /// Directory for cached sieve blocks; caching is off when unset.
    #[arg(long = "cache-dir", global = true, env = "SIL_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-integer Ω, λ and window data for [n0, n1).
    Sieve(SieveArgs),
    /// Variance and exceptional fraction of short-interval averages over [X, 2X].
    Variance(VarianceArgs),
    /// Mean square of Σ_{X≤n≤2X} f(n) n^{-1-it} (or a prime polynomial) over [T1, T2].
    Meansq(MeansqArgs),
    /// Ramaré decomposition audit at one t.
    Ramare(RamareArgs),
    /// Short-range prime split with boundary weights and reconstruction check.
    Dyadic(DyadicArgs),
    /// Small-t sup of the λ polynomial and prime-sum bound ratios.
    #[command(name = "lemma-profiles")]
    LemmaProfiles(ProfileArgs),
    /// Scaling study over lists of X and δ.
    Study(StudyArgs),
}

#[derive(Args, Debug, Clone)]
struct FunctionArgs {
    /// liouville, moebius, one or random.
    #[arg(long = "f", default_value = "liouville")]
    f: String,
    /// Seed for the random function.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Definition file ("p k value" lines); overrides --f.
    #[arg(long = "fn-file")]
    fn_file: Option<PathBuf>,
}

impl FunctionArgs {
    fn build(&self) -> Result<MultiplicativeFunction, Failure> {
        match &self.fn_file {
            Some(path) => Ok(MultiplicativeFunction::from_file(path)?),
            None => Ok(MultiplicativeFunction::builtin(&self.f, self.seed)?),
        }
    }
}

#[derive(Args, Debug)]
struct SieveArgs {
    #[arg(long, value_parser = parse_count)]
    n0: u64,
    #[arg(long, value_parser = parse_count)]
    n1: u64,
    #[arg(long = "P", default_value_t = 2.0)]
    p: f64,
    #[arg(long = "Q", default_value_t = 2.0)]
    q: f64,
    /// Print a JSON summary instead of one CSV row per integer.
    #[arg(long)]
    summary: bool,
}

#[derive(Args, Debug)]
struct VarianceArgs {
    #[arg(long = "X", value_parser = parse_count)]
    x: u64,
    #[arg(long)]
    delta: f64,
    #[command(flatten)]
    function: FunctionArgs,
    /// Subtract the mean of f over [X, 2X] before squaring.
    #[arg(long = "subtract-mean")]
    subtract_mean: bool,
    /// Exceptional-set threshold (default (log X)^(-1/9)).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    json: bool,
    /// Fill the seconds column.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct MeansqArgs {
    #[arg(long = "X", value_parser = parse_count)]
    x: u64,
    #[arg(long = "T1", default_value_t = 0.0)]
    t1: f64,
    #[arg(long = "T2")]
    t2: f64,
    #[command(flatten)]
    function: FunctionArgs,
    /// Use the prime polynomial on [P, Q] instead of f on [X, 2X].
    #[arg(long = "P", requires = "q")]
    p: Option<f64>,
    #[arg(long = "Q", requires = "p")]
    q: Option<f64>,
    /// Work budget (grid points × terms).
    #[arg(long, default_value_t = 1e11)]
    budget: f64,
    /// Write (t, re, im, |F|) on the refined grid to this CSV file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RamareArgs {
    #[arg(long = "X", value_parser = parse_count)]
    x: u64,
    #[arg(long = "P")]
    p: f64,
    #[arg(long = "Q")]
    q: f64,
    /// One or more t values (comma separated).
    #[arg(long = "t", value_delimiter = ',', default_value = "0")]
    t: Vec<f64>,
}

#[derive(Args, Debug)]
struct DyadicArgs {
    #[arg(long = "X", value_parser = parse_count)]
    x: u64,
    #[arg(long = "P")]
    p: f64,
    #[arg(long = "Q")]
    q: f64,
    #[arg(long = "H")]
    h: f64,
    #[arg(long = "t", value_delimiter = ',', default_value = "0,1,17.3,1000")]
    t: Vec<f64>,
    /// Include the per-bin sup of the prime polynomials on [T0, T].
    #[arg(long = "T0", requires = "t_end")]
    t0: Option<f64>,
    #[arg(long = "T", id = "t_end", requires = "t0")]
    t_end: Option<f64>,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long = "X", value_parser = parse_count)]
    x: u64,
    #[arg(long = "A", default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Prime window for the prime-sum profile (default: the pipeline window).
    #[arg(long = "P", requires = "q")]
    p: Option<f64>,
    #[arg(long = "Q", requires = "p")]
    q: Option<f64>,
    /// Sample points for the prime-sum profile (default 0, 1, 10, 100, 1000, X).
    #[arg(long = "t", value_delimiter = ',')]
    t: Vec<f64>,
    #[command(flatten)]
    function: FunctionArgs,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Comma-separated X values.
    #[arg(long = "X", value_delimiter = ',', value_parser = parse_count, required = true)]
    xs: Vec<u64>,
    /// Comma-separated δ values.
    #[arg(long, value_delimiter = ',', required = true)]
    delta: Vec<f64>,
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long = "subtract-mean")]
    subtract_mean: bool,
    /// Largest X that gets the variance-versus-mean-square columns.
    #[arg(long = "lemma3-max-x", value_parser = parse_count, default_value = "10000")]
    lemma3_max_x: u64,
    /// Largest X that gets the mean-value ratio column.
    #[arg(long = "mvt-max-x", value_parser = parse_count, default_value = "10000")]
    mvt_max_x: u64,
    /// T values for the mean-value ratio column.
    #[arg(long = "mvt-T", value_delimiter = ',', default_value = "100,1000")]
    mvt_t: Vec<f64>,
    /// Work budget per mean-square operation.
    #[arg(long, default_value_t = DEFAULT_T_BUDGET)]
    budget: f64,
    /// Also run the bound chain at this T for every row (needs --force-window).
    #[arg(long = "T")]
    chain_t: Option<f64>,
    /// Explicit prime window "P,Q" for the bound chain.
    #[arg(long = "force-window", value_delimiter = ',')]
    force_window: Option<Vec<f64>>,
    #[arg(long = "H")]
    h_bins: Option<f64>,
    /// Write the CSV summary here as well.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record wall time per row (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

/// Accepts plain integers and integral scientific notation such as `1e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v < 0.0 || v.fract() != 0.0 || v >= 9.2e18 {
        return Err(format!("'{s}' is not a non-negative integer"));
    }
    Ok(v as u64)
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Flagged(String),
}

impl From<sil_core::Error> for Failure {
    fn from(e: sil_core::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Flagged(msg)) => {
            eprintln!("invariant flagged: {msg}");
            EXIT_FLAGGED
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| invalid(format!("thread pool: {e}")))?;
    if let Some(dir) = &cli.cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| invalid(format!("{}: {e}", dir.display())))?;
    }
    let cache = cli.cache_dir.as_deref();
    let (text, flagged) = pool.install(|| match &cli.command {
        Command::Sieve(a) => cmd_sieve(a, cache),
        Command::Variance(a) => cmd_variance(a, cache),
        Command::Meansq(a) => cmd_meansq(a, cache),
        Command::Ramare(a) => cmd_ramare(a),
        Command::Dyadic(a) => cmd_dyadic(a),
        Command::LemmaProfiles(a) => cmd_profiles(a, cache),
        Command::Study(a) => cmd_study(a),
    })?;
    emit(cli.out.as_deref(), &text)?;
    match flagged {
        Some(msg) => Err(Failure::Flagged(msg)),
        None => Ok(()),
    }
}

type Output = Result<(String, Option<String>), Failure>;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| invalid(format!("stdout: {e}")))
        }
    }
}

fn to_json(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn envelope(command: &str, config: Value, result: Value) -> Value {
    json!({ "schema": SCHEMA, "command": command, "config": config, "result": result })
}

fn cx(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// CSV float: 17 significant digits, '.' decimal point.
fn fl(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_delta(delta: f64) -> Result<(), Failure> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid("delta must be in (0,1)"))
    }
}

fn check_x(x: u64, min: u64) -> Result<(), Failure> {
    if x < min {
        Err(invalid(format!("X must be at least {min}, got {x}")))
    } else {
        Ok(())
    }
}

fn check_finite(name: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// Values of `f` on `range`; λ reuses cached sieve blocks when a cache directory is set.
fn values_for(f: &MultiplicativeFunction, range: std::ops::Range<u64>, cache: Option<&Path>) -> Result<ValueSeries, Failure> {
    if f.is_liouville() && cache.is_some() {
        let sieve = Sieve::with_bound(SieveConfig::default(), range.end)?;
        let block = sieve_block_cached(&sieve, range.clone(), cache)?;
        return Ok(ValueSeries::new(range.start, block.lambda.iter().map(|&l| l as f64).collect()));
    }
    Ok(ValueSeries::evaluate(f, range)?)
}

fn cmd_sieve(a: &SieveArgs, cache: Option<&Path>) -> Output {
    if a.n0 == 0 {
        return Err(invalid("n0 must be at least 1"));
    }
    if a.n1 < a.n0 {
        return Err(invalid("n1 must not be below n0"));
    }
    let window = PrimeWindow::new(a.p, a.q)?;
    let sieve = Sieve::with_bound(SieveConfig::with_window(window), a.n1)?;
    let block = sieve_block_cached(&sieve, a.n0..a.n1, cache)?;
    if a.summary {
        let lambda_sum: i64 = block.lambda.iter().map(|&l| l as i64).sum();
        let rough = block.window_omega.iter().filter(|&&w| w == 0).count();
        let squares = block.window_square_flag.iter().filter(|&&s| s).count();
        let config = json!({ "n0": a.n0, "n1": a.n1, "P": a.p, "Q": a.q });
        let result = json!({
            "count": block.len(),
            "lambda_sum": lambda_sum,
            "window_rough": rough,
            "window_square": squares,
            "max_big_omega": block.big_omega.iter().copied().max().unwrap_or(0),
        });
        return Ok((to_json(envelope("sieve", config, result)), None));
    }
    let mut s = String::from("n,big_omega,lambda,window_omega,window_square\n");
    for (i, n) in block.range().enumerate() {
        let _ = writeln!(
            s,
            "{n},{},{},{},{}",
            block.big_omega[i],
            block.lambda[i],
            block.window_omega[i],
            block.window_square_flag[i] as u8
        );
    }
    Ok((s, None))
}

fn cmd_variance(a: &VarianceArgs, cache: Option<&Path>) -> Output {
    check_delta(a.delta)?;
    check_x(a.x, 2)?;
    let threshold = a.threshold.unwrap_or_else(|| default_threshold(a.x));
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(invalid("threshold must be positive"));
    }
    let f = a.function.build()?;
    let started = Instant::now();
    let h = window_length(a.x, a.delta)?;
    let values = values_for(&f, a.x..2 * a.x + h + 1, cache)?;
    let mut series = sliding_sums(&values, a.x, h)?.with_delta(a.delta);
    if a.subtract_mean {
        series = series.with_mean(values.mean_over(a.x)?);
    }
    let report = compute_variance_at(&series, threshold)?;
    let seconds = a.timings.then(|| started.elapsed().as_secs_f64());
    let flagged = (!report.chebyshev_holds()).then(|| {
        format!(
            "exceptional fraction {} exceeds variance/threshold² = {}",
            report.exceptional_fraction,
            report.chebyshev_bound()
        )
    });
    if a.json {
        let config = json!({ "X": a.x, "delta": a.delta, "function": f, "subtract_mean": a.subtract_mean });
        let mut result = serde_json::to_value(&report).expect("report serializes");
        result["seconds"] = json!(seconds);
        return Ok((to_json(envelope("variance", config, result)), flagged));
    }
    let mut s = String::from("X,delta,h,variance,threshold,exceptional_fraction,seconds\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{}",
        report.x,
        fl(a.delta),
        report.h,
        fl(report.variance),
        fl(report.threshold),
        fl(report.exceptional_fraction),
        seconds.map(fl).unwrap_or_default()
    );
    Ok((s, flagged))
}

fn cmd_meansq(a: &MeansqArgs, cache: Option<&Path>) -> Output {
    check_finite("T1", a.t1)?;
    check_finite("T2", a.t2)?;
    if !(a.t1 >= 0.0 && a.t1 < a.t2) {
        return Err(invalid(format!("need 0 ≤ T1 < T2, got T1 = {}, T2 = {}", a.t1, a.t2)));
    }
    let (poly, source) = match (a.p, a.q) {
        (Some(p), Some(q)) => (prime_poly(p, q)?, json!({ "primes": [p, q] })),
        _ => {
            check_x(a.x, 1)?;
            let f = a.function.build()?;
            let values = values_for(&f, a.x..2 * a.x + 1, cache)?;
            (coefficient_poly(&values, a.x)?, json!({ "X": a.x, "function": f }))
        }
    };
    let policy = GridPolicy {
        max_work: a.budget,
        ..GridPolicy::default()
    };
    let est = poly.mean_square_with(a.t1, a.t2, &policy)?;
    if let Some(path) = &a.dump {
        dump_grid(&poly, &est, path)?;
    }
    let l2 = poly.weighted_l2();
    let mvt = if a.t1 == 0.0 && l2 > 0.0 {
        Some(2.0 * est.refined_value / ((a.t2 + poly.upper() as f64) * l2))
    } else {
        None
    };
    let flagged = (!est.accepted).then(|| format!("refinement gap {} above 1%", est.rel_gap));
    let config = json!({ "T1": a.t1, "T2": a.t2, "source": source, "budget": a.budget });
    let mut result = serde_json::to_value(&est).expect("estimate serializes");
    result["terms"] = json!(poly.nnz());
    result["weighted_l2"] = json!(l2);
    result["mvt_ratio"] = json!(mvt);
    Ok((to_json(envelope("meansq", config, result)), flagged))
}

fn dump_grid(poly: &DirichletPoly, est: &sil_core::MeanSquareEstimate, path: &Path) -> Result<(), Failure> {
    let half = est.grid_step / 2.0;
    let count = 2 * est.intervals + 1;
    let vals = poly.eval_grid(est.t_range.0, half, count);
    let mut s = String::from("t,re,im,abs\n");
    for (k, z) in vals.iter().enumerate() {
        let t = est.t_range.0 + k as f64 * half;
        let _ = writeln!(s, "{},{},{},{}", fl(t), fl(z.re), fl(z.im), fl(z.norm()));
    }
    std::fs::write(path, s).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

/// Tolerance for the closure check reported by `ramare`.
const CLOSURE_TOL: f64 = 1e-12;

fn cmd_ramare(a: &RamareArgs) -> Output {
    for &t in &a.t {
        check_finite("t", t)?;
    }
    let audit = RamareAudit::new(a.x, a.p, a.q)?;
    let mut flagged = None;
    let instances: Vec<Value> = a
        .t
        .iter()
        .map(|&t| {
            let d = ramare_from_audit(&audit, t);
            if d.relative_closure() > CLOSURE_TOL || d.residual_support_violations > 0 {
                flagged = Some(format!(
                    "t = {t}: relative closure {} with {} off-support residuals",
                    d.relative_closure(),
                    d.residual_support_violations
                ));
            }
            json!({
                "X": d.x, "P": d.window.0, "Q": d.window.1, "t": d.t,
                "lhs": cx(d.lhs), "main": cx(d.main), "rough": cx(d.rough), "residual": cx(d.residual),
                "closure_error": d.closure_error,
                "relative_closure": d.relative_closure(),
                "residual_support_count": d.residual_support_count,
                "residual_support_violations": d.residual_support_violations,
            })
        })
        .collect();
    let config = json!({ "X": a.x, "P": a.p, "Q": a.q, "t": a.t });
    Ok((to_json(envelope("ramare", config, json!(instances))), flagged))
}

/// Tolerance for the reconstruction check reported by `dyadic`.
const RECONSTRUCTION_TOL: f64 = 1e-9;

fn cmd_dyadic(a: &DyadicArgs) -> Output {
    for &t in &a.t {
        check_finite("t", t)?;
    }
    let audit = RamareAudit::new(a.x, a.p, a.q)?;
    let split = dyadic_from_audit(&audit, a.h)?;
    let mut flagged = None;
    let max_d = split.max_boundary_coeff();
    if max_d > 1.0 + 1e-12 {
        flagged = Some(format!("boundary weight {max_d} exceeds 1"));
    }
    let checks: Vec<Value> = a
        .t
        .iter()
        .map(|&t| {
            let main = audit.main_term(t);
            let rec = split.reconstruct(t);
            let rel = (rec + main).norm() / main.norm().max(f64::MIN_POSITIVE);
            if rel > RECONSTRUCTION_TOL {
                flagged = Some(format!("t = {t}: reconstruction off by {rel} (relative)"));
            }
            json!({ "t": t, "main": cx(main), "factored_minus_boundary": cx(rec), "relative_error": rel })
        })
        .collect();
    let bins: Vec<Value> = split
        .factors
        .iter()
        .map(|f| {
            let (lo, hi) = split.bin_bounds(f.j);
            json!({ "j": f.j, "lower": lo, "upper": hi, "primes": f.primes.nnz(), "cofactor_terms": f.cofactor.nnz() })
        })
        .collect();
    let mut result = json!({
        "j_range": [split.j_range.0, split.j_range.1],
        "nonempty_bins": split.factors.len(),
        "boundary_lower_terms": split.boundary_lower.nnz(),
        "boundary_upper_terms": split.boundary_upper.nnz(),
        "max_boundary_coeff": max_d,
        "note": "factored sum carries no λ(p) factor; it reconstructs the negative of the main term",
        "reconstruction": checks,
        "bins": bins,
    });
    if let (Some(t0), Some(t)) = (a.t0, a.t_end) {
        result["qjh_sup"] = serde_json::to_value(qjh_sup_profile(&split, a.x, t0, t)?).expect("rows serialize");
    }
    let config = json!({ "X": a.x, "P": a.p, "Q": a.q, "H": a.h });
    Ok((to_json(envelope("dyadic", config, result)), flagged))
}

fn cmd_profiles(a: &ProfileArgs, cache: Option<&Path>) -> Output {
    check_x(a.x, 100)?;
    check_delta(a.delta)?;
    check_finite("A", a.a)?;
    let f = a.function.build()?;
    let values = values_for(&f, a.x..2 * a.x + 1, cache)?;
    let poly = coefficient_poly(&values, a.x)?;
    let lemma1 = lemma1_profile_for(&poly, a.x, a.a)?;
    let (p, q) = match (a.p, a.q) {
        (Some(p), Some(q)) => (p, q),
        _ => {
            let w = PipelineConfig::new(a.x, a.delta)?.window()?;
            (w.lower(), w.upper())
        }
    };
    let samples = if a.t.is_empty() {
        vec![0.0, 1.0, 10.0, 100.0, 1000.0, a.x as f64]
            .into_iter()
            .filter(|&t| t <= a.x as f64)
            .collect()
    } else {
        a.t.clone()
    };
    let lemma2 = lemma2_profile(p, q, a.x, &samples)?;
    let max_ratio = lemma2.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
    let config = json!({ "X": a.x, "A": a.a, "P": p, "Q": q, "function": f });
    let result = json!({
        "small_t_sup": lemma1,
        "prime_sum": lemma2,
        "prime_sum_max_ratio": max_ratio,
    });
    Ok((to_json(envelope("lemma-profiles", config, result)), None))
}

fn cmd_study(a: &StudyArgs) -> Output {
    for &d in &a.delta {
        check_delta(d)?;
    }
    for &x in &a.xs {
        check_x(x, 2)?;
    }
    if !(a.budget > 0.0) {
        return Err(invalid("budget must be positive"));
    }
    if let Some(w) = &a.force_window {
        if w.len() != 2 {
            return Err(invalid("--force-window takes exactly two values, P,Q"));
        }
    }
    if a.chain_t.is_some() && a.force_window.is_none() {
        // The default window is empty at any X this tool can reach.
        for &x in &a.xs {
            for &d in &a.delta {
                PipelineConfig::new(x, d)?.window()?;
            }
        }
    }
    let f = a.function.build()?;
    let options = StudyOptions {
        subtract_mean: a.subtract_mean,
        lemma3_max_x: a.lemma3_max_x,
        mvt_ts: a.mvt_t.clone(),
        mvt_max_x: a.mvt_max_x,
        t_budget: a.budget,
        timings: a.timings,
    };
    let study = scaling_study(&a.delta, &a.xs, &f, &options)?;

    let mut chains = Vec::new();
    if let Some(t) = a.chain_t {
        for row in &study.rows {
            let mut c = PipelineConfig::new(row.x, row.delta)?.with_function(f.clone(), a.subtract_mean);
            c.t_budget = a.budget;
            if let Some(w) = &a.force_window {
                c = c.with_window(w[0], w[1]);
            }
            if let Some(h) = a.h_bins {
                c.h_bins = h;
            }
            chains.push(serde_json::to_value(lemma4_chain(&c, t)?).expect("chain serializes"));
        }
    }

    let flagged = (!study.flags.is_empty()).then(|| study.flags.join("; "));
    if let Some(path) = &a.csv {
        std::fs::write(path, study_csv(&study)).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    let config = json!({
        "X": a.xs, "delta": a.delta, "function": f, "options": options,
        "chain_T": a.chain_t, "force_window": a.force_window, "H": a.h_bins,
        "dyadic_T_ceiling": "X^2, truncated by the work budget (heuristic sampling of the sup over T)",
    });
    let mut result = serde_json::to_value(&study).expect("study serializes");
    result["chains"] = json!(chains);
    Ok((to_json(envelope("study", config, result)), flagged))
}

fn study_csv(study: &sil_core::ScalingStudy) -> String {
    let opt = |v: Option<f64>| v.map(fl).unwrap_or_default();
    let mut s = String::from(
        "X,delta,h,variance,variance_log_scaled,threshold,exceptional_fraction,lhs_lemma3,rhs_lemma3_estimate,lemma3_ratio,mvt_ratio_max,seconds\n",
    );
    for r in &study.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.x,
            fl(r.delta),
            r.h,
            fl(r.variance),
            fl(r.variance_log_scaled),
            fl(r.threshold),
            fl(r.exceptional_fraction),
            opt(r.lhs_lemma3),
            opt(r.rhs_lemma3_estimate),
            opt(r.lemma3_ratio),
            opt(r.mvt_ratio_max),
            opt(r.seconds)
        );
    }
    s
}
