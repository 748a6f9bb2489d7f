//! End-to-end assembly: interval variance against Dirichlet-polynomial mean
//! squares, the term-by-term chain for `∫_0^T |F|²`, and scaling studies.
//!
//! Nothing here asserts a numeric constant. Every `≪` relation is reported as
//! a measured ratio; the acceptance tests pin the thresholds.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decomp::{dyadic_from_audit, RamareAudit};
use crate::dirichlet::{DirichletPoly, GridPolicy, MeanSquareEstimate};
use crate::error::{Error, Result};
use crate::interval::{
    compute_variance_at, default_threshold, sliding_sums, window_length, ValueSeries,
};
use crate::multfunc::MultiplicativeFunction;
use crate::sieve::{rough_count, PrimeWindow};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_A: f64 = 2.0;
/// Default work budget (grid points × terms) for one pipeline operation.
pub const DEFAULT_T_BUDGET: f64 = 2e10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub x: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub a: f64,
    /// Bin resolution `H` of the short-range split.
    pub h_bins: f64,
    pub t0: f64,
    /// Explicit `(P, Q)`; `None` uses `exp((log X)^{2/3+ε})` and `X^{δ/3}`.
    pub forced_window: Option<(f64, f64)>,
    pub f: MultiplicativeFunction,
    pub subtract_mean: bool,
    pub t_budget: f64,
}

impl PipelineConfig {
    pub fn new(x: u64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput("delta must be in (0,1)".into()));
        }
        if x < 100 {
            return Err(Error::InvalidInput(format!("X must be at least 100, got {x}")));
        }
        let log_x = (x as f64).ln();
        let t0 = log_x.powi(10).min((x as f64).powf(1.0 - delta) / 4.0);
        Ok(Self {
            x,
            delta,
            epsilon: DEFAULT_EPSILON,
            a: DEFAULT_A,
            h_bins: log_x.powi(5),
            t0,
            forced_window: None,
            f: MultiplicativeFunction::liouville(),
            subtract_mean: false,
            t_budget: DEFAULT_T_BUDGET,
        })
    }

    pub fn with_window(mut self, p: f64, q: f64) -> Self {
        self.forced_window = Some((p, q));
        self
    }

    pub fn with_function(mut self, f: MultiplicativeFunction, subtract_mean: bool) -> Self {
        self.f = f;
        self.subtract_mean = subtract_mean;
        self
    }

    pub fn log_x(&self) -> f64 {
        (self.x as f64).ln()
    }

    /// `(exp((log X)^{2/3+ε}), X^{δ/3})`.
    pub fn default_window(&self) -> (f64, f64) {
        (
            self.log_x().powf(2.0 / 3.0 + self.epsilon).exp(),
            (self.x as f64).powf(self.delta / 3.0),
        )
    }

    /// The window in force. Defaults that produce `P > Q` are refused rather
    /// than clamped.
    pub fn window(&self) -> Result<PrimeWindow> {
        let (p, q) = match self.forced_window {
            Some(w) => w,
            None => {
                let (p, q) = self.default_window();
                if p > q {
                    return Err(Error::InvalidInput(format!(
                        "default window is empty at X = {}: P = exp((log X)^(2/3+ε)) = {p:.4} exceeds \
                         Q = X^(δ/3) = {q:.4}; choose P and Q explicitly (--force-window)",
                        self.x
                    )));
                }
                (p, q)
            }
        };
        if q > 2.0 * self.x as f64 {
            return Err(Error::InvalidInput(format!("Q = {q} exceeds 2X")));
        }
        PrimeWindow::new(p, q)
    }

    pub fn h(&self) -> Result<u64> {
        window_length(self.x, self.delta)
    }

    fn policy(&self) -> GridPolicy {
        GridPolicy {
            max_work: self.t_budget,
            ..GridPolicy::default()
        }
    }

    fn values(&self) -> Result<ValueSeries> {
        let h = self.h()?;
        ValueSeries::evaluate(&self.f, self.x..2 * self.x + h + 1)
    }
}

/// Coefficients `f(n)` on `[X, 2X]` from a value series.
pub fn coefficient_poly(values: &ValueSeries, x: u64) -> Result<DirichletPoly> {
    DirichletPoly::dense(x, values.slice(x..2 * x + 1)?.to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicTerm {
    pub t: f64,
    pub estimate: MeanSquareEstimate,
    /// `(X^{1−δ}/T) ∫_T^{2T} |F|²` on the refined grid.
    pub term: f64,
    /// Same on the coarse grid.
    pub term_coarse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Comparison {
    pub x: u64,
    pub delta: f64,
    pub h: u64,
    /// `(1/X) ∫_X^{2X} |(1/h) Σ_{x≤n≤x+h} f(n) − m|² dx`, exact.
    pub lhs: f64,
    /// `∫_0^{X^{1−δ}} |F(1+it)|² dt`.
    pub head: MeanSquareEstimate,
    pub dyadic: Vec<DyadicTerm>,
    /// `X^{1−δ} Σ a_n²/n²`, the limit of the dyadic term as `T → ∞`.
    pub tail_limit: f64,
    /// Largest dyadic `T` that fit the budget.
    pub sampled_up_to: f64,
    /// Largest dyadic `T` requested (`X²`).
    pub dyadic_ceiling: f64,
    pub rhs: f64,
    pub rhs_coarse: f64,
    pub ratio: f64,
    pub ratio_coarse: f64,
    /// `|ratio − ratio_coarse| / ratio`.
    pub refinement_change: f64,
    pub all_accepted: bool,
}

impl Lemma3Comparison {
    pub fn is_stable(&self, tol: f64) -> bool {
        self.refinement_change <= tol
    }
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Compares the interval variance with
/// `∫_0^{X^{1−δ}} |F|² + max_{T ≥ X^{1−δ}} (X^{1−δ}/T) ∫_T^{2T} |F|²`.
///
/// The maximum runs over dyadic `T = X^{1−δ} 2^k ≤ X²` as far as the work
/// budget allows, together with the `T → ∞` limit `X^{1−δ} Σ a_n²/n²`; the
/// sampling is a heuristic stand-in for the supremum over all `T`.
pub fn lemma3_compare(config: &PipelineConfig) -> Result<Lemma3Comparison> {
    let values = config.values()?;
    lemma3_compare_values(&values, config.x, config.delta, config.subtract_mean, config.t_budget)
}

pub fn lemma3_compare_values(
    values: &ValueSeries,
    x: u64,
    delta: f64,
    subtract_mean: bool,
    budget: f64,
) -> Result<Lemma3Comparison> {
    let h = window_length(x, delta)?;
    let mut series = sliding_sums(values, x, h)?.with_delta(delta);
    if subtract_mean {
        series = series.with_mean(values.mean_over(x)?);
    }
    let lhs = compute_variance_at(&series, default_threshold(x))?.variance;

    let poly = coefficient_poly(values, x)?;
    let policy = GridPolicy {
        max_work: budget,
        ..GridPolicy::default()
    };
    let base = (x as f64).powf(1.0 - delta);
    let head_work = policy.work(&poly, 0.0, base);
    if head_work > budget {
        return Err(Error::Capacity(format!(
            "the [0, X^(1-δ)] mean square alone needs {head_work:.3e} evaluations (budget {budget:.3e}); \
             try a smaller X"
        )));
    }
    let head = poly.mean_square_with(0.0, base, &policy)?;
    let mut used = head_work;
    let ceiling = (x as f64) * (x as f64);
    let mut dyadic = Vec::new();
    let mut t = base;
    while t <= ceiling {
        let w = policy.work(&poly, t, 2.0 * t);
        if used + w > budget {
            break;
        }
        used += w;
        let estimate = poly.mean_square_with(t, 2.0 * t, &policy)?;
        dyadic.push(DyadicTerm {
            t,
            term: base / t * estimate.refined_value,
            term_coarse: base / t * estimate.value,
            estimate,
        });
        t *= 2.0;
    }
    let tail_limit = base * poly.weighted_l2();
    let max_fine = dyadic.iter().map(|d| d.term).fold(tail_limit, f64::max);
    let max_coarse = dyadic.iter().map(|d| d.term_coarse).fold(tail_limit, f64::max);
    let rhs = head.refined_value + max_fine;
    let rhs_coarse = head.value + max_coarse;
    let ratio = safe_ratio(lhs, rhs);
    let ratio_coarse = safe_ratio(lhs, rhs_coarse);
    let refinement_change = if ratio == 0.0 {
        (ratio_coarse - ratio).abs()
    } else {
        (ratio_coarse - ratio).abs() / ratio
    };
    let all_accepted = head.accepted && dyadic.iter().all(|d| d.estimate.accepted);
    Ok(Lemma3Comparison {
        x,
        delta,
        h,
        lhs,
        sampled_up_to: dyadic.last().map_or(0.0, |d| d.t),
        dyadic_ceiling: ceiling,
        head,
        dyadic,
        tail_limit,
        rhs,
        rhs_coarse,
        ratio,
        ratio_coarse,
        refinement_change,
        all_accepted,
    })
}

/// A measured integral against the scale it is claimed to be bounded by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTerm {
    pub name: String,
    pub estimate: Option<MeanSquareEstimate>,
    pub measured: f64,
    pub scale: f64,
    pub ratio: f64,
}

impl ChainTerm {
    fn new(name: &str, estimate: Option<MeanSquareEstimate>, scale: f64) -> Self {
        let measured = estimate.as_ref().map_or(0.0, |e| e.refined_value);
        Self {
            name: name.into(),
            estimate,
            measured,
            scale,
            ratio: safe_ratio(measured, scale),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Report {
    pub x: u64,
    pub delta: f64,
    pub t: f64,
    pub t0: f64,
    pub window: (f64, f64),
    pub h_bins: f64,
    pub nonempty_bins: usize,
    /// `∫_0^T |F|²` measured directly.
    pub total: ChainTerm,
    /// `∫_0^{min(T₀,T)} |F|²`.
    pub low_t: ChainTerm,
    /// `∫_{T₀}^T` of the bilinear prime sum.
    pub product: ChainTerm,
    /// `max_j ∫_{T₀}^T |Q_{j,H} F_{j,H}|²` and the bin attaining it.
    pub qf_max: ChainTerm,
    pub qf_argmax: Option<i64>,
    /// `(H log(Q/P))²`.
    pub cauchy_schwarz_factor: f64,
    /// `∫_{T₀}^T` of the rough-number polynomial; scale `(T/X + 1) log P / log Q`.
    pub rough: ChainTerm,
    /// `#{n ∈ [X, 2X] : n rough} / X`.
    pub rough_density: f64,
    /// Scale `(T/X + 1)/H` for both boundary polynomials.
    pub boundary_lower: ChainTerm,
    pub boundary_upper: ChainTerm,
    /// `(log X)^{−(1/3−ε)} (T/X + 1) + T/X^{1−δ/2}`.
    pub lemma4_bound: f64,
    /// `(log X)^{−1/3+ε} (T/X + 1) + (log X)^{12} (T/X^{1−δ/3} + (log X)^{−18})`.
    pub closing_bound: f64,
    pub total_over_lemma4_bound: f64,
    pub total_over_closing_bound: f64,
    pub all_accepted: bool,
}

/// Every term of the bound chain for `∫_0^T |Σ_{n∼X} f(n) n^{−1−it}|² dt`.
pub fn lemma4_chain(config: &PipelineConfig, t: f64) -> Result<Lemma4Report> {
    let x = config.x;
    let xf = x as f64;
    if !(t > 0.0 && t <= xf) {
        return Err(Error::InvalidInput(format!("need 0 < T ≤ X, got T = {t}")));
    }
    let window = config.window()?;
    let (p, q) = (window.lower(), window.upper());
    let policy = config.policy();
    let log_x = config.log_x();
    let t0 = config.t0;

    let audit = RamareAudit::new(x, p, q)?;
    let values = config.values()?;
    let full = coefficient_poly(&values, x)?;
    let ms = |poly: &DirichletPoly, a: f64, b: f64| -> Result<Option<MeanSquareEstimate>> {
        if b <= a {
            Ok(None)
        } else {
            poly.mean_square_with(a, b, &policy).map(Some)
        }
    };
    let growth = t / xf + 1.0;

    let total = ChainTerm::new("total", ms(&full, 0.0, t)?, growth);
    let low_t = ChainTerm::new("low_t", ms(&full, 0.0, t0.min(t))?, log_x.powf(-10.0));

    // Coefficient-level decomposition for general f mirrors the λ case only
    // for λ; other functions report the product and rough terms of λ's
    // identity on their own coefficients' support.
    let bilinear = audit.bilinear_poly()?;
    let product = ChainTerm::new("product", ms(&bilinear, t0, t)?, growth);

    let rough_poly = audit.rough_poly()?;
    let rough_scale = growth * p.ln() / q.ln();
    let rough = ChainTerm::new("rough", ms(&rough_poly, t0, t)?, rough_scale);
    let rough_density = rough_count(x, p, q)? as f64 / xf;

    let split = dyadic_from_audit(&audit, config.h_bins)?;
    let boundary_scale = growth / config.h_bins;
    let boundary_lower = ChainTerm::new("boundary_lower", ms(&split.boundary_lower, t0, t)?, boundary_scale);
    let boundary_upper = ChainTerm::new("boundary_upper", ms(&split.boundary_upper, t0, t)?, boundary_scale);

    let mut qf_best: Option<(i64, MeanSquareEstimate)> = None;
    if t > t0 {
        for factor in &split.factors {
            let prod = product_poly(&factor.primes, &factor.cofactor)?;
            let est = prod.mean_square_with(t0, t, &policy)?;
            if qf_best.as_ref().is_none_or(|(_, b)| est.refined_value > b.refined_value) {
                qf_best = Some((factor.j, est));
            }
        }
    }
    let qf_scale = log_x.powf(-18.0) * (q * t / xf + 1.0);
    let qf_argmax = qf_best.as_ref().map(|(j, _)| *j);
    let qf_max = ChainTerm::new("qf_max", qf_best.map(|(_, e)| e), qf_scale);

    let lemma4_bound = log_x.powf(-(1.0 / 3.0 - config.epsilon)) * growth
        + t / xf.powf(1.0 - config.delta / 2.0);
    let closing_bound = log_x.powf(-1.0 / 3.0 + config.epsilon) * growth
        + log_x.powi(12) * (t / xf.powf(1.0 - config.delta / 3.0) + log_x.powi(-18));

    let all_accepted = [&total, &low_t, &product, &qf_max, &rough, &boundary_lower, &boundary_upper]
        .iter()
        .all(|c| c.estimate.as_ref().is_none_or(|e| e.accepted));

    Ok(Lemma4Report {
        x,
        delta: config.delta,
        t,
        t0,
        window: (p, q),
        h_bins: config.h_bins,
        nonempty_bins: split.factors.len(),
        total_over_lemma4_bound: total.measured / lemma4_bound,
        total_over_closing_bound: total.measured / closing_bound,
        total,
        low_t,
        product,
        qf_max,
        qf_argmax,
        cauchy_schwarz_factor: (config.h_bins * (q / p).ln()).powi(2),
        rough,
        rough_density,
        boundary_lower,
        boundary_upper,
        lemma4_bound,
        closing_bound,
        all_accepted,
    })
}

/// Dirichlet convolution of a prime-bin polynomial and its cofactor polynomial.
fn product_poly(primes: &DirichletPoly, cofactor: &DirichletPoly) -> Result<DirichletPoly> {
    let mut acc = std::collections::BTreeMap::<u64, f64>::new();
    for (p, a) in primes.terms() {
        for (m, b) in cofactor.terms() {
            *acc.entry(p * m).or_default() += a * b;
        }
    }
    DirichletPoly::sparse(acc.into_iter().filter(|&(_, c)| c != 0.0).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub subtract_mean: bool,
    /// Lemma-3 columns are filled for `X ≤ lemma3_max_x`.
    pub lemma3_max_x: u64,
    /// `T` values for the mean-value ratio column.
    pub mvt_ts: Vec<f64>,
    /// Mean-value ratio column is filled for `X ≤ mvt_max_x`.
    pub mvt_max_x: u64,
    pub t_budget: f64,
    /// Record wall time per row. Off by default so that reruns are byte-identical.
    pub timings: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            subtract_mean: false,
            lemma3_max_x: 10_000,
            mvt_ts: vec![100.0, 1000.0],
            mvt_max_x: 10_000,
            t_budget: DEFAULT_T_BUDGET,
            timings: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub x: u64,
    pub delta: f64,
    pub h: u64,
    pub mean: f64,
    pub variance: f64,
    /// `variance · (log X)^{1/3}`.
    pub variance_log_scaled: f64,
    pub threshold: f64,
    pub exceptional_fraction: f64,
    pub chebyshev_bound: f64,
    pub lhs_lemma3: Option<f64>,
    pub rhs_lemma3_estimate: Option<f64>,
    pub lemma3_ratio: Option<f64>,
    pub mvt_ratio_max: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTrend {
    pub delta: f64,
    pub variance_decreasing: bool,
    pub exceptional_decreasing: bool,
    /// Largest step-to-step growth of `variance · (log X)^{1/3}`.
    pub max_scaled_growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub function: MultiplicativeFunction,
    pub options: StudyOptions,
    pub rows: Vec<StudyRow>,
    pub trends: Vec<DeltaTrend>,
    /// Invariant violations; empty on a clean run.
    pub flags: Vec<String>,
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// One row per `(X, δ)`, rows sorted by `X` then `δ`.
pub fn scaling_study(
    deltas: &[f64],
    xs: &[u64],
    f: &MultiplicativeFunction,
    options: &StudyOptions,
) -> Result<ScalingStudy> {
    if deltas.is_empty() || xs.is_empty() {
        return Err(Error::InvalidInput("study needs at least one X and one delta".into()));
    }
    let mut xs = xs.to_vec();
    xs.sort_unstable();
    xs.dedup();
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    for &d in &deltas {
        window_length(2, d)?;
    }

    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for &x in &xs {
        if x < 2 {
            return Err(Error::InvalidInput(format!("X must be at least 2, got {x}")));
        }
        for &delta in &deltas {
            let started = Instant::now();
            let row = study_row(f, x, delta, options, &mut flags)?;
            let seconds = options.timings.then(|| started.elapsed().as_secs_f64());
            rows.push(StudyRow { seconds, ..row });
        }
    }

    let trends = deltas
        .iter()
        .map(|&delta| {
            let sel: Vec<&StudyRow> = rows.iter().filter(|r| r.delta == delta).collect();
            let v: Vec<f64> = sel.iter().map(|r| r.variance).collect();
            let e: Vec<f64> = sel.iter().map(|r| r.exceptional_fraction).collect();
            let max_scaled_growth = sel
                .windows(2)
                .map(|w| w[1].variance_log_scaled / w[0].variance_log_scaled)
                .fold(f64::NEG_INFINITY, f64::max);
            DeltaTrend {
                delta,
                variance_decreasing: strictly_decreasing(&v),
                exceptional_decreasing: strictly_decreasing(&e),
                max_scaled_growth,
            }
        })
        .collect();

    Ok(ScalingStudy {
        function: f.clone(),
        options: options.clone(),
        rows,
        trends,
        flags,
    })
}

fn study_row(
    f: &MultiplicativeFunction,
    x: u64,
    delta: f64,
    options: &StudyOptions,
    flags: &mut Vec<String>,
) -> Result<StudyRow> {
    let h = window_length(x, delta)?;
    let values = ValueSeries::evaluate(f, x..2 * x + h + 1)?;
    let mean = values.mean_over(x)?;
    let mut series = sliding_sums(&values, x, h)?.with_delta(delta);
    if options.subtract_mean {
        series = series.with_mean(mean);
    }
    let threshold = default_threshold(x);
    let report = compute_variance_at(&series, threshold)?;
    drop(series);
    if !report.chebyshev_holds() {
        flags.push(format!("X={x} delta={delta}: Chebyshev bound violated"));
    }

    let (lhs_lemma3, rhs_lemma3_estimate, lemma3_ratio) = if x <= options.lemma3_max_x {
        let cmp = lemma3_compare_values(&values, x, delta, options.subtract_mean, options.t_budget)?;
        if !cmp.all_accepted {
            flags.push(format!("X={x} delta={delta}: mean-square refinement gap above 1%"));
        }
        (Some(cmp.lhs), Some(cmp.rhs), Some(cmp.ratio))
    } else {
        (None, None, None)
    };

    let mvt_ratio_max = if x <= options.mvt_max_x && !options.mvt_ts.is_empty() {
        let poly = coefficient_poly(&values, x)?;
        let policy = GridPolicy {
            max_work: options.t_budget,
            ..GridPolicy::default()
        };
        let mut best = 0.0f64;
        for &t in &options.mvt_ts {
            best = best.max(poly.mvt_ratio_with(t, &policy)?);
        }
        Some(best)
    } else {
        None
    };

    let row = StudyRow {
        x,
        delta,
        h,
        mean,
        variance: report.variance,
        variance_log_scaled: report.variance * (x as f64).ln().powf(1.0 / 3.0),
        threshold,
        exceptional_fraction: report.exceptional_fraction,
        chebyshev_bound: report.chebyshev_bound(),
        lhs_lemma3,
        rhs_lemma3_estimate,
        lemma3_ratio,
        mvt_ratio_max,
        seconds: None,
    };
    let finite = [row.variance, row.variance_log_scaled, row.exceptional_fraction, row.mean]
        .into_iter()
        .chain(row.lhs_lemma3)
        .chain(row.rhs_lemma3_estimate)
        .chain(row.lemma3_ratio)
        .chain(row.mvt_ratio_max)
        .all(f64::is_finite);
    if !finite {
        flags.push(format!("X={x} delta={delta}: non-finite entry"));
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_is_refused_at_desk_scale() {
        let c = PipelineConfig::new(100_000, 0.5).unwrap();
        let err = c.window().unwrap_err().to_string();
        assert!(err.contains("--force-window"), "{err}");
        assert!(c.clone().with_window(10.0, 46.0).window().is_ok());
        assert!(PipelineConfig::new(100_000, 1.5).is_err());
    }

    #[test]
    fn t0_is_capped() {
        let c = PipelineConfig::new(100_000, 0.5).unwrap();
        assert!((c.t0 - 100_000f64.sqrt() / 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_coefficients_give_zero_sides() {
        let x = 1000;
        let values = ValueSeries::new(x, vec![0.0; (x + 40) as usize]);
        let cmp = lemma3_compare_values(&values, x, 0.5, false, DEFAULT_T_BUDGET).unwrap();
        assert_eq!(cmp.lhs, 0.0);
        assert_eq!(cmp.rhs, 0.0);
        assert_eq!(cmp.ratio, 0.0);
    }

    #[test]
    fn product_poly_is_convolution() {
        let a = DirichletPoly::sparse(vec![(2, 1.0), (3, 1.0)]).unwrap();
        let b = DirichletPoly::dense(5, vec![0.5, -0.5]).unwrap();
        let c = product_poly(&a, &b).unwrap();
        for t in [0.0, 1.3, 40.0] {
            assert!((c.eval(t) - a.eval(t) * b.eval(t)).norm() < 1e-14);
        }
    }

    #[test]
    fn chain_with_t_below_t0_has_empty_product() {
        let c = PipelineConfig::new(10_000, 0.5).unwrap().with_window(5.0, 20.0);
        let r = lemma4_chain(&c, c.t0 / 2.0).unwrap();
        assert!(r.product.estimate.is_none());
        assert_eq!(r.product.measured, 0.0);
        assert!(r.low_t.measured > 0.0);
        assert!((r.low_t.measured - r.total.measured).abs() <= 1e-12 * r.total.measured);
    }
}
