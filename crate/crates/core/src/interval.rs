//! Short-interval sums and their statistics over `[X, 2X]`.
//!
//! For integer `h` the map `x ↦ Σ_{x ≤ n ≤ x+h} f(n)` is constant on each
//! open interval `(k, k+1)`, where it equals
//! `S(k) = Σ_{k+1 ≤ n ≤ k+h} f(n)`. Integrals over `x ∈ [X, 2X]` are therefore
//! finite sums over `k ∈ [X, 2X)` and are computed without quadrature.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multfunc::{mean_of_values, MultiplicativeFunction};
use crate::sieve::{Sieve, SieveConfig};
use crate::sum::Neumaier;

/// Reduction chunk; fixed so that results do not depend on the thread count.
const CHUNK: usize = 1 << 16;

/// `values[i] = f(start + i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueSeries {
    pub start: u64,
    pub values: Vec<f64>,
    /// Set when every value is an integer; enables exact means.
    pub integer_valued: bool,
}

impl ValueSeries {
    pub fn new(start: u64, values: Vec<f64>) -> Self {
        let integer_valued = values.iter().all(|v| v.fract() == 0.0);
        Self {
            start,
            values,
            integer_valued,
        }
    }

    /// Evaluates `f` on `range`.
    pub fn evaluate(f: &MultiplicativeFunction, range: Range<u64>) -> Result<Self> {
        let sieve = Sieve::with_bound(SieveConfig::default(), range.end)?;
        Self::evaluate_with(f, &sieve, range)
    }

    pub fn evaluate_with(f: &MultiplicativeFunction, sieve: &Sieve, range: Range<u64>) -> Result<Self> {
        let values = f.evaluate_range(sieve, range.clone())?;
        Ok(Self {
            start: range.start,
            values,
            integer_valued: f.is_integer_valued(),
        })
    }

    /// Exclusive end of the covered range.
    pub fn end(&self) -> u64 {
        self.start + self.values.len() as u64
    }

    pub fn at(&self, n: u64) -> f64 {
        self.values[(n - self.start) as usize]
    }

    pub fn slice(&self, range: Range<u64>) -> Result<&[f64]> {
        if range.start < self.start || range.end > self.end() {
            return Err(Error::Range(format!(
                "values cover [{}, {}) but [{}, {}) is needed",
                self.start,
                self.end(),
                range.start,
                range.end
            )));
        }
        Ok(&self.values[(range.start - self.start) as usize..(range.end - self.start) as usize])
    }

    /// `(1/X) Σ_{X ≤ n ≤ 2X} f(n)`.
    pub fn mean_over(&self, x: u64) -> Result<f64> {
        let vals = self.slice(x..2 * x + 1)?;
        Ok(mean_of_values(vals, x, self.integer_valued))
    }
}

/// `h = ⌊X^δ⌋`, snapped to the nearest integer when `X^δ` is within rounding
/// of one (so that `10^6` with `δ = 1/2` gives 1000, not 999).
pub fn window_length(x: u64, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput("delta must be in (0,1)".into()));
    }
    let r = (x as f64).powf(delta);
    let nearest = r.round();
    let h = if (r - nearest).abs() <= 1e-9 * r.max(1.0) {
        nearest
    } else {
        r.floor()
    };
    Ok((h as u64).max(1))
}

/// `S(k) = Σ_{k+1 ≤ n ≤ k+h} f(n)` for `k ∈ [X, 2X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSumSeries {
    pub x: u64,
    pub h: u64,
    pub delta: f64,
    pub sums: Vec<f64>,
    pub subtract_mean: bool,
    pub mean: f64,
}

impl IntervalSumSeries {
    /// Subtracts `mean` from every normalized window average in later statistics.
    pub fn with_mean(mut self, mean: f64) -> Self {
        self.subtract_mean = true;
        self.mean = mean;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    fn centre(&self) -> f64 {
        if self.subtract_mean {
            self.mean
        } else {
            0.0
        }
    }

    /// `|(1/h) S(k) − m|` for the `i`-th window (`k = X + i`).
    #[inline]
    pub fn deviation(&self, i: usize) -> f64 {
        (self.sums[i] / self.h as f64 - self.centre()).abs()
    }

    /// Largest `|S(k) − direct sum|` over `samples` random windows.
    pub fn spot_check(&self, values: &ValueSeries, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let i = rng.random_range(0..self.sums.len());
            let k = self.x + i as u64;
            let direct: Neumaier = values.slice(k + 1..k + self.h + 1)?.iter().copied().collect();
            worst = worst.max((direct.value() - self.sums[i]).abs());
        }
        Ok(worst)
    }
}

/// Sliding-window sums over `[X, 2X)` from values covering `[X+1, 2X+h]`.
///
/// Uses `S(k+1) = S(k) + f(k+1+h) − f(k+1)` with a compensated running sum;
/// integer-valued inputs are exact.
pub fn sliding_sums(values: &ValueSeries, x: u64, h: u64) -> Result<IntervalSumSeries> {
    if h == 0 {
        return Err(Error::InvalidInput("window length h must be at least 1".into()));
    }
    if x == 0 {
        return Err(Error::InvalidInput("X must be positive".into()));
    }
    let vals = values.slice(x + 1..2 * x + h + 1)?;
    let h_us = h as usize;
    let mut sums = Vec::with_capacity(x as usize);
    let mut acc: Neumaier = vals[..h_us].iter().copied().collect();
    sums.push(acc.value());
    for i in 1..x as usize {
        acc.add(vals[i - 1 + h_us]);
        acc.add(-vals[i - 1]);
        sums.push(acc.value());
    }
    let delta = if x > 1 { (h as f64).ln() / (x as f64).ln() } else { 0.0 };
    Ok(IntervalSumSeries {
        x,
        h,
        delta,
        sums,
        subtract_mean: false,
        mean: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub x: u64,
    pub delta: f64,
    pub h: u64,
    pub subtract_mean: bool,
    pub mean: f64,
    pub variance: f64,
    pub threshold: f64,
    pub exceptional_fraction: f64,
}

impl VarianceReport {
    /// Chebyshev: the exceptional fraction never exceeds `V / θ²`.
    pub fn chebyshev_holds(&self) -> bool {
        self.exceptional_fraction <= self.variance / (self.threshold * self.threshold)
    }

    pub fn chebyshev_bound(&self) -> f64 {
        self.variance / (self.threshold * self.threshold)
    }
}

/// Threshold of the exceptional set: `(log X)^{−1/9}`.
pub fn default_threshold(x: u64) -> f64 {
    (x as f64).ln().powf(-1.0 / 9.0)
}

/// Exact `(1/X) Σ_{k=X}^{2X−1} |(1/h) S(k) − m|²`, with the exceptional
/// fraction at the default threshold.
pub fn compute_variance(series: &IntervalSumSeries) -> VarianceReport {
    compute_variance_at(series, default_threshold(series.x))
        .expect("default threshold is positive")
}

pub fn compute_variance_at(series: &IntervalSumSeries, threshold: f64) -> Result<VarianceReport> {
    let exceptional_fraction = exceptional_measure(series, threshold)?;
    let partials: Vec<f64> = series
        .sums
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * CHUNK;
            (0..chunk.len())
                .map(|i| {
                    let d = series.deviation(base + i);
                    d * d
                })
                .collect::<Neumaier>()
                .value()
        })
        .collect();
    let total: Neumaier = partials.into_iter().collect();
    Ok(VarianceReport {
        x: series.x,
        delta: series.delta,
        h: series.h,
        subtract_mean: series.subtract_mean,
        mean: series.mean,
        variance: total.value() / series.x as f64,
        threshold,
        exceptional_fraction,
    })
}

/// Fraction of `k ∈ [X, 2X)` with `|(1/h) S(k) − m| ≥ threshold`.
pub fn exceptional_measure(series: &IntervalSumSeries, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be positive, got {threshold}")));
    }
    let count: usize = series
        .sums
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            (0..chunk.len())
                .filter(|&i| series.deviation(c * CHUNK + i) >= threshold)
                .count()
        })
        .sum();
    Ok(count as f64 / series.x as f64)
}

/// Variance report for `f` at `(X, δ)`; values are sieved over `[X, 2X + h]`.
pub fn variance_for(
    f: &MultiplicativeFunction,
    x: u64,
    delta: f64,
    subtract_mean: bool,
) -> Result<VarianceReport> {
    let h = window_length(x, delta)?;
    let values = ValueSeries::evaluate(f, x..2 * x + h + 1)?;
    let mut series = sliding_sums(&values, x, h)?.with_delta(delta);
    if subtract_mean {
        series = series.with_mean(values.mean_over(x)?);
    }
    Ok(compute_variance(&series))
}
