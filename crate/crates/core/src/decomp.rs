//! Ramaré-type decomposition of `Σ_{n∼X} λ(n) n^{−1−it}` and the short-range
//! splitting of its bilinear part.
//!
//! With `W = [P, Q]`, `ω_W(m) = #{p ∈ W : p | m}` and `a_m = λ(m)/(ω_W(m)+1)`:
//!
//! ```text
//! Σ_{X≤n≤2X} λ(n)/n^s = Σ_{p∈W} λ(p)/p^s Σ_{X≤mp≤2X} a_m/m^s      (main)
//!                     + Σ_{X≤n≤2X, (n, W)=1} λ(n)/n^s               (rough)
//!                     + residual
//! ```
//!
//! Per integer `n` the main term carries weight `Σ_{p|n, p∈W} 1/(ω_W(n/p)+1)`,
//! which is exactly 1 when the window part of `n` is squarefree. The residual
//! is computed from these weights in exact rational arithmetic (common
//! denominator [`WEIGHT_DENOM`]) and is supported on `n` with `p² | n` for a
//! window prime `p`.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{DirichletPoly, GridPolicy};
use crate::error::{Error, Result};
use crate::sieve::{FactorBlock, PrimeWindow, Sieve, SieveConfig};
use crate::sum::ComplexNeumaier;

/// `lcm(1, …, 16)`. An integer below 2^63 has at most 15 distinct prime
/// factors, so every weight `1/(ω+1)` is an integer multiple of `1/WEIGHT_DENOM`.
pub const WEIGHT_DENOM: i64 = 720_720;

/// Largest number of `j`-bins a split may span.
pub const MAX_BINS: u64 = 100_000_000;

/// `Σ_{X ≤ n ≤ 2X} λ(n) n^{−s}` as a dense polynomial.
pub fn liouville_poly(x: u64) -> Result<DirichletPoly> {
    let block = Sieve::with_bound(SieveConfig::default(), 2 * x + 1)?.sieve_block(x..2 * x + 1)?;
    DirichletPoly::dense(x, block.lambda.iter().map(|&l| l as f64).collect())
}

fn check_setup(x: u64, p: f64, q: f64) -> Result<PrimeWindow> {
    let window = PrimeWindow::new(p, q)?;
    if x < 1 {
        return Err(Error::InvalidInput("X must be positive".into()));
    }
    if q > 2.0 * x as f64 {
        return Err(Error::InvalidInput(format!("Q = {q} exceeds 2X = {}", 2 * x)));
    }
    Ok(window)
}

/// Per-integer accounting on `[X, 2X]` shared by the decompositions.
#[derive(Clone, Debug)]
pub struct RamareAudit {
    pub x: u64,
    pub window: PrimeWindow,
    pub window_primes: Vec<u64>,
    /// Arithmetic data on `[X, 2X]`.
    pub block: FactorBlock,
    /// Arithmetic data on the `m` range `[⌈X/p_max⌉, ⌊2X/p_min⌋]`.
    pub cofactors: FactorBlock,
    /// `WEIGHT_DENOM · Σ_{p|n, p∈W} 1/(ω_W(n/p)+1)` for each `n ∈ [X, 2X]`.
    pub weight_num: Vec<i64>,
}

impl RamareAudit {
    pub fn new(x: u64, p: f64, q: f64) -> Result<Self> {
        let window = check_setup(x, p, q)?;
        let sieve = Sieve::with_bound(SieveConfig::with_window(window), 2 * x + 1)?;
        let block = sieve.sieve_block(x..2 * x + 1)?;
        let window_primes = crate::sieve::primes_in(p, q)?;
        let (m_lo, m_hi) = match (window_primes.first(), window_primes.last()) {
            (Some(&pmin), Some(&pmax)) => (x.div_ceil(pmax).max(1), (2 * x) / pmin),
            _ => (1, 0),
        };
        let cofactors = sieve.sieve_block(m_lo..m_hi + 1)?;
        let mut weight_num = vec![0i64; (x + 1) as usize];
        for &prime in &window_primes {
            for m in x.div_ceil(prime)..=(2 * x) / prime {
                let w = WEIGHT_DENOM / (cofactors.window_omega_at(m) as i64 + 1);
                weight_num[(m * prime - x) as usize] += w;
            }
        }
        Ok(Self {
            x,
            window,
            window_primes,
            block,
            cofactors,
            weight_num,
        })
    }

    /// `a_m = λ(m)/(ω_W(m)+1)`.
    pub fn a(&self, m: u64) -> f64 {
        self.cofactors.lambda_at(m) as f64 / (self.cofactors.window_omega_at(m) as f64 + 1.0)
    }

    /// `WEIGHT_DENOM · (1 − [n rough] − weight(n))`; exact.
    pub fn residual_num(&self, n: u64) -> i64 {
        let i = (n - self.x) as usize;
        let covered = if self.block.window_omega[i] > 0 { WEIGHT_DENOM } else { 0 };
        covered - self.weight_num[i]
    }

    /// Integers whose residual weight is non-zero.
    pub fn residual_support(&self) -> impl Iterator<Item = u64> + '_ {
        (self.x..=2 * self.x).filter(|&n| self.residual_num(n) != 0)
    }

    pub fn lhs_poly(&self) -> Result<DirichletPoly> {
        DirichletPoly::dense(self.x, self.block.lambda.iter().map(|&l| l as f64).collect())
    }

    pub fn rough_poly(&self) -> Result<DirichletPoly> {
        let coeffs = self
            .block
            .lambda
            .iter()
            .zip(&self.block.window_omega)
            .map(|(&l, &w)| if w == 0 { l as f64 } else { 0.0 })
            .collect();
        DirichletPoly::dense(self.x, coeffs)
    }

    pub fn residual_poly(&self) -> Result<DirichletPoly> {
        let coeffs = (self.x..=2 * self.x)
            .map(|n| {
                let r = self.residual_num(n);
                if r == 0 {
                    0.0
                } else {
                    self.block.lambda_at(n) as f64 * r as f64 / WEIGHT_DENOM as f64
                }
            })
            .collect();
        DirichletPoly::dense(self.x, coeffs)
    }

    /// `Σ_{p∈W} p^{−s} Σ_{X≤mp≤2X} a_m m^{−s}` collected by `n = mp`
    /// (no `λ(p)` factor; the main term is its negative).
    pub fn bilinear_poly(&self) -> Result<DirichletPoly> {
        let coeffs = (self.x..=2 * self.x)
            .map(|n| {
                let i = (n - self.x) as usize;
                -(self.block.lambda[i] as f64) * self.weight_num[i] as f64 / WEIGHT_DENOM as f64
            })
            .collect();
        DirichletPoly::dense(self.x, coeffs)
    }

    /// Main term at `t` by the double loop over `p` and `m`.
    ///
    /// Each term is evaluated as `(mp)^{−1−it}` rather than as the product of
    /// two separately rounded phases: at `t ~ 10³` those differ by ~1e-12.
    pub fn main_term(&self, t: f64) -> Complex64 {
        let mut outer = ComplexNeumaier::new();
        for &p in &self.window_primes {
            let mut inner = ComplexNeumaier::new();
            for m in self.x.div_ceil(p)..=(2 * self.x) / p {
                inner.add(self.a(m) * n_pow(m * p, t));
            }
            // λ(p) = −1
            outer.add(-inner.value());
        }
        outer.value()
    }
}

/// `n^{−1−it}`.
#[inline]
fn n_pow(n: u64, t: f64) -> Complex64 {
    let (s, c) = (t * (n as f64).ln()).sin_cos();
    Complex64::new(c, -s) / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamareDecomposition {
    pub x: u64,
    pub window: (f64, f64),
    pub t: f64,
    pub lhs: Complex64,
    pub main: Complex64,
    pub rough: Complex64,
    /// Computed from the exact per-integer weights, independently of the other three.
    pub residual: Complex64,
    /// `|lhs − main − rough − residual|`.
    pub closure_error: f64,
    /// Integers with a non-zero residual weight.
    pub residual_support_count: u64,
    /// Integers with a non-zero residual weight but no window prime square
    /// dividing them; zero whenever the identity accounting is correct.
    pub residual_support_violations: u64,
}

impl RamareDecomposition {
    /// Closure error relative to the largest of the four components.
    pub fn relative_closure(&self) -> f64 {
        let scale = [self.lhs, self.main, self.rough, self.residual]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            self.closure_error
        } else {
            self.closure_error / scale
        }
    }
}

pub fn ramare_decompose(x: u64, p: f64, q: f64, t: f64) -> Result<RamareDecomposition> {
    let audit = RamareAudit::new(x, p, q)?;
    Ok(ramare_from_audit(&audit, t))
}

pub fn ramare_from_audit(audit: &RamareAudit, t: f64) -> RamareDecomposition {
    let x = audit.x;
    let mut lhs = ComplexNeumaier::new();
    let mut rough = ComplexNeumaier::new();
    let mut residual = ComplexNeumaier::new();
    let mut support = 0;
    let mut violations = 0;
    for n in x..=2 * x {
        let i = (n - x) as usize;
        let lam = audit.block.lambda[i] as f64;
        let z = lam * n_pow(n, t);
        lhs.add(z);
        if audit.block.window_omega[i] == 0 {
            rough.add(z);
        }
        let r = audit.residual_num(n);
        if r != 0 {
            support += 1;
            if !audit.block.window_square_flag[i] {
                violations += 1;
            }
            residual.add(z * (r as f64 / WEIGHT_DENOM as f64));
        }
    }
    let (lhs, rough, residual) = (lhs.value(), rough.value(), residual.value());
    let main = audit.main_term(t);
    RamareDecomposition {
        x,
        window: (audit.window.lower(), audit.window.upper()),
        t,
        lhs,
        main,
        rough,
        residual,
        closure_error: (lhs - main - rough - residual).norm(),
        residual_support_count: support,
        residual_support_violations: violations,
    }
}

/// One `j`-bin: primes in `[e^{j/H}, e^{(j+1)/H}) ∩ [P, Q]` and the matching
/// `m`-polynomial over `[X e^{−(j+1)/H}, 2X e^{−j/H}]` with coefficients `a_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicFactor {
    pub j: i64,
    pub primes: DirichletPoly,
    pub cofactor: DirichletPoly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicSplit {
    pub x: u64,
    pub window: PrimeWindow,
    pub h: f64,
    pub j_range: (i64, i64),
    /// Bins that contain at least one prime, in increasing `j`.
    pub factors: Vec<DyadicFactor>,
    /// Over-count weights `d_m` for `m < X`.
    pub boundary_lower: DirichletPoly,
    /// Over-count weights `d_m` for `m > 2X`.
    pub boundary_upper: DirichletPoly,
}

impl DyadicSplit {
    /// `Σ_j Q_{j,H} F_{j,H} − boundary_lower − boundary_upper` at `1 + it`.
    pub fn reconstruct(&self, t: f64) -> Complex64 {
        let mut acc = ComplexNeumaier::new();
        for f in &self.factors {
            acc.add(f.primes.eval(t) * f.cofactor.eval(t));
        }
        acc.add(-self.boundary_lower.eval(t));
        acc.add(-self.boundary_upper.eval(t));
        acc.value()
    }

    pub fn bin_count(&self) -> u64 {
        (self.j_range.1 - self.j_range.0 + 1) as u64
    }

    /// Largest `|d_m|` over both boundary polynomials.
    pub fn max_boundary_coeff(&self) -> f64 {
        self.boundary_lower
            .terms()
            .chain(self.boundary_upper.terms())
            .map(|(_, d)| d.abs())
            .fold(0.0, f64::max)
    }

    /// The range `Q_{j,H}` covers, before intersecting with `[P, Q]`.
    pub fn bin_bounds(&self, j: i64) -> (f64, f64) {
        ((j as f64 / self.h).exp(), ((j + 1) as f64 / self.h).exp())
    }
}

/// Bin index of a prime: the `j` with `e^{j/H} ≤ p < e^{(j+1)/H}`.
fn bin_of(p: u64, h: f64) -> i64 {
    let mut j = (h * (p as f64).ln()).floor() as i64;
    // Correct a last-ulp misassignment so that the bins partition exactly.
    while ((j as f64) / h).exp() > p as f64 {
        j -= 1;
    }
    while (((j + 1) as f64) / h).exp() <= p as f64 {
        j += 1;
    }
    j
}

pub fn dyadic_split(x: u64, p: f64, q: f64, h: f64) -> Result<DyadicSplit> {
    let audit = RamareAudit::new(x, p, q)?;
    dyadic_from_audit(&audit, h)
}

pub fn dyadic_from_audit(audit: &RamareAudit, h: f64) -> Result<DyadicSplit> {
    if !(h >= 1.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("H must be at least 1, got {h}")));
    }
    let x = audit.x;
    let window = audit.window;
    let j_lo = (h * window.lower().ln()).floor() as i64;
    let j_hi = (h * window.upper().ln()).ceil() as i64;
    if (j_hi - j_lo + 1) as u64 > MAX_BINS {
        return Err(Error::Capacity(format!(
            "{} j-bins exceed the limit of {MAX_BINS}; use a smaller H",
            j_hi - j_lo + 1
        )));
    }

    let mut bins: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
    for &prime in &audit.window_primes {
        bins.entry(bin_of(prime, h)).or_default().push(prime);
    }

    // Cofactor arithmetic over the union of all m-ranges.
    let mut ranges = Vec::with_capacity(bins.len());
    for (&j, primes) in &bins {
        let pmin = primes[0] as f64;
        let pmax = *primes.last().unwrap() as f64;
        let lo_nominal = (x as f64 * (-((j + 1) as f64) / h).exp()).ceil();
        let hi_nominal = (2.0 * x as f64 * (-(j as f64) / h).exp()).floor();
        // Every m with X ≤ mp ≤ 2X for a bin prime must be included.
        let lo = lo_nominal.min((x as f64 / pmax).ceil()).max(1.0) as u64;
        let hi = hi_nominal.max((2.0 * x as f64 / pmin).floor()) as u64;
        ranges.push((j, lo..=hi));
    }
    let m_min = ranges.iter().map(|(_, r)| *r.start()).min().unwrap_or(1);
    let m_max = ranges.iter().map(|(_, r)| *r.end()).max().unwrap_or(0);
    let sieve = Sieve::with_bound(SieveConfig::with_window(window), m_max + 1)?;
    let mblock = sieve.sieve_block(m_min..m_max + 1)?;
    let a = |m: u64| mblock.lambda_at(m) as f64 / (mblock.window_omega_at(m) as f64 + 1.0);

    let mut lower: BTreeMap<u64, f64> = BTreeMap::new();
    let mut upper: BTreeMap<u64, f64> = BTreeMap::new();
    let mut factors = Vec::with_capacity(bins.len());
    for (j, mrange) in ranges {
        let primes = &bins[&j];
        for &prime in primes {
            for m in mrange.clone() {
                let n = prime * m;
                if n < x {
                    *lower.entry(n).or_default() += a(m);
                } else if n > 2 * x {
                    *upper.entry(n).or_default() += a(m);
                }
            }
        }
        factors.push(DyadicFactor {
            j,
            primes: DirichletPoly::sparse(primes.iter().map(|&p| (p, 1.0)).collect())?,
            cofactor: dense_over(mrange, a)?,
        });
    }

    let to_poly = |m: BTreeMap<u64, f64>| {
        DirichletPoly::sparse(m.into_iter().filter(|&(_, d)| d != 0.0).collect())
    };
    Ok(DyadicSplit {
        x,
        window,
        h,
        j_range: (j_lo, j_hi),
        factors,
        boundary_lower: to_poly(lower)?,
        boundary_upper: to_poly(upper)?,
    })
}

fn dense_over(range: RangeInclusive<u64>, a: impl Fn(u64) -> f64) -> Result<DirichletPoly> {
    if range.is_empty() {
        return Ok(DirichletPoly::zero());
    }
    let lo = *range.start();
    DirichletPoly::dense(lo, range.map(a).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSup {
    pub j: i64,
    pub primes: usize,
    pub sup: f64,
    pub t_at_sup: f64,
}

/// Sampled `sup_{T₀ ≤ t ≤ T} |Q_{j,H}(1+it)|` for every non-empty bin.
pub fn qjh_sup_profile(split: &DyadicSplit, x: u64, t0: f64, t: f64) -> Result<Vec<BinSup>> {
    if !(t0 < t && t <= x as f64) {
        return Err(Error::InvalidInput(format!("need T0 < T ≤ X, got T0 = {t0}, T = {t}")));
    }
    let policy = GridPolicy::default();
    split
        .factors
        .iter()
        .map(|f| {
            let (t_at_sup, sup) = f.primes.sampled_sup(t0, t, &policy)?;
            Ok(BinSup {
                j: f.j,
                primes: f.primes.nnz(),
                sup,
                t_at_sup,
            })
        })
        .collect()
}
