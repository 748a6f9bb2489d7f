//! Dirichlet polynomials `F(1+it) = Σ a_n n^{−1−it}` with real coefficients.
//!
//! Single points are evaluated with compensated summation. Uniform `t` grids
//! use a phasor recurrence: for `t_k = t₀ + kΔ`, `n^{−it_k}` is advanced by the
//! fixed rotation `n^{−iΔ}`, restarting from an exact `sin_cos` every
//! [`GRID_CHUNK`] points. Grid chunks are independent, so the output is the
//! same for any number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sieve::primes_in;
use crate::sum::{ComplexNeumaier, Neumaier};

/// Grid points per independently seeded chunk.
pub const GRID_CHUNK: usize = 256;
const TERM_BLOCK: usize = 512;
const LANES: usize = 8;
const COEFF_TOL: f64 = 1e-12;

/// Estimates with a refinement gap above this are flagged.
pub const MAX_REL_GAP: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
enum Terms {
    /// `coeffs[i] = a_{lower + i}`.
    Dense(Vec<f64>),
    /// Ascending `(n, a_n)`.
    Sparse(Vec<(u64, f64)>),
}

/// Real-coefficient Dirichlet polynomial supported on `[lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletPoly {
    lower: u64,
    upper: u64,
    terms: Terms,
}

fn check_coeffs<'a>(it: impl Iterator<Item = &'a f64>) -> Result<()> {
    for &a in it {
        if !a.is_finite() || a.abs() > 1.0 + COEFF_TOL {
            return Err(Error::InvalidInput(format!("coefficient {a} is outside [-1, 1]")));
        }
    }
    Ok(())
}

impl DirichletPoly {
    /// Dense coefficients `a_{lower}, a_{lower+1}, …`.
    pub fn dense(lower: u64, coeffs: Vec<f64>) -> Result<Self> {
        if lower == 0 {
            return Err(Error::InvalidInput("support must start at n ≥ 1".into()));
        }
        check_coeffs(coeffs.iter())?;
        let upper = lower + (coeffs.len() as u64).saturating_sub(1);
        Ok(Self {
            lower,
            upper,
            terms: Terms::Dense(coeffs),
        })
    }

    /// Sparse `(n, a_n)` pairs; `n` must be strictly increasing.
    pub fn sparse(pairs: Vec<(u64, f64)>) -> Result<Self> {
        check_coeffs(pairs.iter().map(|(_, a)| a))?;
        if pairs.first().is_some_and(|&(n, _)| n == 0) {
            return Err(Error::InvalidInput("support must start at n ≥ 1".into()));
        }
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("sparse indices must be strictly increasing".into()));
        }
        let lower = pairs.first().map_or(1, |p| p.0);
        let upper = pairs.last().map_or(1, |p| p.0);
        Ok(Self {
            lower,
            upper,
            terms: Terms::Sparse(pairs),
        })
    }

    pub fn zero() -> Self {
        Self {
            lower: 1,
            upper: 1,
            terms: Terms::Sparse(Vec::new()),
        }
    }

    pub fn lower(&self) -> u64 {
        self.lower
    }

    pub fn upper(&self) -> u64 {
        self.upper
    }

    /// Non-zero terms in ascending order.
    pub fn terms(&self) -> Box<dyn Iterator<Item = (u64, f64)> + '_> {
        match &self.terms {
            Terms::Dense(c) => Box::new(
                c.iter()
                    .enumerate()
                    .filter(|(_, &a)| a != 0.0)
                    .map(move |(i, &a)| (self.lower + i as u64, a)),
            ),
            Terms::Sparse(p) => Box::new(p.iter().copied().filter(|&(_, a)| a != 0.0)),
        }
    }

    pub fn nnz(&self) -> usize {
        self.terms().count()
    }

    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    /// `a_n` (zero outside the support).
    pub fn coeff(&self, n: u64) -> f64 {
        match &self.terms {
            Terms::Dense(c) => {
                if n < self.lower || n > self.upper {
                    0.0
                } else {
                    c[(n - self.lower) as usize]
                }
            }
            Terms::Sparse(p) => p
                .binary_search_by_key(&n, |&(m, _)| m)
                .map_or(0.0, |i| p[i].1),
        }
    }

    /// `Σ |a_n| / n`, the trivial bound on `|F(1+it)|`.
    pub fn l1_norm(&self) -> f64 {
        self.terms().map(|(n, a)| a.abs() / n as f64).collect::<Neumaier>().value()
    }

    /// `Σ a_n² / n²`.
    pub fn weighted_l2(&self) -> f64 {
        self.terms()
            .map(|(n, a)| {
                let b = a / n as f64;
                b * b
            })
            .collect::<Neumaier>()
            .value()
    }

    /// `F(1+it)`.
    pub fn eval(&self, t: f64) -> Complex64 {
        let mut acc = ComplexNeumaier::new();
        for (n, a) in self.terms() {
            let ln = (n as f64).ln();
            let (s, c) = (t * ln).sin_cos();
            let w = a / n as f64;
            acc.add(Complex64::new(w * c, -w * s));
        }
        acc.value()
    }

    /// `F(1 + i(t₀ + kΔ))` for `k = 0, …, count − 1`.
    pub fn eval_grid(&self, t0: f64, dt: f64, count: usize) -> Vec<Complex64> {
        let logs: Vec<f64>;
        let weights: Vec<f64>;
        {
            let (l, w): (Vec<f64>, Vec<f64>) = self
                .terms()
                .map(|(n, a)| ((n as f64).ln(), a / n as f64))
                .unzip();
            logs = l;
            weights = w;
        }
        let chunks = count.div_ceil(GRID_CHUNK);
        let parts: Vec<Vec<Complex64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let first = c * GRID_CHUNK;
                let len = GRID_CHUNK.min(count - first);
                grid_chunk(&logs, &weights, t0 + first as f64 * dt, dt, len)
            })
            .collect();
        parts.concat()
    }

    /// Nominal trapezoid step. `|F(1+it)|²` only contains the frequencies
    /// `log(m/n)` with `m, n` in the support, so its oscillation scale is
    /// `1/log(upper/lower)`; ten points per unit of that scale.
    pub fn grid_step(&self) -> f64 {
        let spread = (self.upper as f64 / self.lower as f64).ln();
        0.1 / spread.max(std::f64::consts::LN_2)
    }

    /// Trapezoid estimate of `∫_{T₁}^{T₂} |F(1+it)|² dt` at the nominal step and at half of it.
    pub fn mean_square(&self, t1: f64, t2: f64) -> Result<MeanSquareEstimate> {
        self.mean_square_with(t1, t2, &GridPolicy::default())
    }

    pub fn mean_square_with(&self, t1: f64, t2: f64, policy: &GridPolicy) -> Result<MeanSquareEstimate> {
        if !(t1.is_finite() && t2.is_finite()) || t1 < 0.0 || t1 >= t2 {
            return Err(Error::InvalidInput(format!(
                "mean square needs 0 ≤ T1 < T2, got [{t1}, {t2}]"
            )));
        }
        let grid = policy.grid(self, t1, t2)?;
        if self.is_zero() {
            return Ok(MeanSquareEstimate {
                t_range: (t1, t2),
                grid_step: grid.step,
                intervals: grid.intervals,
                value: 0.0,
                refined_value: 0.0,
                rel_gap: 0.0,
                accepted: true,
            });
        }
        let half = grid.step / 2.0;
        let count = 2 * grid.intervals + 1;
        let sq: Vec<f64> = self
            .eval_grid(t1, half, count)
            .into_iter()
            .map(|z| z.norm_sqr())
            .collect();
        let ends = 0.5 * (sq[0] + sq[count - 1]);
        let fine: Neumaier = sq.iter().copied().collect();
        let coarse: Neumaier = sq.iter().step_by(2).copied().collect();
        let refined_value = half * (fine.value() - ends);
        let value = grid.step * (coarse.value() - ends);
        let rel_gap = (value - refined_value).abs() / refined_value.max(1e-300);
        Ok(MeanSquareEstimate {
            t_range: (t1, t2),
            grid_step: grid.step,
            intervals: grid.intervals,
            value,
            refined_value,
            rel_gap,
            accepted: rel_gap <= MAX_REL_GAP,
        })
    }

    /// Largest `|F(1+it)|` over the refined mean-square grid on `[T₁, T₂]`,
    /// with the `t` where it occurs.
    pub fn sampled_sup(&self, t1: f64, t2: f64, policy: &GridPolicy) -> Result<(f64, f64)> {
        if !(t1.is_finite() && t2.is_finite()) || t1 > t2 {
            return Err(Error::InvalidInput(format!("bad interval [{t1}, {t2}]")));
        }
        if t1 == t2 {
            return Ok((t1, self.eval(t1).norm()));
        }
        let grid = policy.grid(self, t1, t2)?;
        let half = grid.step / 2.0;
        let vals = self.eval_grid(t1, half, 2 * grid.intervals + 1);
        let (i, best) = vals
            .iter()
            .map(|z| z.norm())
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        Ok((t1 + i as f64 * half, best))
    }

    /// `2 ∫_0^T |F|² / ((T + upper) Σ a_n²/n²)`; the integral over `[−T, T]`
    /// is twice that over `[0, T]` for real coefficients.
    pub fn mvt_ratio(&self, t: f64) -> Result<f64> {
        self.mvt_ratio_with(t, &GridPolicy::default())
    }

    pub fn mvt_ratio_with(&self, t: f64, policy: &GridPolicy) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("T must be positive, got {t}")));
        }
        let ms = self.mean_square_with(0.0, t, policy)?;
        let denom = (t + self.upper as f64) * self.weighted_l2();
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * ms.refined_value / denom)
    }
}

/// `Σ_{k} weights_k · e^{−i t log n_k}` at `len` consecutive grid points.
fn grid_chunk(logs: &[f64], weights: &[f64], t_start: f64, dt: f64, len: usize) -> Vec<Complex64> {
    let mut acc_re = vec![0.0f64; len];
    let mut acc_im = vec![0.0f64; len];
    let mut zr = [0.0f64; TERM_BLOCK];
    let mut zi = [0.0f64; TERM_BLOCK];
    let mut wr = [1.0f64; TERM_BLOCK];
    let mut wi = [0.0f64; TERM_BLOCK];

    for (lb, wb) in logs.chunks(TERM_BLOCK).zip(weights.chunks(TERM_BLOCK)) {
        let m = lb.len();
        let padded = m.div_ceil(LANES) * LANES;
        for j in 0..padded {
            if j < m {
                let (s, c) = (t_start * lb[j]).sin_cos();
                zr[j] = wb[j] * c;
                zi[j] = -wb[j] * s;
                let (s, c) = (dt * lb[j]).sin_cos();
                wr[j] = c;
                wi[j] = -s;
            } else {
                zr[j] = 0.0;
                zi[j] = 0.0;
                wr[j] = 1.0;
                wi[j] = 0.0;
            }
        }
        for k in 0..len {
            let mut sr = [0.0f64; LANES];
            let mut si = [0.0f64; LANES];
            for (((zr, zi), wr), wi) in zr[..padded]
                .chunks_exact_mut(LANES)
                .zip(zi[..padded].chunks_exact_mut(LANES))
                .zip(wr[..padded].chunks_exact(LANES))
                .zip(wi[..padded].chunks_exact(LANES))
            {
                for l in 0..LANES {
                    sr[l] += zr[l];
                    si[l] += zi[l];
                    let r = zr[l] * wr[l] - zi[l] * wi[l];
                    let i = zr[l] * wi[l] + zi[l] * wr[l];
                    zr[l] = r;
                    zi[l] = i;
                }
            }
            acc_re[k] += sr.iter().sum::<f64>();
            acc_im[k] += si.iter().sum::<f64>();
        }
    }
    acc_re
        .into_iter()
        .zip(acc_im)
        .map(|(re, im)| Complex64::new(re, im))
        .collect()
}

/// Limits on trapezoid grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    /// Maximum of (grid points × non-zero terms) for one request.
    pub max_work: f64,
    /// Multiplier on the nominal step; `0.5` doubles the resolution.
    pub step_scale: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            max_work: 1e11,
            step_scale: 1.0,
        }
    }
}

pub(crate) struct Grid {
    pub step: f64,
    pub intervals: usize,
}

impl GridPolicy {
    pub(crate) fn grid(&self, poly: &DirichletPoly, t1: f64, t2: f64) -> Result<Grid> {
        let nominal = poly.grid_step() * self.step_scale;
        let intervals = ((t2 - t1) / nominal).ceil().max(1.0);
        let points = 2.0 * intervals + 1.0;
        let work = points * poly.nnz().max(1) as f64;
        if work > self.max_work || points > usize::MAX as f64 / 4.0 {
            return Err(Error::Capacity(format!(
                "t-grid on [{t1}, {t2}] needs {points:.3e} points × {} terms = {work:.3e} \
                 evaluations (budget {:.3e}); request a shorter t-range or a smaller support",
                poly.nnz(),
                self.max_work
            )));
        }
        Ok(Grid {
            step: (t2 - t1) / intervals,
            intervals: intervals as usize,
        })
    }

    /// Work (points × terms) a mean square over `[t1, t2]` would take.
    pub fn work(&self, poly: &DirichletPoly, t1: f64, t2: f64) -> f64 {
        let nominal = poly.grid_step() * self.step_scale;
        let intervals = ((t2 - t1) / nominal).ceil().max(1.0);
        (2.0 * intervals + 1.0) * poly.nnz().max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSquareEstimate {
    pub t_range: (f64, f64),
    pub grid_step: f64,
    pub intervals: usize,
    pub value: f64,
    pub refined_value: f64,
    pub rel_gap: f64,
    /// `rel_gap ≤ 0.01`.
    pub accepted: bool,
}

/// Indicator polynomial of the primes in `[P, Q]`.
pub fn prime_poly(p: f64, q: f64) -> Result<DirichletPoly> {
    if !(p >= 2.0 && p <= q) {
        return Err(Error::InvalidInput(format!("prime polynomial needs 2 ≤ P ≤ Q, got [{p}, {q}]")));
    }
    DirichletPoly::sparse(primes_in(p, q)?.into_iter().map(|n| (n, 1.0)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Row {
    pub t: f64,
    pub modulus: f64,
    pub bound: f64,
    pub bound_ratio: f64,
}

/// Exponent `A` used in `(log X)^{−A}` bound denominators.
pub const PROFILE_A: f64 = 2.0;

/// `|𝒫(1+it)|` against `log X/(1+|t|) + (log X)^{−2}` at each sample.
pub fn lemma2_profile(p: f64, q: f64, x: u64, t_samples: &[f64]) -> Result<Vec<Lemma2Row>> {
    let poly = prime_poly(p, q)?;
    let log_x = (x as f64).ln();
    t_samples
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t <= x as f64) {
                return Err(Error::InvalidInput(format!("sample t = {t} outside [0, X]")));
            }
            let modulus = poly.eval(t).norm();
            let bound = log_x / (1.0 + t.abs()) + log_x.powf(-PROFILE_A);
            Ok(Lemma2Row {
                t,
                modulus,
                bound,
                bound_ratio: modulus / bound,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Profile {
    pub x: u64,
    pub a: f64,
    pub t_max: f64,
    pub sup: f64,
    pub t_at_sup: f64,
}

/// Sampled `sup_{0 ≤ t ≤ (log X)^A} |Σ_{X ≤ n ≤ 2X} λ(n) n^{−1−it}|`; by
/// conjugate symmetry this is also the sup over `|t| ≤ (log X)^A`.
pub fn lemma1_profile(x: u64, a: f64) -> Result<Lemma1Profile> {
    if x < 100 {
        return Err(Error::InvalidInput(format!("X must be at least 100, got {x}")));
    }
    let poly = crate::decomp::liouville_poly(x)?;
    lemma1_profile_for(&poly, x, a)
}

/// [`lemma1_profile`] for arbitrary coefficients on `[X, 2X]`.
pub fn lemma1_profile_for(poly: &DirichletPoly, x: u64, a: f64) -> Result<Lemma1Profile> {
    let t_max = (x as f64).ln().powf(a);
    let (t_at_sup, sup) = poly.sampled_sup(0.0, t_max, &GridPolicy::default())?;
    Ok(Lemma1Profile {
        x,
        a,
        t_max,
        sup,
        t_at_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_single_term() {
        assert_eq!(DirichletPoly::zero().eval(3.0), Complex64::new(0.0, 0.0));
        let p = DirichletPoly::sparse(vec![(7, 1.0)]).unwrap();
        assert_eq!(p.eval(0.0), Complex64::new(1.0 / 7.0, 0.0));
        let ms = p.mean_square(2.0, 12.0).unwrap();
        assert!((ms.refined_value - 10.0 / 49.0).abs() < 1e-13);
        assert!((ms.value - 10.0 / 49.0).abs() < 1e-13);
        assert_eq!(DirichletPoly::zero().mean_square(0.0, 5.0).unwrap().value, 0.0);
    }

    #[test]
    fn grid_matches_pointwise_eval() {
        let coeffs: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let p = DirichletPoly::dense(1000, coeffs).unwrap();
        let t0 = 123.4;
        let dt = 0.037;
        let grid = p.eval_grid(t0, dt, 700);
        for (k, z) in grid.iter().enumerate() {
            let w = p.eval(t0 + k as f64 * dt);
            assert!((z - w).norm() < 1e-11, "k = {k}: {z} vs {w}");
        }
    }

    #[test]
    fn conjugate_symmetry_and_triangle_bound() {
        let coeffs: Vec<f64> = (0..500).map(|i| if i % 3 == 0 { -1.0 } else { 0.5 }).collect();
        let p = DirichletPoly::dense(200, coeffs).unwrap();
        for t in [0.3, 5.0, 77.7, 1234.5] {
            let a = p.eval(t);
            let b = p.eval(-t);
            assert!((a - b.conj()).norm() < 1e-12);
            assert!(a.norm() <= p.l1_norm());
        }
    }

    #[test]
    fn mvt_ratio_single_term() {
        let p = DirichletPoly::sparse(vec![(50, 1.0)]).unwrap();
        let r = p.mvt_ratio(30.0).unwrap();
        let exact = 2.0 * 30.0 / (30.0 + 50.0);
        assert!((r - exact).abs() < 1e-12);
        assert!(r <= 2.0);
    }

    #[test]
    fn prime_polys() {
        let p = prime_poly(2.0, 3.0).unwrap();
        assert!((p.eval(0.0).re - 5.0 / 6.0).abs() < 1e-15);
        assert!(prime_poly(24.0, 28.0).unwrap().is_zero());
        assert!(prime_poly(5.0, 3.0).is_err());
        let rows = lemma2_profile(7.0, 7.0, 1000, &[0.0]).unwrap();
        assert!((rows[0].modulus - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DirichletPoly::dense(1, vec![1.5]).is_err());
        assert!(DirichletPoly::dense(0, vec![1.0]).is_err());
        assert!(DirichletPoly::sparse(vec![(3, 1.0), (2, 1.0)]).is_err());
        let p = DirichletPoly::sparse(vec![(3, 1.0)]).unwrap();
        assert!(p.mean_square(5.0, 5.0).is_err());
        assert!(p.mean_square(-1.0, 5.0).is_err());
        assert!(p.mvt_ratio(0.0).is_err());
        let tiny = GridPolicy {
            max_work: 10.0,
            ..GridPolicy::default()
        };
        assert!(matches!(p.mean_square_with(0.0, 100.0, &tiny), Err(Error::Capacity(_))));
    }
}
