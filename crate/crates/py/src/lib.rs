//! Python bindings: `import sil`.
//!
//! Reports come back as plain dicts and lists; polynomials, functions and
//! sieve blocks are wrapped classes.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;
use sil_core::num_complex::Complex64;
use sil_core::pipeline::{self, PipelineConfig, StudyOptions};
use sil_core::{decomp, dirichlet, interval, sieve, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Capacity(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_bound_py_any(py)?,
            (None, Some(u)) => u.into_bound_py_any(py)?,
            _ => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn report<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A bounded multiplicative function.
#[pyclass(name = "MultiplicativeFunction", module = "sil", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFunction(sil_core::MultiplicativeFunction);

#[pymethods]
impl PyFunction {
    #[staticmethod]
    fn liouville() -> Self {
        Self(sil_core::MultiplicativeFunction::liouville())
    }

    #[staticmethod]
    fn moebius() -> Self {
        Self(sil_core::MultiplicativeFunction::moebius_sign())
    }

    #[staticmethod]
    fn one() -> Self {
        Self(sil_core::MultiplicativeFunction::constant_one())
    }

    /// Completely multiplicative with seeded ±1 values on primes.
    #[staticmethod]
    fn random(seed: u64) -> Self {
        Self(sil_core::MultiplicativeFunction::random_sign_on_primes(seed))
    }

    /// Parses "p k value" lines; "* 1 v" sets f(p) = v for every prime.
    #[staticmethod]
    #[pyo3(signature = (text, name = "custom"))]
    fn from_definition(text: &str, name: &str) -> PyResult<Self> {
        sil_core::MultiplicativeFunction::parse_definition(name, text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        sil_core::MultiplicativeFunction::from_file(&path).map(Self).map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn completely_multiplicative(&self) -> bool {
        self.0.is_completely_multiplicative()
    }

    fn prime_power(&self, p: u64, k: u32) -> PyResult<f64> {
        self.0.prime_power(p, k).map_err(err)
    }

    /// f(n) for n in [n0, n1).
    fn values(&self, py: Python<'_>, n0: u64, n1: u64) -> PyResult<Vec<f64>> {
        py.detach(|| interval::ValueSeries::evaluate(&self.0, n0..n1).map(|v| v.values)).map_err(err)
    }

    /// (1/X) Σ_{X ≤ n ≤ 2X} f(n).
    fn mean_over(&self, py: Python<'_>, x: u64) -> PyResult<f64> {
        py.detach(|| sil_core::mean_over(&self.0, x)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("MultiplicativeFunction('{}')", self.0.name())
    }
}

fn function_or_liouville(f: Option<&PyFunction>) -> sil_core::MultiplicativeFunction {
    f.map_or_else(sil_core::MultiplicativeFunction::liouville, |f| f.0.clone())
}

/// Per-integer arithmetic data for a range.
#[pyclass(name = "FactorBlock", module = "sil", frozen)]
struct PyFactorBlock(sil_core::FactorBlock);

#[pymethods]
impl PyFactorBlock {
    #[getter]
    fn start(&self) -> u64 {
        self.0.start
    }

    #[getter]
    fn end(&self) -> u64 {
        self.0.end
    }

    #[getter]
    fn big_omega(&self) -> Vec<u32> {
        self.0.big_omega.iter().map(|&v| u32::from(v)).collect()
    }

    #[getter]
    fn liouville(&self) -> Vec<i8> {
        self.0.lambda.clone()
    }

    #[getter]
    fn window_omega(&self) -> Vec<u32> {
        self.0.window_omega.iter().map(|&v| u32::from(v)).collect()
    }

    #[getter]
    fn window_square_flag(&self) -> Vec<bool> {
        self.0.window_square_flag.clone()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Sieves [n0, n1) with prime window [P, Q].
#[pyfunction]
#[pyo3(signature = (n0, n1, p = 2.0, q = 2.0))]
fn sieve_block(py: Python<'_>, n0: u64, n1: u64, p: f64, q: f64) -> PyResult<PyFactorBlock> {
    let window = sieve::PrimeWindow::new(p, q).map_err(err)?;
    py.detach(|| {
        let s = sieve::Sieve::with_bound(sieve::SieveConfig::with_window(window), n1)?;
        s.sieve_block(n0..n1)
    })
    .map(PyFactorBlock)
    .map_err(err)
}

#[pyfunction]
fn primes_in(lower: f64, upper: f64) -> PyResult<Vec<u64>> {
    sieve::primes_in(lower, upper).map_err(err)
}

/// #{n ∈ [X, 2X] with no prime factor in [P, Q]}.
#[pyfunction]
fn rough_count(py: Python<'_>, x: u64, p: f64, q: f64) -> PyResult<u64> {
    py.detach(|| sieve::rough_count(x, p, q)).map_err(err)
}

/// Variance report of short-interval averages of f over [X, 2X].
#[pyfunction]
#[pyo3(signature = (x, delta, f = None, subtract_mean = false, threshold = None))]
fn variance<'py>(
    py: Python<'py>,
    x: u64,
    delta: f64,
    f: Option<&PyFunction>,
    subtract_mean: bool,
    threshold: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let f = function_or_liouville(f);
    let r = py
        .detach(|| {
            let h = interval::window_length(x, delta)?;
            let values = interval::ValueSeries::evaluate(&f, x..2 * x + h + 1)?;
            let mut s = interval::sliding_sums(&values, x, h)?.with_delta(delta);
            if subtract_mean {
                s = s.with_mean(values.mean_over(x)?);
            }
            interval::compute_variance_at(&s, threshold.unwrap_or_else(|| interval::default_threshold(x)))
        })
        .map_err(err)?;
    report(py, &r)
}

/// Σ a_n n^{-1-it} with real coefficients |a_n| ≤ 1.
#[pyclass(name = "DirichletPoly", module = "sil", frozen)]
struct PyPoly(sil_core::DirichletPoly);

#[pymethods]
impl PyPoly {
    /// Coefficients a_lower, a_lower+1, ...
    #[staticmethod]
    fn dense(lower: u64, coeffs: Vec<f64>) -> PyResult<Self> {
        sil_core::DirichletPoly::dense(lower, coeffs).map(Self).map_err(err)
    }

    /// Strictly increasing (n, a_n) pairs.
    #[staticmethod]
    fn sparse(pairs: Vec<(u64, f64)>) -> PyResult<Self> {
        sil_core::DirichletPoly::sparse(pairs).map(Self).map_err(err)
    }

    /// f(n) on [X, 2X].
    #[staticmethod]
    #[pyo3(signature = (x, f = None))]
    fn from_function(py: Python<'_>, x: u64, f: Option<&PyFunction>) -> PyResult<Self> {
        let f = function_or_liouville(f);
        py.detach(|| {
            let v = interval::ValueSeries::evaluate(&f, x..2 * x + 1)?;
            pipeline::coefficient_poly(&v, x)
        })
        .map(Self)
        .map_err(err)
    }

    /// Indicator of the primes in [P, Q].
    #[staticmethod]
    fn primes(p: f64, q: f64) -> PyResult<Self> {
        dirichlet::prime_poly(p, q).map(Self).map_err(err)
    }

    #[getter]
    fn lower(&self) -> u64 {
        self.0.lower()
    }

    #[getter]
    fn upper(&self) -> u64 {
        self.0.upper()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.0.nnz()
    }

    fn l1_norm(&self) -> f64 {
        self.0.l1_norm()
    }

    fn weighted_l2(&self) -> f64 {
        self.0.weighted_l2()
    }

    fn eval(&self, t: f64) -> Complex64 {
        self.0.eval(t)
    }

    fn eval_grid(&self, py: Python<'_>, t0: f64, dt: f64, count: usize) -> Vec<Complex64> {
        py.detach(|| self.0.eval_grid(t0, dt, count))
    }

    /// Trapezoid estimate of ∫_{T1}^{T2} |F(1+it)|² dt at two resolutions.
    #[pyo3(signature = (t1, t2, max_work = None))]
    fn mean_square<'py>(&self, py: Python<'py>, t1: f64, t2: f64, max_work: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        let policy = policy(max_work);
        let est = py.detach(|| self.0.mean_square_with(t1, t2, &policy)).map_err(err)?;
        report(py, &est)
    }

    #[pyo3(signature = (t, max_work = None))]
    fn mvt_ratio(&self, py: Python<'_>, t: f64, max_work: Option<f64>) -> PyResult<f64> {
        let policy = policy(max_work);
        py.detach(|| self.0.mvt_ratio_with(t, &policy)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DirichletPoly([{}, {}], {} terms)", self.0.lower(), self.0.upper(), self.0.nnz())
    }
}

fn policy(max_work: Option<f64>) -> sil_core::GridPolicy {
    let mut p = sil_core::GridPolicy::default();
    if let Some(w) = max_work {
        p.max_work = w;
    }
    p
}

fn cx<'py>(py: Python<'py>, z: Complex64) -> PyResult<Bound<'py, PyAny>> {
    z.into_bound_py_any(py)
}

/// Ramaré decomposition of Σ_{X≤n≤2X} λ(n) n^{-1-it} at each t.
#[pyfunction]
fn ramare_decompose<'py>(py: Python<'py>, x: u64, p: f64, q: f64, t: Vec<f64>) -> PyResult<Bound<'py, PyList>> {
    let audit = py.detach(|| decomp::RamareAudit::new(x, p, q)).map_err(err)?;
    let rows = t
        .iter()
        .map(|&t| {
            let d = decomp::ramare_from_audit(&audit, t);
            let row = PyDict::new(py);
            row.set_item("X", d.x)?;
            row.set_item("P", d.window.0)?;
            row.set_item("Q", d.window.1)?;
            row.set_item("t", d.t)?;
            row.set_item("lhs", cx(py, d.lhs)?)?;
            row.set_item("main", cx(py, d.main)?)?;
            row.set_item("rough", cx(py, d.rough)?)?;
            row.set_item("residual", cx(py, d.residual)?)?;
            row.set_item("closure_error", d.closure_error)?;
            row.set_item("relative_closure", d.relative_closure())?;
            row.set_item("residual_support_count", d.residual_support_count)?;
            row.set_item("residual_support_violations", d.residual_support_violations)?;
            Ok(row)
        })
        .collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, rows)
}

/// Short-range split of the bilinear prime sum.
#[pyclass(name = "DyadicSplit", module = "sil", frozen)]
struct PySplit {
    split: sil_core::DyadicSplit,
    audit: decomp::RamareAudit,
}

#[pymethods]
impl PySplit {
    #[new]
    fn new(py: Python<'_>, x: u64, p: f64, q: f64, h: f64) -> PyResult<Self> {
        py.detach(|| {
            let audit = decomp::RamareAudit::new(x, p, q)?;
            let split = decomp::dyadic_from_audit(&audit, h)?;
            Ok(Self { split, audit })
        })
        .map_err(err)
    }

    /// Σ_j Q_j F_j minus both boundary polynomials at 1 + it.
    fn reconstruct(&self, t: f64) -> Complex64 {
        self.split.reconstruct(t)
    }

    /// The main term of the Ramaré decomposition (λ(p) = −1 included).
    fn main_term(&self, t: f64) -> Complex64 {
        self.audit.main_term(t)
    }

    #[getter]
    fn j_range(&self) -> (i64, i64) {
        self.split.j_range
    }

    #[getter]
    fn nonempty_bins(&self) -> Vec<i64> {
        self.split.factors.iter().map(|f| f.j).collect()
    }

    fn max_boundary_coeff(&self) -> f64 {
        self.split.max_boundary_coeff()
    }

    fn boundary_lower(&self) -> PyPoly {
        PyPoly(self.split.boundary_lower.clone())
    }

    fn boundary_upper(&self) -> PyPoly {
        PyPoly(self.split.boundary_upper.clone())
    }

    /// Per-bin sampled sup of |Q_j(1+it)| on [T0, T].
    fn qjh_sup<'py>(&self, py: Python<'py>, t0: f64, t: f64) -> PyResult<Bound<'py, PyAny>> {
        let rows = py
            .detach(|| decomp::qjh_sup_profile(&self.split, self.audit.x, t0, t))
            .map_err(err)?;
        report(py, &rows)
    }
}

#[pyfunction]
fn lemma1_profile<'py>(py: Python<'py>, x: u64, a: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| dirichlet::lemma1_profile(x, a)).map_err(err)?;
    report(py, &r)
}

#[pyfunction]
fn lemma2_profile<'py>(py: Python<'py>, p: f64, q: f64, x: u64, t: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| dirichlet::lemma2_profile(p, q, x, &t)).map_err(err)?;
    report(py, &r)
}

fn config(x: u64, delta: f64, window: Option<(f64, f64)>, f: Option<&PyFunction>, subtract_mean: bool) -> PyResult<PipelineConfig> {
    let mut c = PipelineConfig::new(x, delta)
        .map_err(err)?
        .with_function(function_or_liouville(f), subtract_mean);
    c.forced_window = window;
    Ok(c)
}

/// Interval variance against the mean-square bound.
#[pyfunction]
#[pyo3(signature = (x, delta, f = None, subtract_mean = false, budget = None))]
fn lemma3_compare<'py>(
    py: Python<'py>,
    x: u64,
    delta: f64,
    f: Option<&PyFunction>,
    subtract_mean: bool,
    budget: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut c = config(x, delta, None, f, subtract_mean)?;
    if let Some(b) = budget {
        c.t_budget = b;
    }
    let r = py.detach(|| pipeline::lemma3_compare(&c)).map_err(err)?;
    report(py, &r)
}

/// Each term of the bound chain for ∫_0^T |F|².
#[pyfunction]
#[pyo3(signature = (x, delta, t, window = None, h = None, budget = None))]
fn lemma4_chain<'py>(
    py: Python<'py>,
    x: u64,
    delta: f64,
    t: f64,
    window: Option<(f64, f64)>,
    h: Option<f64>,
    budget: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut c = config(x, delta, window, None, false)?;
    if let Some(h) = h {
        c.h_bins = h;
    }
    if let Some(b) = budget {
        c.t_budget = b;
    }
    let r = py.detach(|| pipeline::lemma4_chain(&c, t)).map_err(err)?;
    report(py, &r)
}

/// One row per (X, δ) with variance, exceptional fraction and optional mean-square columns.
#[pyfunction]
#[pyo3(signature = (deltas, xs, f = None, subtract_mean = false, lemma3_max_x = 10_000, mvt_max_x = 10_000, budget = None))]
#[allow(clippy::too_many_arguments)]
fn scaling_study<'py>(
    py: Python<'py>,
    deltas: Vec<f64>,
    xs: Vec<u64>,
    f: Option<&PyFunction>,
    subtract_mean: bool,
    lemma3_max_x: u64,
    mvt_max_x: u64,
    budget: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let f = function_or_liouville(f);
    let mut options = StudyOptions {
        subtract_mean,
        lemma3_max_x,
        mvt_max_x,
        ..StudyOptions::default()
    };
    if let Some(b) = budget {
        options.t_budget = b;
    }
    let s = py.detach(|| sil_core::scaling_study(&deltas, &xs, &f, &options)).map_err(err)?;
    report(py, &s)
}

#[pymodule]
fn sil(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFunction>()?;
    m.add_class::<PyFactorBlock>()?;
    m.add_class::<PyPoly>()?;
    m.add_class::<PySplit>()?;
    m.add_function(wrap_pyfunction!(sieve_block, m)?)?;
    m.add_function(wrap_pyfunction!(primes_in, m)?)?;
    m.add_function(wrap_pyfunction!(rough_count, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(ramare_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_profile, m)?)?;
    m.add_function(wrap_pyfunction!(lemma2_profile, m)?)?;
    m.add_function(wrap_pyfunction!(lemma3_compare, m)?)?;
    m.add_function(wrap_pyfunction!(lemma4_chain, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_study, m)?)?;
    Ok(())
}
