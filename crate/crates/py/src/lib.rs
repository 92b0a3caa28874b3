//! Python bindings: systems, norms, conditionality measures, fits and the acceptance suite.
//!
//! Structured results come back as dicts and lists.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde::Serialize;
use serde_json::Value;

use condlab_core::acceptance::{run_all, run_criterion, AcceptConfig, CRITERIA};
use condlab_core::conditionality::{self as cond, Direction, Mode, SearchConfig, SignMode};
use condlab_core::fit;
use condlab_core::linalg::SymMatrix;
use condlab_core::spaces::{self, SpaceSpec};
use condlab_core::systems::{FiniteSystem, SystemSpec};
use condlab_core::weight::{self, Arrangement, WeightFourierTable, WeightParams, DEFAULT_TOL};
use condlab_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::InvalidExponent(_) | Error::Parse(_) | Error::DimensionMismatch { .. } | Error::UnsupportedPair(_) | Error::OddDimension(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(json_to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, &serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

fn space(text: &str) -> PyResult<SpaceSpec> {
    SpaceSpec::parse(text).map_err(err)
}

/// A finite biorthogonal system with a norm oracle.
#[pyclass(name = "System", frozen, module = "condlab")]
struct System {
    inner: Arc<FiniteSystem>,
    spec: SystemSpec,
}

impl System {
    fn build(spec: SystemSpec) -> PyResult<Self> {
        Ok(System { inner: Arc::new(spec.build().map_err(err)?), spec })
    }
}

#[pymethods]
impl System {
    /// From a JSON constructor tree.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::build(SystemSpec::from_json(text).map_err(err)?)
    }

    #[staticmethod]
    fn orthonormal(dim: usize) -> PyResult<Self> {
        Self::build(SystemSpec::Orthonormal { dim })
    }

    #[staticmethod]
    fn from_gram(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        SymMatrix::from_rows(&rows).map_err(err)?;
        Self::build(SystemSpec::Gram { rows })
    }

    /// Trigonometric system in `H_λ`; `arrangement` is `raw`, `complex` or `real`.
    #[staticmethod]
    #[pyo3(signature = (lam, dim, arrangement = "real"))]
    fn trig(lam: f64, dim: usize, arrangement: &str) -> PyResult<Self> {
        let arrangement = match arrangement {
            "raw" => Arrangement::RawInteger,
            "complex" => Arrangement::ComplexNatural,
            "real" => Arrangement::RealNatural,
            _ => return Err(PyValueError::new_err(format!("arrangement {arrangement:?}: use raw, complex or real"))),
        };
        Self::build(SystemSpec::Trig { lambda: lam, dim, arrangement })
    }

    /// Diamond of the real trigonometric systems in `H_{-β}` and `H_α`, each of dimension `n`.
    #[staticmethod]
    fn aa_diamond(beta: f64, alpha: f64, n: usize) -> PyResult<Self> {
        Self::build(SystemSpec::aa_diamond(beta, alpha, n))
    }

    /// DKK system over the diamond with `blocks` dyadic blocks.
    #[staticmethod]
    #[pyo3(signature = (beta, alpha, n, blocks, space = "lp:2"))]
    fn almost_greedy(beta: f64, alpha: f64, n: usize, blocks: usize, space: &str) -> PyResult<Self> {
        Self::build(SystemSpec::AlmostGreedy { inner: Box::new(SystemSpec::aa_diamond(beta, alpha, n)), space: self::space(space)?, blocks })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    /// Norm of `Σ a_j x_j`; shorter coefficient lists are zero-padded.
    fn norm(&self, a: Vec<f64>) -> PyResult<f64> {
        self.inner.norm(&a).map_err(err)
    }

    /// Dense Gram matrix, or None when the system is not Hilbertian or too large.
    fn gram(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.gram().map(|g| (0..g.order()).map(|i| g.row(i).to_vec()).collect())
    }

    fn to_json(&self) -> String {
        self.spec.to_json()
    }

    fn __repr__(&self) -> String {
        format!("System(dim={}, label={:?})", self.inner.dim(), self.inner.label())
    }
}

/// `ŵ_λ(n)` for `n = 0..=nmax`.
#[pyfunction]
#[pyo3(signature = (lam, nmax, tol = DEFAULT_TOL))]
fn weight_coeffs(lam: f64, nmax: usize, tol: f64) -> PyResult<Vec<f64>> {
    Ok(WeightFourierTable::build(WeightParams::new(lam).map_err(err)?, nmax, tol).map_err(err)?.coeffs().to_vec())
}

/// `‖D_m‖_{H_λ}` for each m.
#[pyfunction]
fn dirichlet_norms(lam: f64, ms: Vec<usize>) -> PyResult<Vec<f64>> {
    let top = ms.iter().copied().max().unwrap_or(0);
    let t = WeightFourierTable::build(WeightParams::new(lam).map_err(err)?, 2 * top, DEFAULT_TOL).map_err(err)?;
    ms.iter().map(|&m| weight::dirichlet_norm(&t, m).map_err(err)).collect()
}

/// `‖f_m‖_{H_{-α}}` for each m.
#[pyfunction]
fn fm_norms(alpha: f64, ms: Vec<usize>) -> PyResult<Vec<f64>> {
    let top = ms.iter().copied().max().unwrap_or(1);
    let t = WeightFourierTable::build(WeightParams::new(-alpha).map_err(err)?, top, DEFAULT_TOL).map_err(err)?;
    ms.iter().map(|&m| weight::fm_norm(&t, m).map_err(err)).collect()
}

#[pyfunction]
fn harmonic(m: usize) -> f64 {
    spaces::harmonic(m)
}

/// Norm in a sequence space such as `lp:2`, `lorentz:4,2`.
#[pyfunction]
fn space_norm(space: &str, f: Vec<f64>) -> PyResult<f64> {
    spaces::space_norm(&self::space(space)?, &f).map_err(err)
}

#[pyfunction]
fn delta_closed_form(u1: &str, u2: &str, m: usize) -> PyResult<f64> {
    spaces::delta_closed_form(&space(u1)?, &space(u2)?, m).map_err(err)
}

/// Rows `{m, lambda, gamma, c}` for `1..=m`.
#[pyfunction]
fn fundamental_table<'py>(py: Python<'py>, space: &str, m: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &spaces::fundamental_table(&self::space(space)?, m).map_err(err)?)
}

/// Exact `k̃_1..k̃_{m_max}`.
#[pyfunction]
fn ktilde_exact(system: &System, m_max: usize) -> PyResult<Vec<f64>> {
    cond::ktilde_exact_series(&system.inner, m_max, &SearchConfig::default()).map_err(err)
}

/// Exact `k_1..k_{m_max}`.
#[pyfunction]
fn k_exact(system: &System, m_max: usize) -> PyResult<Vec<f64>> {
    cond::k_exact_series(&system.inner, m_max, &SearchConfig::default()).map_err(err)
}

/// Lower bound for `k̃_m` with the subset attaining it.
#[pyfunction]
fn ktilde_heuristic(system: &System, m: usize, seed: u64) -> PyResult<(f64, Vec<usize>)> {
    cond::ktilde_heuristic(&system.inner, m, seed, &SearchConfig::default()).map_err(err)
}

/// `δ_m` or `δ̃_m`; exact without a seed, heuristic with one.
#[pyfunction]
#[pyo3(signature = (s1, s2, m, tilde = true, seed = None))]
fn delta<'py>(py: Python<'py>, s1: &System, s2: &System, m: usize, tilde: bool, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let mode = seed.map_or(Mode::Exact, |seed| Mode::Heuristic { seed });
    to_py(py, &cond::delta_between(&s1.inner, &s2.inner, m, tilde, mode, &SearchConfig::default()).map_err(err)?)
}

/// `½ max δ̃_m` lower bounds for `k̃_{2m}` of the diamond of two systems.
#[pyfunction]
fn ccdom_series<'py>(py: Python<'py>, s1: &System, s2: &System, ms: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cond::ccdom_series(&s1.inner, &s2.inner, &ms).map_err(err)?)
}

/// Fundamental function; all sign patterns without a seed, random signs with one.
#[pyfunction]
#[pyo3(signature = (system, m, seed = None))]
fn phi<'py>(py: Python<'py>, system: &System, m: usize, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let (mode, s) = seed.map_or((SignMode::AllSignsExact, 0), |s| (SignMode::RandomSigns, s));
    to_py(py, &cond::phi_fundamental(&system.inner, m, mode, s, &SearchConfig::default()).map_err(err)?)
}

/// Transform ratios per support size; `direction` is `hilbertian` or `besselian`.
#[pyfunction]
fn transform<'py>(py: Python<'py>, system: &System, space: &str, direction: &str, scales: Vec<usize>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let dir = match direction {
        "hilbertian" => Direction::Hilbertian,
        "besselian" => Direction::Besselian,
        _ => return Err(PyValueError::new_err(format!("direction {direction:?}: use hilbertian or besselian"))),
    };
    to_py(py, &cond::transform_norms(&system.inner, &self::space(space)?, dir, &scales, seed).map_err(err)?)
}

/// Lifted `k̃_m` witness on a DKK system.
#[pyfunction]
fn dkk_witness<'py>(py: Python<'py>, system: &System, m: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cond::dkk_ktilde_witness(&system.inner, m, &SearchConfig::default()).map_err(err)?)
}

#[pyfunction]
fn greedy_ratio<'py>(py: Python<'py>, system: &System, f: Vec<f64>, m: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cond::greedy_ratio(&system.inner, &f, m, seed, &SearchConfig::default()).map_err(err)?)
}

#[pyfunction]
fn fit_power<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &fit::fit_power(&points).map_err(err)?)
}

#[pyfunction]
fn fit_log_power<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &fit::fit_log_power(&points).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (points, threshold = fit::BOUNDED_SLOPE))]
fn ratio_stabilization<'py>(py: Python<'py>, points: Vec<(f64, f64)>, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &fit::ratio_stabilization(&points, threshold).map_err(err)?)
}

/// Acceptance verdicts; `ids` selects criteria 1-9, None runs all ten.
#[pyfunction]
#[pyo3(signature = (ids = None, seed = None))]
fn run_acceptance<'py>(py: Python<'py>, ids: Option<Vec<u32>>, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = AcceptConfig::default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let results = match ids {
        None => run_all(&cfg, |_| {}),
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|&&i| !(1..CRITERIA.len() as u32).contains(&i)) {
                return Err(PyValueError::new_err(format!("criterion {bad} is not individually runnable (1-9)")));
            }
            ids.into_iter().map(|i| run_criterion(i, &cfg)).collect()
        }
    };
    to_py(py, &results)
}

#[pymodule]
fn condlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(weight_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet_norms, m)?)?;
    m.add_function(wrap_pyfunction!(fm_norms, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic, m)?)?;
    m.add_function(wrap_pyfunction!(space_norm, m)?)?;
    m.add_function(wrap_pyfunction!(delta_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_table, m)?)?;
    m.add_function(wrap_pyfunction!(ktilde_exact, m)?)?;
    m.add_function(wrap_pyfunction!(k_exact, m)?)?;
    m.add_function(wrap_pyfunction!(ktilde_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(ccdom_series, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(dkk_witness, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power, m)?)?;
    m.add_function(wrap_pyfunction!(fit_log_power, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_stabilization, m)?)?;
    m.add_function(wrap_pyfunction!(run_acceptance, m)?)?;
    Ok(())
}
