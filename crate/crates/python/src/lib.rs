//! Python bindings: environments, invasion rates, critical curves, regime
//! maps and the Monte Carlo estimators.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lvswitch::curves::{self, ExtendedV};
use lvswitch::{invasion, regimes, sim, ChartWeights, JumpRates, Species, UVCoords};

fn to_py(e: lvswitch::Error) -> PyErr {
    match e {
        lvswitch::Error::InvalidParameter(_) | lvswitch::Error::ChartBoundary { .. } => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(format!("{}: {e}", e.code())),
    }
}

fn species(name: &str) -> PyResult<Species> {
    name.parse().map_err(to_py)
}

/// `0.0` for Zero, `inf` for Infinite.
fn extended(v: ExtendedV) -> f64 {
    match v {
        ExtendedV::Zero => 0.0,
        ExtendedV::Finite(v) => v,
        ExtendedV::Infinite => f64::INFINITY,
    }
}

#[pyclass(name = "Environment", module = "lvswitch", skip_from_py_object)]
#[derive(Clone)]
pub struct PyEnvironment {
    inner: lvswitch::Environment,
}

#[pymethods]
impl PyEnvironment {
    #[new]
    fn new(a: f64, b: f64, c: f64, d: f64, alpha: f64, beta: f64) -> PyResult<Self> {
        let inner = lvswitch::Environment::new(a, b, c, d, alpha, beta).map_err(to_py)?;
        Ok(PyEnvironment { inner })
    }

    /// `[a, b, c, d, alpha, beta]`.
    fn to_list(&self) -> Vec<f64> {
        self.inner.to_array().to_vec()
    }

    /// "Type1" .. "Type4" or "Degenerate".
    fn classify(&self) -> String {
        self.inner.classify().to_string()
    }

    fn vector_field(&self, x: f64, y: f64) -> (f64, f64) {
        self.inner.vector_field(x, y)
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d, al, be] = self.inner.to_array();
        format!("Environment({a}, {b}, {c}, {d}, {al}, {be})")
    }
}

#[pyclass(name = "EnvPair", module = "lvswitch", skip_from_py_object)]
#[derive(Clone)]
pub struct PyEnvPair {
    inner: lvswitch::EnvPair,
}

#[pymethods]
impl PyEnvPair {
    #[new]
    fn new(env0: PyRef<'_, PyEnvironment>, env1: PyRef<'_, PyEnvironment>) -> Self {
        PyEnvPair {
            inner: lvswitch::EnvPair::new(env0.inner, env1.inner),
        }
    }

    /// Builds a pair from two `[a, b, c, d, alpha, beta]` lists.
    #[staticmethod]
    fn from_lists(env0: Vec<f64>, env1: Vec<f64>) -> PyResult<Self> {
        let e0 = lvswitch::Environment::from_slice(&env0).map_err(to_py)?;
        let e1 = lvswitch::Environment::from_slice(&env1).map_err(to_py)?;
        Ok(PyEnvPair {
            inner: lvswitch::EnvPair::new(e0, e1),
        })
    }

    #[getter]
    fn env0(&self) -> PyEnvironment {
        PyEnvironment { inner: *self.inner.env0() }
    }

    #[getter]
    fn env1(&self) -> PyEnvironment {
        PyEnvironment { inner: *self.inner.env1() }
    }

    /// Mixed environment at weight `s` in `[0, 1]`.
    fn mix(&self, s: f64) -> PyResult<PyEnvironment> {
        if !(0.0..=1.0).contains(&s) {
            return Err(PyValueError::new_err(format!("mixing weight must lie in [0, 1], got {s}")));
        }
        Ok(PyEnvironment { inner: self.inner.mix(s) })
    }

    fn swapped(&self) -> PyEnvPair {
        PyEnvPair { inner: self.inner.swapped() }
    }

    fn __repr__(&self) -> String {
        format!(
            "EnvPair({:?}, {:?})",
            self.inner.env0().to_array(),
            self.inner.env1().to_array()
        )
    }
}

/// `(lambda0, lambda1)` of the point `(u, v)` in the `(alpha0, alpha1)` chart.
#[pyfunction]
fn uv_to_rates(pair: PyRef<'_, PyEnvPair>, u: f64, v: f64) -> PyResult<(f64, f64)> {
    let r = UVCoords::new(u, v, ChartWeights::alpha(&pair.inner))
        .and_then(|c| c.to_rates())
        .map_err(to_py)?;
    Ok((r.lambda0(), r.lambda1()))
}

#[pyfunction]
fn rates_to_uv(pair: PyRef<'_, PyEnvPair>, lambda0: f64, lambda1: f64) -> PyResult<(f64, f64)> {
    let r = JumpRates::new(lambda0, lambda1).map_err(to_py)?;
    let c = lvswitch::rates_to_uv(&r, ChartWeights::alpha(&pair.inner));
    Ok((c.u, c.v))
}

/// Invasion rate of y at `(u, v)` in the `(alpha0, alpha1)` chart.
#[pyfunction]
fn lambda_y(pair: PyRef<'_, PyEnvPair>, u: f64, v: f64) -> PyResult<f64> {
    invasion::lambda_y(&pair.inner, u, v).map_err(to_py)
}

/// Invasion rate of x at the raw jump rates.
#[pyfunction]
fn lambda_x(pair: PyRef<'_, PyEnvPair>, lambda0: f64, lambda1: f64) -> PyResult<f64> {
    let r = JumpRates::new(lambda0, lambda1).map_err(to_py)?;
    invasion::lambda_x(&pair.inner, &r).map_err(to_py)
}

#[pyfunction]
fn limits(pair: PyRef<'_, PyEnvPair>, u: f64) -> (f64, f64) {
    (invasion::limit_v_zero(&pair.inner, u), invasion::limit_v_inf(&pair.inner, u))
}

#[pyfunction]
fn threshold_analysis<'py>(py: Python<'py>, pair: PyRef<'_, PyEnvPair>) -> PyResult<Bound<'py, PyDict>> {
    let t = invasion::threshold_analysis(&pair.inner);
    let d = PyDict::new(py);
    d.set_item("r", t.r)?;
    d.set_item("t_poly", (t.t_poly.c2, t.t_poly.c1, t.t_poly.c0))?;
    d.set_item("discriminant", t.discriminant)?;
    d.set_item("t_negative", t.t_negative.iter().map(|iv| (iv.lo, iv.hi)).collect::<Vec<_>>())?;
    d.set_item("alpha", t.alpha.clone())?;
    d.set_item("alpha_bar", t.alpha_bar)?;
    d.set_item("coeff_a", t.coeff_a)?;
    Ok(d)
}

/// Critical `v` at `u` in the species' native chart: `0.0`, a finite value or `inf`.
#[pyfunction]
fn critical_v(pair: PyRef<'_, PyEnvPair>, species_name: &str, u: f64) -> PyResult<f64> {
    let s = species(species_name)?;
    curves::critical_v(&pair.inner, s, u).map(extended).map_err(to_py)
}

/// `(u_grid, v_values)` in the plotting chart; `0.0` and `inf` mark the
/// constant-sign parts.
#[pyfunction]
#[pyo3(signature = (pair, species_name, n = 200))]
fn curve_grid(pair: PyRef<'_, PyEnvPair>, species_name: &str, n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = species(species_name)?;
    let inner = pair.inner;
    let c = pair.py().detach(|| curves::curve_grid(&inner, s, n)).map_err(to_py)?;
    Ok((c.u_grid, c.values.into_iter().map(extended).collect()))
}

/// `(u_grid, v_grid, labels)` with `labels[i][j]` the regime name at
/// `(u_grid[i], v_grid[j])`.
#[pyfunction]
#[pyo3(signature = (pair, n = 200, v_min = 1e-2, v_max = 1e3))]
fn regime_map(
    pair: PyRef<'_, PyEnvPair>,
    n: usize,
    v_min: f64,
    v_max: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Vec<String>>)> {
    let grid = regimes::GridSpec::new(n, n, v_min, v_max).map_err(to_py)?;
    let inner = pair.inner;
    let map = pair
        .py()
        .detach(|| regimes::regime_map_on(&inner, &grid, regimes::DEFAULT_BAND, None))
        .map_err(to_py)?;
    let labels = map
        .labels
        .iter()
        .map(|row| row.iter().map(|l| l.name().to_string()).collect())
        .collect();
    Ok((map.u_grid, map.v_grid, labels))
}

/// One witness per regime found: `[(label, u, v, lambda0, lambda1), ...]`.
#[pyfunction]
#[pyo3(signature = (pair, n = 200))]
fn four_regime_search(pair: PyRef<'_, PyEnvPair>, n: usize) -> PyResult<Vec<(String, f64, f64, f64, f64)>> {
    let grid = regimes::GridSpec::new(n, n, 1e-2, 1e3).map_err(to_py)?;
    let inner = pair.inner;
    let set = pair
        .py()
        .detach(|| regimes::four_regime_search(&inner, &grid))
        .map_err(to_py)?;
    Ok(set
        .witnesses
        .iter()
        .map(|w| (w.label.name().to_string(), w.u, w.v, w.lambda0, w.lambda1))
        .collect())
}

#[pyfunction]
fn classify_regime(lx: f64, ly: f64, band: f64) -> String {
    regimes::classify_regime(lx, ly, band).name().to_string()
}

/// Ergodic estimate `(estimate, std_error)` of an invasion rate.
#[pyfunction]
#[pyo3(signature = (pair, lambda0, lambda1, species_name = "y", t_max = 1e4, seed = 1))]
fn estimate_lambda(
    pair: PyRef<'_, PyEnvPair>,
    lambda0: f64,
    lambda1: f64,
    species_name: &str,
    t_max: f64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let s = species(species_name)?;
    let r = JumpRates::new(lambda0, lambda1).map_err(to_py)?;
    let inner = pair.inner;
    let cfg = lvswitch::SimConfig::new(&inner, t_max, seed);
    let stats = pair
        .py()
        .detach(|| sim::estimate_lambda(&inner, &r, s, &cfg))
        .map_err(to_py)?;
    Ok((stats.estimate, stats.std_error))
}

/// Trajectory of the full process as `(t, x, y, mode)` lists.
#[pyfunction]
#[pyo3(signature = (pair, lambda0, lambda1, t_max, seed = 1, x0 = 0.5, y0 = 0.5))]
#[allow(clippy::type_complexity)]
fn simulate(
    pair: PyRef<'_, PyEnvPair>,
    lambda0: f64,
    lambda1: f64,
    t_max: f64,
    seed: u64,
    x0: f64,
    y0: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<usize>)> {
    let r = JumpRates::new(lambda0, lambda1).map_err(to_py)?;
    let inner = pair.inner;
    let cfg = lvswitch::SimConfig::new(&inner, t_max, seed).with_start(x0, y0, 0);
    let traj = pair
        .py()
        .detach(|| sim::simulate_pdmp(&inner, &r, &cfg))
        .map_err(to_py)?;
    let (xs, ys) = traj.states.iter().copied().unzip();
    Ok((traj.times, xs, ys, traj.modes))
}

/// Regime votes of `replicas` simulations, as a dict of counts.
#[pyfunction]
#[pyo3(signature = (pair, lambda0, lambda1, replicas = 50, t_max = 5e3, seed = 1))]
fn detect_regime<'py>(
    py: Python<'py>,
    pair: PyRef<'_, PyEnvPair>,
    lambda0: f64,
    lambda1: f64,
    replicas: usize,
    t_max: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = JumpRates::new(lambda0, lambda1).map_err(to_py)?;
    let inner = pair.inner;
    let cfg = lvswitch::SimConfig::new(&inner, t_max, seed);
    let votes = py
        .detach(|| sim::detect_regime(&inner, &r, &cfg, replicas, sim::EXTINCTION_THRESHOLD))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("replicas", votes.replicas)?;
    d.set_item("persistence", votes.persistence)?;
    d.set_item("extinction_x", votes.extinction_x)?;
    d.set_item("extinction_y", votes.extinction_y)?;
    d.set_item("inconclusive", votes.inconclusive)?;
    d.set_item("label", regimes::majority_label(&votes).name())?;
    Ok(d)
}

/// The reference pairs as `[(name, EnvPair), ...]`.
#[pyfunction]
fn catalog() -> Vec<(String, PyEnvPair)> {
    lvswitch::catalog()
        .into_iter()
        .map(|e| (e.name, PyEnvPair { inner: e.pair }))
        .collect()
}

#[pymodule(name = "lvswitch")]
fn lvswitch_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyEnvPair>()?;
    m.add_function(wrap_pyfunction!(uv_to_rates, m)?)?;
    m.add_function(wrap_pyfunction!(rates_to_uv, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_y, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_x, m)?)?;
    m.add_function(wrap_pyfunction!(limits, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_analysis, m)?)?;
    m.add_function(wrap_pyfunction!(critical_v, m)?)?;
    m.add_function(wrap_pyfunction!(curve_grid, m)?)?;
    m.add_function(wrap_pyfunction!(regime_map, m)?)?;
    m.add_function(wrap_pyfunction!(four_regime_search, m)?)?;
    m.add_function(wrap_pyfunction!(classify_regime, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(detect_regime, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    Ok(())
}
