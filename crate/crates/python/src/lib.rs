//! Python bindings. Networks and tensors are wrapped as classes; transcripts and
//! reports cross the boundary as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use relu_moments::clumping;
use relu_moments::harness::{self, ExperimentConfig, Profile, SuiteId};
use relu_moments::hermite;
use relu_moments::moments;
use relu_moments::network::{self, Evaluate, InstanceKind, InstanceParams, L2Method, Neuron};
use relu_moments::powersum::{self, PowerSumInstance};
use relu_moments::tensor;
use serde::Serialize;

fn err(e: relu_moments::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn neurons(weights: Vec<f64>, directions: Vec<Vec<f64>>) -> PyResult<Vec<Neuron>> {
    if weights.len() != directions.len() {
        return Err(PyValueError::new_err("weights and directions differ in length"));
    }
    Ok(weights.into_iter().zip(directions).map(|(w, u)| Neuron::new(w, u)).collect())
}

/// `Σ μᵢ relu(⟨uᵢ, x⟩)`.
#[pyclass(name = "ReluNetwork", module = "relu_moments", from_py_object)]
#[derive(Clone)]
pub struct PyReluNetwork {
    inner: network::ReluNetwork,
}

#[pymethods]
impl PyReluNetwork {
    #[new]
    fn new(dim: usize, weights: Vec<f64>, directions: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: network::ReluNetwork::new(dim, neurons(weights, directions)?).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.neurons().iter().map(|n| n.weight).collect()
    }

    #[getter]
    fn directions(&self) -> Vec<Vec<f64>> {
        self.inner.neurons().iter().map(|n| n.direction.clone()).collect()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&x).map_err(err)
    }

    fn to_abs_form(&self, budget: f64) -> PyAbsNetwork {
        PyAbsNetwork { inner: network::to_abs_form(&self.inner, budget) }
    }

    fn __len__(&self) -> usize {
        self.inner.width()
    }

    fn __repr__(&self) -> String {
        format!("ReluNetwork(dim={}, width={})", self.inner.dim(), self.inner.width())
    }
}

/// `⟨w, x⟩ + Σ λᵢ |⟨uᵢ, x⟩|`.
#[pyclass(name = "AbsNetwork", module = "relu_moments", from_py_object)]
#[derive(Clone)]
pub struct PyAbsNetwork {
    inner: network::AbsNetwork,
}

#[pymethods]
impl PyAbsNetwork {
    #[new]
    #[pyo3(signature = (w, weights, directions, budget = 2.0))]
    fn new(w: Vec<f64>, weights: Vec<f64>, directions: Vec<Vec<f64>>, budget: f64) -> PyResult<Self> {
        Ok(Self { inner: network::AbsNetwork::new(w, neurons(weights, directions)?, budget).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn linear(&self) -> Vec<f64> {
        self.inner.w().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.neurons().iter().map(|n| n.weight).collect()
    }

    #[getter]
    fn directions(&self) -> Vec<Vec<f64>> {
        self.inner.neurons().iter().map(|n| n.direction.clone()).collect()
    }

    #[getter]
    fn budget(&self) -> f64 {
        self.inner.budget()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&x).map_err(err)
    }

    /// Closed-form `‖self − other‖` under the standard Gaussian.
    fn l2_dist(&self, other: &PyAbsNetwork) -> PyResult<f64> {
        network::l2_dist(&self.inner, &other.inner, L2Method::ClosedForm).map_err(err)
    }

    fn moment_tensor(&self, order: usize) -> PyResult<PySymTensor> {
        Ok(PySymTensor { inner: moments::exact_moment_tensor(&self.inner, order).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.width()
    }

    fn __repr__(&self) -> String {
        format!("AbsNetwork(dim={}, width={}, budget={})", self.inner.dim(), self.inner.width(), self.inner.budget())
    }
}

/// Symmetric tensor stored by canonical multi-index.
#[pyclass(name = "SymTensor", module = "relu_moments", from_py_object)]
#[derive(Clone)]
pub struct PySymTensor {
    inner: tensor::SymTensor,
}

#[pymethods]
impl PySymTensor {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: tensor::SymTensor::from_text(text).map_err(err)? })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __getitem__(&self, index: Vec<usize>) -> PyResult<f64> {
        self.inner.get(&index).map_err(err)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn indices(&self) -> Vec<Vec<usize>> {
        self.inner.indices().collect()
    }

    fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    fn __sub__(&self, other: &PySymTensor) -> PyResult<Self> {
        Ok(Self { inner: self.inner.sub(&other.inner).map_err(err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("SymTensor(order={}, dim={})", self.inner.order(), self.inner.dim())
    }
}

fn parse_kind(kind: &str) -> PyResult<InstanceKind> {
    serde_json::from_value(serde_json::Value::String(kind.to_string())).map_err(|_| PyValueError::new_err(format!("unknown instance kind {kind:?}")))
}

#[pyfunction]
#[pyo3(signature = (kind, k, d, budget = 2.0, seed = 0, sep = 1.0, ladder = None))]
fn gen_instance(kind: &str, k: usize, d: usize, budget: f64, seed: u64, sep: f64, ladder: Option<Vec<f64>>) -> PyResult<PyReluNetwork> {
    let params = InstanceParams { sep, ladder: ladder.unwrap_or_default(), weights: None };
    Ok(PyReluNetwork { inner: network::gen_instance(parse_kind(kind)?, k, d, budget, &params, seed).map_err(err)? })
}

#[pyfunction]
fn hermite_eval(n: usize, x: f64) -> PyResult<f64> {
    hermite::hermite_eval(n, x).map_err(err)
}

#[pyfunction]
fn hermite_normalized_eval(n: usize, x: f64) -> PyResult<f64> {
    hermite::hermite_normalized_eval(n, x).map_err(err)
}

#[pyfunction]
fn relu_hermite_coeff(l: usize) -> f64 {
    hermite::relu_hermite_coeff(l)
}

/// Draws `n` labelled samples from `net` and estimates the order-`order` moment tensor.
#[pyfunction]
#[pyo3(signature = (net, order, n, seed = 0, noise_variance = 0.0, raw = false))]
fn estimate_moments(net: &PyReluNetwork, order: usize, n: usize, seed: u64, noise_variance: f64, raw: bool) -> PyResult<PySymTensor> {
    let samples = network::sample_labeled(&net.inner, n, noise_variance, seed).map_err(err)?;
    let t = if raw { moments::estimate_moments_raw(&samples, order) } else { moments::estimate_moments(&samples, order) };
    Ok(PySymTensor { inner: t.map_err(err)? })
}

/// Returns `(ℓ, value, bound, holds)` for the largest even correlation.
#[pyfunction]
#[pyo3(signature = (v, q, k_close, alpha, beta, gamma, tau, r, c = powersum::POWERSUM_C))]
#[allow(clippy::too_many_arguments)]
fn powersum_witness(v: Vec<f64>, q: Vec<f64>, k_close: usize, alpha: f64, beta: f64, gamma: f64, tau: f64, r: f64, c: f64) -> PyResult<(u32, f64, f64, bool)> {
    let inst = PowerSumInstance { v, q, k_close, alpha, beta, gamma, tau, r };
    let w = powersum::powersum_witness(&inst, c).map_err(err)?;
    Ok((w.ell, w.value, w.bound, w.holds()))
}

#[pyfunction]
fn elementary_symmetric(z: Vec<f64>) -> Vec<f64> {
    powersum::elementary_symmetric(&z)
}

#[pyfunction]
#[pyo3(signature = (w, tau = None))]
fn play_clumping<'py>(py: Python<'py>, w: Vec<f64>, tau: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let k = w.len().saturating_sub(1).max(1);
    let tr = clumping::play_noiseless(w, tau.unwrap_or_else(|| clumping::default_tau(k))).map_err(err)?;
    to_py(py, &tr)
}

#[pyfunction]
#[pyo3(signature = (name, profile = "ci", seed = 0))]
fn run_suite<'py>(py: Python<'py>, name: &str, profile: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let id = SuiteId::parse(name).map_err(err)?;
    let profile: Profile = profile.parse().map_err(err)?;
    let report = py.detach(|| harness::run_suite(id, profile, seed));
    to_py(py, &report)
}

/// Runs a TOML experiment config and returns the report as a dict.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_toml_str(config).map_err(err)?;
    let report = py.detach(|| harness::run_experiment(&cfg)).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn frozen_constants<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in harness::frozen_constants() {
        d.set_item(k, v)?;
    }
    Ok(d)
}

#[pymodule]
#[pyo3(name = "relu_moments")]
fn relu_moments_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyReluNetwork>()?;
    m.add_class::<PyAbsNetwork>()?;
    m.add_class::<PySymTensor>()?;
    m.add_function(wrap_pyfunction!(gen_instance, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_eval, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_normalized_eval, m)?)?;
    m.add_function(wrap_pyfunction!(relu_hermite_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_moments, m)?)?;
    m.add_function(wrap_pyfunction!(powersum_witness, m)?)?;
    m.add_function(wrap_pyfunction!(elementary_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(play_clumping, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(frozen_constants, m)?)?;
    m.add("SCHEMA_VERSION", harness::SCHEMA_VERSION)?;
    Ok(())
}
