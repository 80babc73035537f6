//! Python bindings. Structured inputs and outputs cross the boundary as plain
//! dicts and lists with the same shape as the JSON configuration files.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::de::DeserializeOwned;
use serde::Serialize;

use qdp_core::amplitude::{self, GroverOracleSim};
use qdp_core::circuit_estimator::{self, EstimatorConfig, Method};
use qdp_core::contracts::ContractSpec;
use qdp_core::gaussian_loader::{self, RyCnotAnsatz, TrainOptions};
use qdp_core::market_model::{GbmParams, GridSpec};
use qdp_core::pricing::{self, Sampling};
use qdp_core::qarith::{self, FixedPointFormat as CoreFormat, ResourceCount};
use qdp_core::{benchmarks, Error};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let json = obj.py().import("json")?;
    let text: String = json.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_method(name: &str) -> PyResult<Method> {
    name.parse().map_err(to_py_err)
}

/// Fixed-point register format: `n` bits of which `p` are integer bits.
#[pyclass(frozen, module = "qdp")]
struct FixedPointFormat {
    inner: CoreFormat,
}

#[pymethods]
impl FixedPointFormat {
    #[new]
    fn new(n: u32, p: u32) -> PyResult<Self> {
        Ok(Self {
            inner: CoreFormat::new(n, p).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n
    }

    #[getter]
    fn p(&self) -> u32 {
        self.inner.p
    }

    fn resolution(&self) -> f64 {
        self.inner.resolution()
    }

    fn __repr__(&self) -> String {
        format!("FixedPointFormat(n={}, p={})", self.inner.n, self.inner.p)
    }
}

#[pyclass(frozen, get_all, module = "qdp")]
struct Resources {
    toffoli_count: u64,
    t_count: u64,
    t_depth: u64,
    logical_qubits: u64,
}

impl From<ResourceCount> for Resources {
    fn from(r: ResourceCount) -> Self {
        Self {
            toffoli_count: r.toffoli_count,
            t_count: r.t_count,
            t_depth: r.t_depth,
            logical_qubits: r.logical_qubits,
        }
    }
}

#[pymethods]
impl Resources {
    fn __repr__(&self) -> String {
        format!(
            "Resources(toffoli_count={}, t_count={}, t_depth={}, logical_qubits={})",
            self.toffoli_count, self.t_count, self.t_depth, self.logical_qubits
        )
    }
}

/// Ry-CNOT ansatz with layer-major parameters.
#[pyclass(module = "qdp")]
struct Ansatz {
    inner: RyCnotAnsatz,
}

#[pymethods]
impl Ansatz {
    #[new]
    fn new(n: u32, layers: u32, params: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: RyCnotAnsatz::new(n, layers, params).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params.clone()
    }

    /// Real amplitudes of the prepared state, qubit 0 most significant.
    fn amplitudes(&self) -> PyResult<Vec<f64>> {
        gaussian_loader::simulate_ansatz(&self.inner).map_err(to_py_err)
    }

    /// Max deviation from the standard-normal masses on [-w, w].
    fn linf(&self, w: f64) -> PyResult<f64> {
        let target =
            gaussian_loader::LoaderTarget::standard_normal(self.inner.n, w).map_err(to_py_err)?;
        let amps = gaussian_loader::simulate_ansatz(&self.inner).map_err(to_py_err)?;
        gaussian_loader::linf_loss(&amps, &target).map_err(to_py_err)
    }

    fn digitize<'py>(&self, py: Python<'py>, m_digit: u64, w: f64) -> PyResult<Bound<'py, PyAny>> {
        let d = gaussian_loader::digitize(&self.inner, m_digit, w).map_err(to_py_err)?;
        to_py(py, &d)
    }
}

#[pyfunction]
fn add_resources(fmt: &FixedPointFormat) -> PyResult<Resources> {
    qarith::add_resources(&fmt.inner)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn mul_resources(fmt: &FixedPointFormat, z: u32) -> PyResult<Resources> {
    qarith::mul_resources(&fmt.inner, z)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn comparator_resources(fmt: &FixedPointFormat) -> PyResult<Resources> {
    qarith::comparator_resources(&fmt.inner)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn sqrt_resources(fmt: &FixedPointFormat) -> PyResult<Resources> {
    qarith::sqrt_resources(&fmt.inner)
        .map(Into::into)
        .map_err(to_py_err)
}

/// Worst-case oracle calls for half-width `epsilon` at confidence `1 - alpha`.
#[pyfunction]
fn oracle_call_bound(epsilon: f64, alpha: f64) -> PyResult<f64> {
    amplitude::oracle_call_bound(epsilon, alpha).map_err(to_py_err)
}

/// Simulated iterative amplitude estimation of a known amplitude `a`.
#[pyfunction]
#[pyo3(signature = (a, epsilon, alpha, seed=0))]
fn iqae<'py>(
    py: Python<'py>,
    a: f64,
    epsilon: f64,
    alpha: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut oracle = GroverOracleSim::new(a).map_err(to_py_err)?;
    let r = amplitude::iqae_estimate(&mut oracle, epsilon, alpha, seed).map_err(to_py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (a, epsilons, alpha=0.32, runs=200, seed=0))]
fn iqae_sweep<'py>(
    py: Python<'py>,
    a: f64,
    epsilons: Vec<f64>,
    alpha: f64,
    runs: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rows = py
        .detach(|| amplitude::iqae_sweep(a, &epsilons, alpha, runs, seed))
        .map_err(to_py_err)?;
    to_py(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (model, contract, paths=100_000, seed=0, sampling=None))]
fn mc_price<'py>(
    py: Python<'py>,
    model: &Bound<'py, PyAny>,
    contract: &Bound<'py, PyAny>,
    paths: u64,
    seed: u64,
    sampling: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let model: GbmParams = from_py(model)?;
    let contract: ContractSpec = from_py(contract)?;
    let sampling: Sampling = sampling.map(from_py).transpose()?.unwrap_or_default();
    let est = py
        .detach(|| pricing::mc_price_with(&model, &contract, paths, seed, sampling))
        .map_err(to_py_err)?;
    to_py(py, &est)
}

#[pyfunction]
fn exact_lattice_price<'py>(
    py: Python<'py>,
    model: &Bound<'py, PyAny>,
    contract: &Bound<'py, PyAny>,
    grid: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let model: GbmParams = from_py(model)?;
    let contract: ContractSpec = from_py(contract)?;
    let grid: GridSpec = from_py(grid)?;
    let p = py
        .detach(|| pricing::exact_lattice_price(&model, &contract, &grid))
        .map_err(to_py_err)?;
    to_py(py, &p)
}

/// End-to-end resources and error budget for one method.
#[pyfunction]
#[pyo3(signature = (method, model, contract, config=None, target_error=2e-3, confidence=0.68))]
fn estimate_resources<'py>(
    py: Python<'py>,
    method: &str,
    model: &Bound<'py, PyAny>,
    contract: &Bound<'py, PyAny>,
    config: Option<&Bound<'py, PyAny>>,
    target_error: f64,
    confidence: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let method = parse_method(method)?;
    let model: GbmParams = from_py(model)?;
    let contract: ContractSpec = from_py(contract)?;
    let cfg: EstimatorConfig = config.map(from_py).transpose()?.unwrap_or_default();
    let r =
        circuit_estimator::end_to_end(method, &model, &contract, &cfg, target_error, confidence)
            .map_err(to_py_err)?;
    to_py(py, &r)
}

/// The two benchmark contracts as `{"autocallable": {...}, "tarf": {...}}`,
/// each with `model` and `contract` entries.
#[pyfunction]
fn benchmark_contracts<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let (am, ac) = benchmarks::autocallable();
    let (tm, tc) = benchmarks::tarf();
    let doc = serde_json::json!({
        "autocallable": { "model": am, "contract": ac },
        "tarf": { "model": tm, "contract": tc },
    });
    to_py(py, &doc)
}

#[pyfunction]
fn published_table<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &benchmarks::PUBLISHED)
}

#[pyfunction]
#[pyo3(signature = (n, layers, seed=0, options=None))]
fn train_loader<'py>(
    py: Python<'py>,
    n: u32,
    layers: u32,
    seed: u64,
    options: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts: TrainOptions = options.map(from_py).transpose()?.unwrap_or_default();
    let r = py
        .detach(|| gaussian_loader::train_with(n, layers, seed, &opts, None))
        .map_err(to_py_err)?;
    to_py(py, &r)
}

#[pymodule]
fn qdp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FixedPointFormat>()?;
    m.add_class::<Resources>()?;
    m.add_class::<Ansatz>()?;
    m.add_function(wrap_pyfunction!(add_resources, m)?)?;
    m.add_function(wrap_pyfunction!(mul_resources, m)?)?;
    m.add_function(wrap_pyfunction!(comparator_resources, m)?)?;
    m.add_function(wrap_pyfunction!(sqrt_resources, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_call_bound, m)?)?;
    m.add_function(wrap_pyfunction!(iqae, m)?)?;
    m.add_function(wrap_pyfunction!(iqae_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(mc_price, m)?)?;
    m.add_function(wrap_pyfunction!(exact_lattice_price, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_resources, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark_contracts, m)?)?;
    m.add_function(wrap_pyfunction!(published_table, m)?)?;
    m.add_function(wrap_pyfunction!(train_loader, m)?)?;
    Ok(())
}
