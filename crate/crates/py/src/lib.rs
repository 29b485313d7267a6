//! Python bindings for the mvsbm toolkit: model construction,
//! divergence evaluators, seeded sampling, estimators, bounds, and
//! sweeps.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mvsbm::{
    bounds, divergence, estimators, harness, model, sampler, Error as CoreError,
};

fn to_py_err(err: CoreError) -> PyErr {
    PyValueError::new_err(format!("{}: {}", err.code(), err))
}

trait OrPyErr<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPyErr<T> for Result<T, CoreError> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// A probability mass function over D-bit connection vectors.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Distribution {
    inner: model::DistributionOnHypercube,
}

#[pymethods]
impl Distribution {
    #[new]
    fn new(mass: Vec<f64>, num_views: usize) -> PyResult<Self> {
        Ok(Self {
            inner: model::DistributionOnHypercube::validate(mass, num_views).or_py()?,
        })
    }

    #[getter]
    fn mass(&self) -> Vec<f64> {
        self.inner.mass().to_vec()
    }

    #[getter]
    fn num_views(&self) -> usize {
        self.inner.num_views()
    }

    fn __repr__(&self) -> String {
        format!("Distribution(D={}, mass={:?})", self.inner.num_views(), self.inner.mass())
    }
}

/// Validated MVSBM parameters (n, D, p, q).
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Params {
    inner: model::MvsbmParams,
}

#[pymethods]
impl Params {
    #[new]
    fn new(n: usize, within: Distribution, across: Distribution) -> PyResult<Self> {
        Ok(Self { inner: model::MvsbmParams::new(n, within.inner, across.inner).or_py()? })
    }

    #[staticmethod]
    fn bernoulli(p1: f64, q1: f64, n: usize) -> PyResult<Self> {
        Ok(Self { inner: model::make_bernoulli_sbm(p1, q1, n).or_py()? })
    }

    #[staticmethod]
    fn identical_views(alpha: f64, beta: f64, num_views: usize, n: usize) -> PyResult<Self> {
        Ok(Self { inner: model::make_identical_views(alpha, beta, num_views, n).or_py()? })
    }

    #[staticmethod]
    fn independent_views(p_list: Vec<f64>, q_list: Vec<f64>, n: usize) -> PyResult<Self> {
        Ok(Self { inner: model::make_independent_views(&p_list, &q_list, n).or_py()? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: model::ModelSpec::from_json(text).or_py()?.to_params().or_py()? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_views(&self) -> usize {
        self.inner.num_views()
    }

    #[getter]
    fn within(&self) -> Distribution {
        Distribution { inner: self.inner.within().clone() }
    }

    #[getter]
    fn across(&self) -> Distribution {
        Distribution { inner: self.inner.across().clone() }
    }

    fn __repr__(&self) -> String {
        format!("Params(n={}, D={})", self.inner.n(), self.inner.num_views())
    }
}

/// Per-pair connection vectors for all unordered node pairs.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Tensor {
    inner: sampler::AdjacencyTensor,
}

#[pymethods]
impl Tensor {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_views(&self) -> usize {
        self.inner.num_views()
    }

    #[getter]
    fn pair_masks(&self) -> Vec<u16> {
        self.inner.pair_masks().to_vec()
    }

    fn mask(&self, i: usize, j: usize) -> u16 {
        self.inner.mask(i, j)
    }

    fn edge(&self, view: usize, i: usize, j: usize) -> bool {
        self.inner.edge(view, i, j)
    }

    /// Edge-list lines "view i j", one per set bit.
    fn edge_list(&self) -> String {
        sampler::edge_list_string(&self.inner)
    }

    /// Binary serialization including the generating seed.
    fn to_bytes(&self, master_seed: u64, trial_index: u64) -> Vec<u8> {
        sampler::tensor_to_bytes(&self.inner, sampler::SeedSpec::new(master_seed, trial_index))
    }

    #[staticmethod]
    fn from_bytes(data: Vec<u8>) -> PyResult<(Tensor, u64, u64)> {
        let (tensor, seed) = sampler::tensor_from_bytes(&data).or_py()?;
        Ok((Tensor { inner: tensor }, seed.master_seed, seed.trial_index))
    }
}

#[pyfunction]
fn renyi_half(p: &Distribution, q: &Distribution) -> PyResult<f64> {
    divergence::renyi_half(&p.inner, &q.inner).or_py()
}

#[pyfunction]
fn chernoff_t(p: &Distribution, q: &Distribution, t: f64) -> PyResult<f64> {
    divergence::chernoff_t(&p.inner, &q.inner, t).or_py()
}

#[pyfunction]
fn kl(a: &Distribution, b: &Distribution) -> PyResult<f64> {
    divergence::kl(&a.inner, &b.inner).or_py()
}

#[pyfunction]
fn geometric_tilt(p: &Distribution, q: &Distribution) -> PyResult<(Distribution, Distribution)> {
    let tilt = divergence::geometric_tilt(&p.inner, &q.inner).or_py()?;
    Ok((Distribution { inner: tilt.p_tilt }, Distribution { inner: tilt.q_tilt }))
}

/// Divergence report plus assumption diagnostics, as a dict.
#[pyfunction]
fn threshold_report<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let report = divergence::threshold_stat(&params.inner).or_py()?;
    let assumptions = model::check_assumptions(&params.inner);
    let dict = PyDict::new(py);
    dict.set_item("renyi_half", report.renyi_half)?;
    dict.set_item("threshold_stat", report.threshold_stat)?;
    dict.set_item("kl_p_tilt_p", report.kl_p_tilt_p)?;
    dict.set_item("kl_q_tilt_q", report.kl_q_tilt_q)?;
    dict.set_item("ratio_eq51", report.ratio_eq51)?;
    dict.set_item("rho", assumptions.rho)?;
    dict.set_item("p_bar", assumptions.p_bar)?;
    dict.set_item("separation", assumptions.separation)?;
    dict.set_item("a1_holds", assumptions.a1_holds)?;
    dict.set_item("a2_value_positive", assumptions.a2_value_positive)?;
    Ok(dict)
}

#[pyfunction]
fn sample_labeling(n: usize, master_seed: u64, trial_index: u64) -> PyResult<Vec<i8>> {
    let labeling =
        sampler::sample_labeling(n, sampler::SeedSpec::new(master_seed, trial_index)).or_py()?;
    Ok(labeling.signs().to_vec())
}

#[pyfunction]
fn sample_tensor(
    params: &Params,
    truth: Vec<i8>,
    master_seed: u64,
    trial_index: u64,
) -> PyResult<Tensor> {
    let truth = sampler::Labeling::new(truth).or_py()?;
    let tensor = sampler::sample_tensor(
        &params.inner,
        &truth,
        sampler::SeedSpec::new(master_seed, trial_index),
    )
    .or_py()?;
    Ok(Tensor { inner: tensor })
}

#[pyfunction]
fn sample_tensor_psi(
    params: &Params,
    p_tilt: &Distribution,
    q_tilt: &Distribution,
    truth: Vec<i8>,
    master_seed: u64,
    trial_index: u64,
) -> PyResult<Tensor> {
    let truth = sampler::Labeling::new(truth).or_py()?;
    let tilt = divergence::TiltedPair {
        p_tilt: p_tilt.inner.clone(),
        q_tilt: q_tilt.inner.clone(),
    };
    let tensor = sampler::sample_tensor_psi(
        &params.inner,
        &tilt,
        &truth,
        sampler::SeedSpec::new(master_seed, trial_index),
    )
    .or_py()?;
    Ok(Tensor { inner: tensor })
}

fn estimate_dict<'py>(
    py: Python<'py>,
    result: estimators::EstimateResult,
) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("labeling", result.labeling.signs().to_vec())?;
    dict.set_item("score", result.score)?;
    dict.set_item("tie", result.tie)?;
    dict.set_item("candidates_scanned", result.num_candidates_scanned)?;
    Ok(dict)
}

#[pyfunction]
fn ml_exact<'py>(py: Python<'py>, params: &Params, tensor: &Tensor) -> PyResult<Bound<'py, PyDict>> {
    estimate_dict(py, estimators::ml_exact(&params.inner, &tensor.inner).or_py()?)
}

#[pyfunction]
fn ml_heuristic<'py>(
    py: Python<'py>,
    params: &Params,
    tensor: &Tensor,
    restarts: usize,
) -> PyResult<Bound<'py, PyDict>> {
    estimate_dict(py, estimators::ml_heuristic(&params.inner, &tensor.inner, restarts).or_py()?)
}

/// Minimum-over-flip Hamming distance and exactness flag.
#[pyfunction]
fn recovery(estimate: Vec<i8>, truth: Vec<i8>) -> PyResult<(usize, bool)> {
    let estimate = sampler::Labeling::new(estimate).or_py()?;
    let truth = sampler::Labeling::new(truth).or_py()?;
    let metrics = estimators::recovery_metrics(&estimate, &truth).or_py()?;
    Ok((metrics.mis_count, metrics.exact))
}

#[pyfunction]
fn union_bound_report<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let report = bounds::ml_union_bound(&params.inner).or_py()?;
    let dict = PyDict::new(py);
    dict.set_item("renyi_half", report.renyi_half)?;
    dict.set_item("union_bound", report.union_bound)?;
    dict.set_item("epsilon_margin", report.epsilon_margin)?;
    let terms: Vec<(usize, f64, f64, f64)> = report
        .per_k_terms
        .iter()
        .map(|t| (t.k, t.count_log, t.exponent, t.term))
        .collect();
    dict.set_item("per_k", terms)?;
    Ok(dict)
}

#[pyfunction]
fn synthesize_point(
    n: usize,
    num_views: usize,
    target_tau: f64,
    shape: &str,
    q_edge: f64,
) -> PyResult<Params> {
    let shape: harness::PointShape = shape.parse().or_py()?;
    Ok(Params { inner: harness::synthesize_point(n, num_views, target_tau, shape, q_edge).or_py()? })
}

/// Runs a sweep from a JSON config string and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (config_json, threads = 0))]
fn run_sweep_csv(config_json: &str, threads: usize) -> PyResult<String> {
    let config = harness::ExperimentConfig::from_json(config_json).or_py()?;
    let result = if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| PyValueError::new_err(e.to_string()))?
            .install(|| harness::run_sweep(&config))
            .or_py()?
    } else {
        harness::run_sweep(&config).or_py()?
    };
    Ok(harness::sweep_csv(&result))
}

#[pymodule]
fn mvsbm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Distribution>()?;
    m.add_class::<Params>()?;
    m.add_class::<Tensor>()?;
    m.add_function(wrap_pyfunction!(renyi_half, m)?)?;
    m.add_function(wrap_pyfunction!(chernoff_t, m)?)?;
    m.add_function(wrap_pyfunction!(kl, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_tilt, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_report, m)?)?;
    m.add_function(wrap_pyfunction!(sample_labeling, m)?)?;
    m.add_function(wrap_pyfunction!(sample_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(sample_tensor_psi, m)?)?;
    m.add_function(wrap_pyfunction!(ml_exact, m)?)?;
    m.add_function(wrap_pyfunction!(ml_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(recovery, m)?)?;
    m.add_function(wrap_pyfunction!(union_bound_report, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_point, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep_csv, m)?)?;
    Ok(())
}
