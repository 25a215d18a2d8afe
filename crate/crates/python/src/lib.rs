//! Python bindings: skew-normal fitting, incremental scores, the test engine
//! and the experiment harness.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bhtest::harness::{run_experiment as run_experiment_rs, run_single, ExperimentSpec};
use bhtest::scores::{ScoreId, ScoreSet};
use bhtest::skewnormal::{self, SkewNormalParams};
use bhtest::{ActionDistribution, ActionId, EngineConfig, WeightingScheme};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn params(xi: f64, omega: f64, beta: f64) -> PyResult<SkewNormalParams> {
    SkewNormalParams::new(xi, omega, beta).map_err(err)
}

#[pyfunction]
fn sn_pdf(x: f64, xi: f64, omega: f64, beta: f64) -> PyResult<f64> {
    Ok(params(xi, omega, beta)?.pdf(x))
}

#[pyfunction]
fn sn_mode(xi: f64, omega: f64, beta: f64) -> PyResult<f64> {
    Ok(params(xi, omega, beta)?.mode())
}

#[pyfunction]
fn sn_nll(data: Vec<f64>, xi: f64, omega: f64, beta: f64) -> PyResult<f64> {
    Ok(skewnormal::nll(&data, &params(xi, omega, beta)?))
}

/// Method-of-moments estimate as `(xi, omega, beta)`.
#[pyfunction]
fn fit_mom(data: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let p = skewnormal::fit_mom(&data).map_err(err)?;
    Ok((p.xi, p.omega, p.beta))
}

#[pyclass(name = "FitResult", frozen)]
struct PyFitResult {
    inner: skewnormal::FitResult,
}

#[pymethods]
impl PyFitResult {
    #[getter]
    fn xi(&self) -> f64 {
        self.inner.params.xi
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.params.omega
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.params.beta
    }

    #[getter]
    fn nll(&self) -> f64 {
        self.inner.nll
    }

    #[getter]
    fn mode(&self) -> f64 {
        self.inner.mode
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate
    }

    fn p_value(&self, q: f64) -> f64 {
        self.inner.p_value(q)
    }

    fn __repr__(&self) -> String {
        let p = self.inner.params;
        format!(
            "FitResult(xi={}, omega={}, beta={}, nll={}, degenerate={})",
            p.xi, p.omega, p.beta, self.inner.nll, self.inner.degenerate
        )
    }
}

#[pyfunction]
fn fit_mle(data: Vec<f64>) -> PyResult<PyFitResult> {
    Ok(PyFitResult {
        inner: skewnormal::fit_mle(&data).map_err(err)?,
    })
}

#[pyclass(name = "ScoreTracker")]
struct PyScoreTracker {
    inner: bhtest::scores::ScoreTracker,
}

#[pymethods]
impl PyScoreTracker {
    #[new]
    fn new(actions: usize) -> Self {
        Self {
            inner: bhtest::scores::ScoreTracker::new(actions),
        }
    }

    fn update(&mut self, action: usize, probs: Vec<f64>) -> PyResult<()> {
        let d = ActionDistribution::new(probs).map_err(err)?;
        self.inner.update(ActionId(action), &d).map_err(err)
    }

    /// Current value of one score, by name (`"z1"`, `"z2"` or `"z3"`).
    fn value(&self, score: &str) -> PyResult<f64> {
        let id: ScoreId = score.parse().map_err(err)?;
        self.inner.value(id).map_err(err)
    }

    fn values(&self) -> PyResult<(f64, f64, f64)> {
        let [a, b, c] = self.inner.values(ScoreSet::ALL).map_err(err)?;
        Ok((a, b, c))
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.state().t()
    }
}

#[pyclass(name = "Engine")]
struct PyEngine {
    inner: bhtest::Engine,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (actions, scores = "z1,z2,z3", scheme = "uniform", n_replicates = 50, alpha = 0.01, seed = 0))]
    fn new(
        actions: usize,
        scores: &str,
        scheme: &str,
        n_replicates: usize,
        alpha: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = EngineConfig {
            score_ids: scores.parse().map_err(err)?,
            scheme: scheme.parse::<WeightingScheme>().map_err(err)?,
            n_replicates,
            alpha,
            seed,
            ..EngineConfig::new(actions)
        };
        Ok(Self {
            inner: bhtest::Engine::new(cfg).map_err(err)?,
        })
    }

    /// Absorbs one observed action given the hypothesised distribution for
    /// this step; returns a dict with `t, q, p, reject, refit`.
    fn step<'py>(
        &mut self,
        py: Python<'py>,
        observed: usize,
        probs: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let d = ActionDistribution::new(probs).map_err(err)?;
        let out = self.inner.step(ActionId(observed), &d).map_err(err)?;
        let dict = PyDict::new(py);
        dict.set_item("t", out.t)?;
        dict.set_item("q", out.q)?;
        dict.set_item("p", out.p)?;
        dict.set_item("reject", out.reject)?;
        dict.set_item("refit", out.refit)?;
        Ok(dict)
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    fn replicate_statistics(&self) -> Vec<f64> {
        self.inner.replicate_statistics()
    }
}

fn spec_from(config: Option<&str>) -> PyResult<ExperimentSpec> {
    let spec: ExperimentSpec = match config {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => ExperimentSpec::default(),
    };
    spec.validate().map_err(err)?;
    Ok(spec)
}

/// Runs a batch experiment from a JSON config (defaults when omitted) and
/// returns `{"acc_null": ..., "acc_alt": ...}`.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn run_experiment<'py>(py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec_from(config)?;
    let report = py.detach(|| run_experiment_rs(&spec)).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("acc_null", report.acc_null)?;
    dict.set_item("acc_alt", report.acc_alt)?;
    dict.set_item("mean_p_alt", report.mean_p_alt)?;
    dict.set_item("mean_p_null", report.mean_p_null)?;
    Ok(dict)
}

/// Simulates one process; returns the trace as a list of
/// `(t, q, xi, omega, beta, p, reject, refit)` tuples.
#[pyfunction]
#[pyo3(signature = (config = None, process = 0))]
#[allow(clippy::type_complexity)]
fn simulate(
    py: Python<'_>,
    config: Option<&str>,
    process: usize,
) -> PyResult<Vec<(usize, f64, f64, f64, f64, f64, bool, bool)>> {
    let mut spec = spec_from(config)?;
    spec.processes = spec.processes.max(process + 1);
    let run = py.detach(|| run_single(&spec, process)).map_err(err)?;
    Ok(run
        .trace
        .iter()
        .map(|r| (r.t, r.q, r.xi, r.omega, r.beta, r.p, r.reject, r.refit_flag))
        .collect())
}

#[pymodule]
fn pybhtest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sn_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(sn_mode, m)?)?;
    m.add_function(wrap_pyfunction!(sn_nll, m)?)?;
    m.add_function(wrap_pyfunction!(fit_mom, m)?)?;
    m.add_function(wrap_pyfunction!(fit_mle, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_class::<PyFitResult>()?;
    m.add_class::<PyScoreTracker>()?;
    m.add_class::<PyEngine>()?;
    Ok(())
}
