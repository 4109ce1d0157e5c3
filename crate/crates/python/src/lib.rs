//! Python bindings. Results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use rdb_core::balance::{rdb_weighted, rdb_with_weights};
use rdb_core::continuous::{rdb_continuous, ContinuousDesign};
use rdb_core::data::{split_groups, to_proportions, CountMatrix, TwoSampleDesign};
use rdb_core::engine::{default_thresholds, oracle_noiseless, BalanceWeights, MedianThreshold};
use rdb_core::error_control::TailLaw;
use rdb_core::simbench::{run_scenario, EffectSetting, Method, Scenario, ScenarioKind};
use rdb_core::{rdb_iterate, ErrorMode, RdbError};

fn err(e: RdbError) -> PyErr {
    match e {
        RdbError::Replicate { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn default_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("c{i}")).collect()
}

/// Procedure settings shared by every test.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: rdb_core::RdbConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (alpha=0.1, r_q=0.2, median_threshold=None, mode="fwer", fdr_tail="rayleigh", group1=None))]
    fn new(
        alpha: f64,
        r_q: f64,
        median_threshold: Option<f64>,
        mode: &str,
        fdr_tail: &str,
        group1: Option<String>,
    ) -> PyResult<Self> {
        let mode = match mode {
            "fwer" => ErrorMode::Fwer,
            "fdr" => ErrorMode::Fdr,
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        };
        let fdr_tail = match fdr_tail {
            "rayleigh" => TailLaw::Rayleigh,
            "halfnormal" => TailLaw::HalfNormal,
            other => return Err(PyValueError::new_err(format!("unknown tail law `{other}`"))),
        };
        let inner = rdb_core::RdbConfig {
            alpha,
            r_q,
            median_threshold: median_threshold.map_or(MedianThreshold::Auto, MedianThreshold::Fixed),
            mode,
            fdr_tail,
            group1_override: group1,
            ..Default::default()
        };
        inner.validate().map_err(err)?;
        Ok(PyConfig { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn r_q(&self) -> f64 {
        self.inner.r_q
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode {
            ErrorMode::Fwer => "fwer",
            ErrorMode::Fdr => "fdr",
        }
    }

    /// Median band and critical values for `d` components.
    fn thresholds<'py>(&self, py: Python<'py>, d: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &default_thresholds(d, &self.inner).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(alpha={}, r_q={}, mode='{}')",
            self.inner.alpha,
            self.inner.r_q,
            self.mode()
        )
    }
}

fn cfg(config: Option<PyConfig>) -> rdb_core::RdbConfig {
    config.map(|c| c.inner).unwrap_or_default()
}

/// Builds a design from per-sample compositions.
fn design(
    group1: Vec<Vec<f64>>,
    group2: Vec<Vec<f64>>,
    component_ids: Option<Vec<String>>,
) -> PyResult<TwoSampleDesign> {
    let d = group1.first().or(group2.first()).map_or(0, Vec::len);
    let ids = component_ids.unwrap_or_else(|| default_ids(d));
    TwoSampleDesign::from_groups(ids, group1, group2).map_err(err)
}

/// Two-group test on proportions. `group1` and `group2` hold one
/// composition per sample.
#[pyfunction]
#[pyo3(signature = (group1, group2, component_ids=None, config=None))]
fn test_two_group<'py>(
    py: Python<'py>,
    group1: Vec<Vec<f64>>,
    group2: Vec<Vec<f64>>,
    component_ids: Option<Vec<String>>,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let design = design(group1, group2, component_ids)?;
    to_py(py, &rdb_iterate(&design, &cfg(config)).map_err(err)?)
}

/// Two-group test on a count table (`counts[component][sample]`).
#[pyfunction]
#[pyo3(signature = (counts, labels, component_ids=None, sample_ids=None, config=None))]
fn test_counts<'py>(
    py: Python<'py>,
    counts: Vec<Vec<u64>>,
    labels: Vec<String>,
    component_ids: Option<Vec<String>>,
    sample_ids: Option<Vec<String>>,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let n = counts.first().map_or(0, Vec::len);
    let ids = component_ids.unwrap_or_else(|| default_ids(counts.len()));
    let samples = sample_ids.unwrap_or_else(|| (1..=n).map(|j| format!("s{j}")).collect());
    let cfg = cfg(config);
    let matrix = CountMatrix::new(ids, samples, counts).map_err(err)?;
    let comp = to_proportions(&matrix).map_err(err)?;
    let design = split_groups(&comp, &labels, cfg.group1_override.as_deref()).map_err(err)?;
    to_py(py, &rdb_iterate(&design, &cfg).map_err(err)?)
}

/// Weighted two-group test. Pass either covariates (`x1`, `x2`, one row per
/// sample) for calibration, or explicit per-sample weights `w1`, `w2`.
#[pyfunction]
#[pyo3(signature = (group1, group2, x1=None, x2=None, w1=None, w2=None, component_ids=None, config=None))]
#[allow(clippy::too_many_arguments)]
fn test_weighted<'py>(
    py: Python<'py>,
    group1: Vec<Vec<f64>>,
    group2: Vec<Vec<f64>>,
    x1: Option<Vec<Vec<f64>>>,
    x2: Option<Vec<Vec<f64>>>,
    w1: Option<Vec<f64>>,
    w2: Option<Vec<f64>>,
    component_ids: Option<Vec<String>>,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let design = design(group1, group2, component_ids)?;
    let cfg = cfg(config);
    let outcome = match (x1, x2, w1, w2) {
        (Some(x1), Some(x2), None, None) => rdb_weighted(&design, [&x1, &x2], None, &cfg),
        (None, None, Some(w1), Some(w2)) => {
            let weights = BalanceWeights {
                w1,
                w2,
                solver_report: None,
            };
            rdb_with_weights(&design, &weights, &cfg)
        }
        _ => {
            return Err(PyValueError::new_err(
                "give either both covariate matrices or both weight vectors",
            ))
        }
    };
    to_py(py, &outcome.map_err(err)?)
}

/// Continuous-outcome test. `props` holds one composition per sample.
#[pyfunction]
#[pyo3(signature = (props, outcome, component_ids=None, config=None))]
fn test_continuous<'py>(
    py: Python<'py>,
    props: Vec<Vec<f64>>,
    outcome: Vec<f64>,
    component_ids: Option<Vec<String>>,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let d = props.first().map_or(0, Vec::len);
    let ids = component_ids.unwrap_or_else(|| default_ids(d));
    let data = ContinuousDesign::new(ids, props, outcome).map_err(err)?;
    to_py(py, &rdb_continuous(&data, &cfg(config)).map_err(err)?)
}

/// The recursion on known expected proportions, without sampling noise.
#[pyfunction]
fn oracle<'py>(py: Python<'py>, q1: Vec<f64>, q2: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &oracle_noiseless(&q1, &q2).map_err(err)?)
}

/// Runs a simulation benchmark and returns the performance report.
#[pyfunction]
#[pyo3(signature = (
    scenario, d, s, m1, reps, seed, m2=None, setting=1, methods="RDB",
    beta=1.0, rho=0.0, eta=0.25, threads=0, config=None
))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    scenario: &str,
    d: usize,
    s: usize,
    m1: usize,
    reps: usize,
    seed: u64,
    m2: Option<usize>,
    setting: u8,
    methods: &str,
    beta: f64,
    rho: f64,
    eta: f64,
    threads: usize,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: ScenarioKind = scenario.parse().map_err(err)?;
    if kind == ScenarioKind::Shuffle {
        return Err(PyValueError::new_err("the shuffle scenario is only available from files"));
    }
    let setting = EffectSetting::from_number(setting).map_err(err)?;
    let mut sc = Scenario::new(kind, d, s, m1, m2.unwrap_or(m1), setting, seed);
    sc.beta = beta;
    sc.rho = rho;
    sc.eta = eta;
    let methods = Method::parse_list(methods).map_err(err)?;
    let cfg = cfg(config);
    let report = py
        .detach(|| run_scenario(&sc, &methods, reps, &cfg, threads))
        .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn rdb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(test_two_group, m)?)?;
    m.add_function(wrap_pyfunction!(test_counts, m)?)?;
    m.add_function(wrap_pyfunction!(test_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(test_continuous, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
