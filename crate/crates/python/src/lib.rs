//! Python bindings: creep models, datasets, fitting, sensitivity,
//! propagation, scoring and the whole pipeline.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use creep_uq_core::dataset::{self, CreepDataset, CreepRecord, TemperatureUnit, WinsorSpec};
use creep_uq_core::models::{self, CreepModelKind, FittedCreepModel, ParameterName, PolynomialLaw};
use creep_uq_core::pipeline::{Overrides, Pipeline, PipelineConfig};
use creep_uq_core::propagation::{self, GaussianParameterModel};
use creep_uq_core::regression::{self, ConstantSearch, CvOptions, DesignMatrix, StlsConfig};
use creep_uq_core::selection::{self, ModelScore};
use creep_uq_core::sensitivity::{self, SobolReport};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_kind(kind: &str) -> PyResult<CreepModelKind> {
    kind.parse().map_err(value_err)
}

fn parse_names(names: &[String]) -> PyResult<Vec<ParameterName>> {
    names.iter().map(|n| n.parse().map_err(value_err)).collect()
}

/// A fitted time-temperature-parameter creep law.
#[pyclass(name = "CreepModel", module = "creep_uq", skip_from_py_object)]
#[derive(Clone)]
struct PyCreepModel {
    inner: FittedCreepModel,
}

#[pymethods]
impl PyCreepModel {
    #[new]
    fn new(kind: &str, coefficients: Vec<f64>, constant: f64) -> PyResult<Self> {
        let law = PolynomialLaw::new(coefficients).map_err(value_err)?;
        let inner = FittedCreepModel::new(parse_kind(kind)?, law, constant).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// The 1CrMoV reference law of the given kind.
    #[staticmethod]
    fn reference(kind: &str) -> PyResult<Self> {
        let inner = match parse_kind(kind)? {
            CreepModelKind::LarsonMiller => creep_uq_core::fixtures::reference_lm_model(),
            CreepModelKind::OrrSherbyDorn => creep_uq_core::fixtures::reference_osd_model(),
            CreepModelKind::MansonSuccop => creep_uq_core::fixtures::reference_ms_model(),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.law().coefficients().to_vec()
    }

    #[getter]
    fn constant(&self) -> f64 {
        self.inner.constant()
    }

    fn parameter_names(&self) -> Vec<String> {
        self.inner.parameter_names().iter().map(|n| n.to_string()).collect()
    }

    fn log10_rupture_time(&self, stress: f64, temperature: f64) -> f64 {
        self.inner.log10_rupture_time(stress, temperature)
    }

    fn rupture_time(&self, stress: f64, temperature: f64) -> PyResult<f64> {
        models::rupture_time(&self.inner, stress, temperature).map_err(value_err)
    }

    /// Gradient of `log10 t_r` with respect to the named parameters.
    fn predictor_partials(&self, stress: f64, temperature: f64, names: Vec<String>) -> PyResult<Vec<f64>> {
        models::predictor_partials(&self.inner, stress, temperature, &parse_names(&names)?).map_err(value_err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("model serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(value_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "CreepModel(kind='{}', coefficients={:?}, constant={})",
            self.inner.kind().abbreviation(),
            self.inner.law().coefficients(),
            self.inner.constant()
        )
    }
}

/// Creep-rupture records `(stress MPa, temperature K, rupture time h)`.
#[pyclass(name = "Dataset", module = "creep_uq", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: CreepDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (records, label = "python"))]
    fn new(records: Vec<(f64, f64, f64)>, label: &str) -> PyResult<Self> {
        let records = records
            .into_iter()
            .map(|(s, t, r)| CreepRecord::new(s, t, r))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        Ok(Self {
            inner: CreepDataset::new(records, label).map_err(value_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, temperature_unit = "kelvin"))]
    fn from_csv(path: PathBuf, temperature_unit: &str) -> PyResult<Self> {
        let unit = match temperature_unit.to_ascii_lowercase().as_str() {
            "kelvin" | "k" => TemperatureUnit::Kelvin,
            "celsius" | "c" => TemperatureUnit::Celsius,
            other => return Err(value_err(format!("unknown temperature unit {other}"))),
        };
        Ok(Self {
            inner: dataset::load_csv(path, unit).map_err(value_err)?,
        })
    }

    /// Records from a model with Gaussian noise on `log10 t_r`.
    #[staticmethod]
    #[pyo3(signature = (model, conditions, noise_sd = 0.05, seed = 0))]
    fn synthesize(model: &PyCreepModel, conditions: Vec<(f64, f64)>, noise_sd: f64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::synthesize_dataset(&model.inner, &conditions, noise_sd, seed).map_err(value_err)?,
        })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        dataset::write_csv(&self.inner, path).map_err(runtime_err)
    }

    fn records(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .records()
            .iter()
            .map(|r| (r.stress, r.temperature, r.rupture_time))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Multivariate Gaussian over the random parameters of one creep law.
#[pyclass(name = "GaussianModel", module = "creep_uq", skip_from_py_object)]
#[derive(Clone)]
struct PyGaussianModel {
    inner: GaussianParameterModel,
}

#[pymethods]
impl PyGaussianModel {
    /// `Σ = σ_e² (AᵀA)⁻¹` from residuals of `model` on `dataset`. All model
    /// parameters are random unless `retained` is given.
    #[staticmethod]
    #[pyo3(signature = (dataset, model, retained = None))]
    fn from_fit(dataset: &PyDataset, model: &PyCreepModel, retained: Option<Vec<String>>) -> PyResult<Self> {
        let names = match retained {
            Some(r) => parse_names(&r)?,
            None => model.inner.parameter_names(),
        };
        let var = propagation::error_variance(&dataset.inner, &model.inner).map_err(value_err)?;
        let inner = propagation::parameter_covariance(&dataset.inner, &model.inner, &names, var).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[new]
    #[pyo3(signature = (kind, names, mean, covariance, frozen = None, error_variance = 0.0))]
    fn new(
        kind: &str,
        names: Vec<String>,
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        frozen: Option<BTreeMap<String, f64>>,
        error_variance: f64,
    ) -> PyResult<Self> {
        let frozen = frozen
            .unwrap_or_default()
            .into_iter()
            .map(|(k, v)| Ok((k.parse::<ParameterName>().map_err(value_err)?, v)))
            .collect::<PyResult<_>>()?;
        let inner = GaussianParameterModel::new(parse_kind(kind)?, parse_names(&names)?, mean, covariance, frozen, error_variance)
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().iter().map(|n| n.to_string()).collect()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean().to_vec()
    }

    #[getter]
    fn covariance(&self) -> Vec<Vec<f64>> {
        self.inner.covariance().to_vec()
    }

    #[getter]
    fn frozen(&self) -> BTreeMap<String, f64> {
        self.inner.frozen().iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[getter]
    fn error_variance(&self) -> f64 {
        self.inner.error_variance()
    }

    fn marginal(&self, retained: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.marginal(&parse_names(&retained)?).map_err(value_err)?,
        })
    }

    /// Nearest PSD model by eigenvalue clipping and the Frobenius correction.
    fn repaired(&self) -> (Self, f64) {
        let (inner, correction) = self.inner.repaired();
        (Self { inner }, correction)
    }

    /// `(names, lower, upper)` of the box `μ ± width·SE`.
    #[pyo3(signature = (width = 3.0))]
    fn input_box(&self, width: f64) -> PyResult<(Vec<String>, Vec<f64>, Vec<f64>)> {
        let spec = self.inner.input_box(width).map_err(value_err)?;
        Ok((spec.names().to_vec(), spec.lower().to_vec(), spec.upper().to_vec()))
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        py.detach(|| propagation::sample_parameters(&self.inner, n, seed)).map_err(value_err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("model serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(value_err)?,
        })
    }
}

fn report_dict<'py>(py: Python<'py>, report: &SobolReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let first = PyDict::new(py);
    let total = PyDict::new(py);
    for (i, name) in report.names.iter().enumerate() {
        first.set_item(name, report.first_order[i])?;
        total.set_item(name, report.total[i])?;
    }
    d.set_item("first_order", first)?;
    d.set_item("total", total)?;
    d.set_item("estimator", report.estimator.label())?;
    d.set_item("samples", report.sample_count)?;
    Ok(d)
}

fn score_dict<'py>(py: Python<'py>, s: &ModelScore) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("model", s.kind.name())?;
    d.set_item("log_likelihood", s.log_likelihood)?;
    d.set_item("aic", s.aic)?;
    d.set_item("bic", s.bic)?;
    d.set_item("n_params", s.n_params)?;
    d.set_item("n_obs", s.n_obs)?;
    Ok(d)
}

/// Percentile winsorization with linear interpolation between ranks.
#[pyfunction]
#[pyo3(signature = (values, lower = 0.05, upper = 0.95))]
fn winsorize(values: Vec<f64>, lower: f64, upper: f64) -> PyResult<Vec<f64>> {
    let spec = WinsorSpec::new(lower, upper).map_err(value_err)?;
    dataset::winsorize(&values, &spec).map_err(value_err)
}

/// Sequential thresholded least squares of `y` on `[1, σ, …, σ^max_degree]`.
#[pyfunction]
#[pyo3(signature = (stresses, y, threshold, max_degree = 8))]
fn stls(stresses: Vec<f64>, y: Vec<f64>, threshold: f64, max_degree: usize) -> PyResult<Vec<f64>> {
    let a = DesignMatrix::polynomial(&stresses, max_degree);
    let fit = regression::stls(&a, &y, &StlsConfig::new(threshold, max_degree)).map_err(value_err)?;
    Ok(fit.law.coefficients().to_vec())
}

/// Fit the constant and the sparse law by cross-validated STLS. Returns
/// `(model, objective)`.
#[pyfunction]
#[pyo3(signature = (
    dataset, kind, threshold = None, max_degree = 8, cv_iterations = 100,
    split = 0.8, seed = 0, winsor = Some((0.05, 0.95)), bracket = None
))]
#[allow(clippy::too_many_arguments)]
fn fit_model(
    py: Python<'_>,
    dataset: &PyDataset,
    kind: &str,
    threshold: Option<f64>,
    max_degree: usize,
    cv_iterations: usize,
    split: f64,
    seed: u64,
    winsor: Option<(f64, f64)>,
    bracket: Option<(f64, f64)>,
) -> PyResult<(PyCreepModel, f64)> {
    let kind = parse_kind(kind)?;
    let cfg = StlsConfig::new(threshold.unwrap_or_else(|| kind.default_threshold()), max_degree);
    let cv = CvOptions {
        iterations: cv_iterations,
        split,
        seed,
    };
    let winsor = winsor.map(|(lo, hi)| WinsorSpec::new(lo, hi)).transpose().map_err(value_err)?;
    let search = ConstantSearch {
        bracket,
        ..ConstantSearch::default()
    };
    let fit = py
        .detach(|| regression::fit_constant_and_law(&dataset.inner, kind, &cfg, &cv, winsor.as_ref(), &search))
        .map_err(value_err)?;
    Ok((PyCreepModel { inner: fit.model }, fit.objective))
}

/// Sobol indices of `t_r` at one condition over the `μ ± width·SE` box of
/// the Gaussian model, by Monte Carlo and PCE.
#[pyfunction]
#[pyo3(signature = (gaussian, stress, temperature, width = 3.0, n_mc = 10_000, n_pce = 1_000, degree = 10, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn sobol_indices<'py>(
    py: Python<'py>,
    gaussian: &PyGaussianModel,
    stress: f64,
    temperature: f64,
    width: f64,
    n_mc: usize,
    n_pce: usize,
    degree: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let g = &gaussian.inner;
    let (mc, pce, used) = py
        .detach(|| -> Result<_, String> {
            let spec = g.input_box(width).map_err(|e| e.to_string())?;
            let map = g.parameter_map();
            let f = |x: &[f64]| map.rupture_time(x, stress, temperature).unwrap_or(f64::NAN);
            let mc = sensitivity::sobol_mc(&f, &spec, n_mc, seed).map_err(|e| e.to_string())?;
            let used = sensitivity::feasible_degree(spec.dim(), n_pce, degree)
                .ok_or_else(|| format!("{n_pce} samples cannot support any PCE basis"))?;
            let exp = sensitivity::pce_fit(&f, &spec, n_pce, used, seed.wrapping_add(1)).map_err(|e| e.to_string())?;
            let pce = sensitivity::sobol_from_pce(&exp).map_err(|e| e.to_string())?;
            Ok((mc, pce, used))
        })
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("mc", report_dict(py, &mc)?)?;
    d.set_item("pce", report_dict(py, &pce)?)?;
    d.set_item("pce_degree", used)?;
    Ok(d)
}

/// Monte Carlo rupture-time distribution at one condition.
#[pyfunction]
#[pyo3(signature = (gaussian, stress, temperature, n = 10_000, seed = 0, bins = 50))]
fn propagate<'py>(
    py: Python<'py>,
    gaussian: &PyGaussianModel,
    stress: f64,
    temperature: f64,
    n: usize,
    seed: u64,
    bins: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let (e, hist) = py
        .detach(|| -> Result<_, String> {
            let e = propagation::propagate(&gaussian.inner, (stress, temperature), n, seed).map_err(|e| e.to_string())?;
            let hist = e.histogram(bins).map_err(|e| e.to_string())?;
            Ok((e, hist))
        })
        .map_err(value_err)?;
    let d = PyDict::new(py);
    let s = &e.stats;
    d.set_item("mean", s.mean)?;
    d.set_item("std", s.std)?;
    d.set_item("cov", s.cov)?;
    d.set_item("skewness", s.skewness)?;
    d.set_item("excess_kurtosis", s.excess_kurtosis)?;
    d.set_item("kurtosis", s.kurtosis)?;
    d.set_item("median", s.median)?;
    d.set_item("ci95", e.ci95)?;
    d.set_item("n_overflow", e.n_overflow)?;
    d.set_item("hist_edges", hist.edges)?;
    d.set_item("hist_counts", hist.counts)?;
    d.set_item("samples", e.samples)?;
    Ok(d)
}

/// Log-likelihood, AIC and BIC of a fitted model.
#[pyfunction]
fn score<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    model: &PyCreepModel,
    error_variance: f64,
    n_params: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let s = selection::score(&dataset.inner, &model.inner, error_variance, n_params).map_err(value_err)?;
    score_dict(py, &s)
}

/// Run every stage of a TOML config; returns the selected model name.
#[pyfunction]
#[pyo3(signature = (config, out = None, seed = None, repair_covariance = false))]
fn run_pipeline(
    py: Python<'_>,
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    repair_covariance: bool,
) -> PyResult<String> {
    py.detach(|| -> Result<String, String> {
        let cfg = PipelineConfig::load(&config).map_err(|e| e.to_string())?;
        let overrides = Overrides {
            out,
            seed,
            repair_covariance,
        };
        let pipeline = Pipeline::new(cfg, &overrides).map_err(|e| e.to_string())?;
        pipeline.run().map(|s| s.kind.name().to_string()).map_err(|e| e.to_string())
    })
    .map_err(runtime_err)
}

#[pymodule]
fn creep_uq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCreepModel>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyGaussianModel>()?;
    m.add_function(wrap_pyfunction!(winsorize, m)?)?;
    m.add_function(wrap_pyfunction!(stls, m)?)?;
    m.add_function(wrap_pyfunction!(fit_model, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_indices, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
