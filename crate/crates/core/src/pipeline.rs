//! Config-driven pipeline: fit, sensitivity, propagate, select.
//!
//! Each stage reads the config and the artifacts of earlier stages from the
//! output directory, writes its own files as `*.partial` and renames them
//! once the stage has succeeded. `run` is the four stages in sequence, so a
//! staged run and a monolithic run produce identical trees.
//!
//! Layout of the output directory:
//!
//! ```text
//! <MODEL>/model.json          fitted law and constant
//! <MODEL>/cv.csv              cross-validation candidates
//! <MODEL>/sobol_mc.csv        Monte Carlo Sobol indices
//! <MODEL>/sobol_pce.csv       PCE Sobol indices
//! <MODEL>/sensitivity.json    input box, PCE degree used, retained/frozen split
//! <MODEL>/gaussian.json       Gaussian model of the retained parameters
//! <MODEL>/stats.csv           one row per condition
//! <MODEL>/condN_samples.csv   rupture-time ensemble at condition N
//! <MODEL>/condN_hist.csv      histogram at condition N
//! <MODEL>/condN_hist.svg      histogram plot at condition N
//! scores.csv                  ranked AIC/BIC table
//! summary.txt                 selected model and per-model overview
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{load_csv, CreepDataset, DataError, TemperatureUnit, WinsorSpec};
use crate::models::{CreepModelKind, FittedCreepModel, ParameterName};
use crate::propagation::{
    error_variance, histogram_svg, parameter_covariance, propagate, write_stats_csv, GaussianParameterModel,
    PropagationError, RuptureTimeEnsemble,
};
use crate::regression::{fit_constant_and_law, ConstantSearch, CvOptions, RegressionError, StlsConfig};
use crate::rng::derive_seed;
use crate::selection::{rank, score, write_scores_csv, ModelScore, SelectionError};
use crate::sensitivity::{
    basis_size, feasible_degree, pce_fit, rank_parameters, sobol_from_pce, sobol_mc, SensitivityError,
    UniformInputSpec,
};

const SEED_TAG_CV: u64 = 1;
const SEED_TAG_SOBOL: u64 = 2;
const SEED_TAG_PCE: u64 = 3;
const SEED_TAG_PROPAGATION: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Fit,
    Sensitivity,
    Propagate,
    Select,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Fit => "fit",
            Stage::Sensitivity => "sensitivity",
            Stage::Propagate => "propagate",
            Stage::Select => "select",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[config] {0}")]
    Config(String),
    #[error("[{}] data error: {source}", stage.name())]
    Data { stage: Stage, source: DataError },
    #[error("[{}] missing artifact {}: run the {} stage first", stage.name(), path.display(), producer.name())]
    MissingArtifact {
        stage: Stage,
        path: PathBuf,
        producer: Stage,
    },
    #[error("[{}] {model}: {message}", stage.name())]
    Numeric {
        stage: Stage,
        model: String,
        message: String,
    },
    #[error("[{}] {}: {message}", stage.name(), path.display())]
    Io {
        stage: Stage,
        path: PathBuf,
        message: String,
    },
}

impl PipelineError {
    /// 2 config, 3 data, 4 numeric or stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data { .. } => 3,
            _ => 4,
        }
    }

    fn numeric(stage: Stage, kind: CreepModelKind, err: impl std::fmt::Display) -> Self {
        PipelineError::Numeric {
            stage,
            model: kind.name().to_string(),
            message: err.to_string(),
        }
    }
}

fn regression_error(stage: Stage, kind: CreepModelKind, err: RegressionError) -> PipelineError {
    match err {
        RegressionError::Data(source) => PipelineError::Data { stage, source },
        RegressionError::InvalidCrossValidation(m) | RegressionError::InvalidConfig(m) => {
            PipelineError::Config(format!("{}: {m}", kind.name()))
        }
        other => PipelineError::numeric(stage, kind, other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WinsorConfig {
    pub enabled: bool,
    pub lower: f64,
    pub upper: f64,
}

impl Default for WinsorConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            lower: 0.05,
            upper: 0.95,
        }
    }
}

/// Per-law overrides keyed by abbreviation (`LM`, `OSD`, `MS`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerModel<T> {
    #[serde(rename = "LM")]
    pub lm: Option<T>,
    #[serde(rename = "OSD")]
    pub osd: Option<T>,
    #[serde(rename = "MS")]
    pub ms: Option<T>,
}

impl<T: Copy> PerModel<T> {
    pub fn get(&self, kind: CreepModelKind) -> Option<T> {
        match kind {
            CreepModelKind::LarsonMiller => self.lm,
            CreepModelKind::OrrSherbyDorn => self.osd,
            CreepModelKind::MansonSuccop => self.ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    pub max_degree: usize,
    pub max_iterations: usize,
    pub normalize_columns: bool,
    /// STLS λ per law; missing entries use the law's default.
    pub threshold: PerModel<f64>,
    /// Search interval for `C` per law.
    pub constant_bracket: PerModel<(f64, f64)>,
    pub grid_points: usize,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            max_degree: 8,
            max_iterations: 20,
            normalize_columns: false,
            threshold: PerModel::default(),
            constant_bracket: PerModel::default(),
            grid_points: 21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossValidationConfig {
    pub iterations: usize,
    pub split: f64,
    pub seed: Option<u64>,
}

impl Default for CrossValidationConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            split: 0.8,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub n_mc: usize,
    pub n_pce: usize,
    pub pce_degree: usize,
    pub freeze_threshold: f64,
    /// Half-width of the input box in standard errors.
    pub bound_width: f64,
    pub seed: Option<u64>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            n_mc: 10_000,
            n_pce: 1_000,
            pce_degree: 10,
            freeze_threshold: 0.01,
            bound_width: 3.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    pub samples: usize,
    pub bins: usize,
    pub seed: Option<u64>,
    pub repair_covariance: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            bins: 50,
            seed: None,
            repair_covariance: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    /// MPa.
    pub stress: f64,
    /// Kelvin.
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Rupture-data CSV, relative to the config file.
    pub input: PathBuf,
    pub temperature_unit: TemperatureUnit,
    /// Relative to the config file; `--out` overrides.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Master seed; stage seeds not given explicitly derive from it.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default)]
    pub winsor: WinsorConfig,
    #[serde(default)]
    pub regression: RegressionConfig,
    #[serde(default)]
    pub cross_validation: CrossValidationConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    pub conditions: Vec<Condition>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_models() -> Vec<String> {
    CreepModelKind::ALL.iter().map(|k| k.abbreviation().to_string()).collect()
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse and resolve relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.input = base.join(&cfg.input);
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn kinds(&self) -> Result<Vec<CreepModelKind>, PipelineError> {
        let mut kinds = Vec::new();
        for name in &self.models {
            let kind: CreepModelKind = name.parse().map_err(|e| PipelineError::Config(format!("models: {e}")))?;
            if kinds.contains(&kind) {
                return Err(PipelineError::Config(format!("models: {name} listed twice")));
            }
            kinds.push(kind);
        }
        Ok(kinds)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.kinds()?.is_empty() {
            return bad("models: at least one creep law is required".into());
        }
        if self.winsor.enabled {
            WinsorSpec::new(self.winsor.lower, self.winsor.upper)
                .map_err(|e| PipelineError::Config(format!("winsor: {e}")))?;
        }
        let r = &self.regression;
        if r.max_degree < 1 || r.max_iterations < 1 || r.grid_points < 3 {
            return bad("regression: need max_degree ≥ 1, max_iterations ≥ 1 and grid_points ≥ 3".into());
        }
        for kind in CreepModelKind::ALL {
            if let Some(t) = r.threshold.get(kind) {
                if !(t.is_finite() && t > 0.0) {
                    return bad(format!("regression.threshold.{}: must be positive, got {t}", kind.abbreviation()));
                }
            }
            if let Some((lo, hi)) = r.constant_bracket.get(kind) {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("regression.constant_bracket.{}: need lower < upper", kind.abbreviation()));
                }
            }
        }
        let cv = &self.cross_validation;
        if cv.iterations == 0 {
            return bad("cross_validation.iterations must be ≥ 1".into());
        }
        if !(cv.split > 0.0 && cv.split < 1.0) {
            return bad(format!("cross_validation.split must lie in (0, 1), got {}", cv.split));
        }
        let s = &self.sensitivity;
        if s.n_mc < 100 {
            return bad(format!("sensitivity.n_mc must be ≥ 100, got {}", s.n_mc));
        }
        if s.n_pce < 2 {
            return bad(format!("sensitivity.n_pce must be ≥ 2, got {}", s.n_pce));
        }
        if !(0.0..=1.0).contains(&s.freeze_threshold) {
            return bad(format!("sensitivity.freeze_threshold must lie in [0, 1], got {}", s.freeze_threshold));
        }
        if !(s.bound_width.is_finite() && s.bound_width > 0.0) {
            return bad(format!("sensitivity.bound_width must be positive, got {}", s.bound_width));
        }
        let p = &self.propagation;
        if p.samples < 100 {
            return bad(format!("propagation.samples must be ≥ 100, got {}", p.samples));
        }
        if p.bins == 0 {
            return bad("propagation.bins must be ≥ 1".into());
        }
        if self.conditions.is_empty() {
            return bad("conditions: at least one (stress, temperature) pair is required".into());
        }
        for c in &self.conditions {
            if !(c.stress.is_finite() && c.stress > 0.0 && c.temperature.is_finite() && c.temperature > 0.0) {
                return bad(format!("conditions: invalid ({}, {})", c.stress, c.temperature));
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub repair_covariance: bool,
}

/// Resolved seeds for every stochastic stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub master: u64,
    pub cross_validation: u64,
    pub sobol: u64,
    pub pce: u64,
    pub propagation: u64,
}

/// A validated config with overrides and seeds resolved.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub kinds: Vec<CreepModelKind>,
    pub output_dir: PathBuf,
    pub seeds: Seeds,
    pub repair_covariance: bool,
    /// True when the master seed came from system entropy.
    pub entropy_seed: bool,
}

impl Pipeline {
    /// `--seed` overrides every stage seed; otherwise explicit stage seeds
    /// win over ones derived from the master seed.
    pub fn new(config: PipelineConfig, overrides: &Overrides) -> Result<Self, PipelineError> {
        config.validate()?;
        let kinds = config.kinds()?;
        let (master, entropy_seed) = match overrides.seed.or(config.seed) {
            Some(s) => (s, false),
            None => (rand::random::<u64>(), true),
        };
        let stage = |explicit: Option<u64>, tag: u64| match (overrides.seed, explicit) {
            (None, Some(s)) => s,
            _ => derive_seed(master, tag),
        };
        let seeds = Seeds {
            master,
            cross_validation: stage(config.cross_validation.seed, SEED_TAG_CV),
            sobol: stage(config.sensitivity.seed, SEED_TAG_SOBOL),
            pce: stage(config.sensitivity.seed.map(|s| derive_seed(s, SEED_TAG_PCE)), SEED_TAG_PCE),
            propagation: stage(config.propagation.seed, SEED_TAG_PROPAGATION),
        };
        Ok(Self {
            output_dir: overrides.out.clone().unwrap_or_else(|| config.output_dir.clone()),
            repair_covariance: overrides.repair_covariance || config.propagation.repair_covariance,
            kinds,
            config,
            seeds,
            entropy_seed,
        })
    }

    fn dataset(&self, stage: Stage) -> Result<CreepDataset, PipelineError> {
        load_csv(&self.config.input, self.config.temperature_unit).map_err(|source| PipelineError::Data { stage, source })
    }

    fn model_dir(&self, kind: CreepModelKind) -> PathBuf {
        self.output_dir.join(kind.abbreviation())
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, stage: Stage, path: PathBuf, producer: Stage) -> Result<T, PipelineError> {
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(PipelineError::MissingArtifact { stage, path, producer })
            }
            Err(e) => {
                return Err(PipelineError::Io {
                    stage,
                    path,
                    message: e.to_string(),
                })
            }
        };
        serde_json::from_str(&text).map_err(|e| PipelineError::Io {
            stage,
            path,
            message: format!("malformed artifact: {e}"),
        })
    }

    fn fitted_model(&self, stage: Stage, kind: CreepModelKind) -> Result<FittedCreepModel, PipelineError> {
        self.read_json(stage, self.model_dir(kind).join("model.json"), Stage::Fit)
    }

    fn gaussian_model(&self, stage: Stage, kind: CreepModelKind) -> Result<GaussianParameterModel, PipelineError> {
        self.read_json(stage, self.model_dir(kind).join("gaussian.json"), Stage::Sensitivity)
    }

    /// Fitted law and constant per model, plus the cross-validation table.
    pub fn fit(&self) -> Result<(), PipelineError> {
        let stage = Stage::Fit;
        let data = self.dataset(stage)?;
        let winsor = if self.config.winsor.enabled {
            Some(WinsorSpec::new(self.config.winsor.lower, self.config.winsor.upper).map_err(|e| PipelineError::Config(e.to_string()))?)
        } else {
            None
        };
        let r = &self.config.regression;
        let cv = CvOptions {
            iterations: self.config.cross_validation.iterations,
            split: self.config.cross_validation.split,
            seed: self.seeds.cross_validation,
        };
        let mut out = StageWriter::new(stage);
        for &kind in &self.kinds {
            let cfg = StlsConfig {
                threshold: r.threshold.get(kind).unwrap_or_else(|| kind.default_threshold()),
                max_degree: r.max_degree,
                max_iterations: r.max_iterations,
                normalize_columns: r.normalize_columns,
            };
            let search = ConstantSearch {
                bracket: r.constant_bracket.get(kind),
                grid_points: r.grid_points,
                ..ConstantSearch::default()
            };
            info!("fitting {kind}");
            let fit = fit_constant_and_law(&data, kind, &cfg, &cv, winsor.as_ref(), &search)
                .map_err(|e| regression_error(stage, kind, e))?;
            info!(
                "{kind}: C = {}, coefficients {:?}, objective {}",
                fit.model.constant(),
                fit.model.law().coefficients(),
                fit.objective
            );
            let dir = self.model_dir(kind);
            out.write(dir.join("model.json"), to_json(&fit.model))?;
            let mut csv = Vec::new();
            fit.cv.write_csv(&mut csv).map_err(|e| io_error(stage, &dir, e))?;
            out.write(dir.join("cv.csv"), csv)?;
        }
        out.commit()
    }

    /// Sobol indices by both estimators on the `μ ± w·SE` box of every
    /// fitted parameter, then the Gaussian model of the retained ones.
    pub fn sensitivity(&self) -> Result<(), PipelineError> {
        let stage = Stage::Sensitivity;
        let data = self.dataset(stage)?;
        let s = &self.config.sensitivity;
        let first = self.config.conditions[0];
        let mut out = StageWriter::new(stage);
        for &kind in &self.kinds {
            let model = self.fitted_model(stage, kind)?;
            let numeric = |e: &dyn std::fmt::Display| PipelineError::numeric(stage, kind, e);
            let var = error_variance(&data, &model).map_err(|e| numeric(&e))?;
            let names = model.parameter_names();
            let full = parameter_covariance(&data, &model, &names, var).map_err(|e| numeric(&e))?;
            let spec = full.input_box(s.bound_width).map_err(|e| numeric(&e))?;
            let map = full.parameter_map();
            let f = |x: &[f64]| {
                map.rupture_time(x, first.stress, first.temperature)
                    .unwrap_or(f64::NAN)
            };
            let mc = sobol_mc(&f, &spec, s.n_mc, self.seeds.sobol).map_err(|e| numeric(&e))?;
            let degree = feasible_degree(spec.dim(), s.n_pce, s.pce_degree).ok_or_else(|| {
                numeric(&SensitivityError::Underdetermined {
                    basis: basis_size(spec.dim(), 0),
                    needed: 2,
                    samples: s.n_pce,
                })
            })?;
            if degree < s.pce_degree {
                warn!("{kind}: PCE degree lowered from {} to {degree} for {} samples", s.pce_degree, s.n_pce);
            }
            let pce = pce_fit(&f, &spec, s.n_pce, degree, self.seeds.pce).map_err(|e| numeric(&e))?;
            let pce_report = sobol_from_pce(&pce).map_err(|e| numeric(&e))?;
            let (retained, frozen) = rank_parameters(&pce_report, s.freeze_threshold).map_err(|e| numeric(&e))?;
            let retained_names: Vec<ParameterName> = retained
                .iter()
                .map(|n| n.parse().expect("names come from the model"))
                .collect();
            let gauss = full.marginal(&retained_names).map_err(|e| numeric(&e))?;
            info!("{kind}: retained {retained:?}, frozen {frozen:?}");

            let dir = self.model_dir(kind);
            for (name, report) in [("sobol_mc.csv", &mc), ("sobol_pce.csv", &pce_report)] {
                let mut csv = Vec::new();
                report.write_csv(&mut csv).map_err(|e| io_error(stage, &dir, e))?;
                out.write(dir.join(name), csv)?;
            }
            let summary = SensitivitySummary {
                condition: first,
                input_box: spec,
                pce_degree: degree,
                pce_basis_size: basis_size(pce.input_spec.dim(), degree),
                retained,
                frozen,
            };
            out.write(dir.join("sensitivity.json"), to_json(&summary))?;
            out.write(dir.join("gaussian.json"), to_json(&gauss))?;
        }
        out.commit()
    }

    /// Rupture-time ensembles, statistics and histograms per condition.
    pub fn propagate(&self) -> Result<(), PipelineError> {
        let stage = Stage::Propagate;
        let data = self.dataset(stage)?;
        let p = &self.config.propagation;
        let mut out = StageWriter::new(stage);
        for (k, &kind) in self.kinds.iter().enumerate() {
            let mut gauss = self.gaussian_model(stage, kind)?;
            if let Err(err) = gauss.cholesky() {
                if !self.repair_covariance {
                    return Err(PipelineError::numeric(stage, kind, format!("{err} (pass --repair-covariance to project it)")));
                }
                let (fixed, correction) = gauss.repaired();
                warn!("{kind}: covariance repaired, Frobenius correction {correction:e}");
                gauss = fixed;
            }
            let dir = self.model_dir(kind);
            let mut ensembles: Vec<RuptureTimeEnsemble> = Vec::new();
            for (i, c) in self.config.conditions.iter().enumerate() {
                let seed = derive_seed(self.seeds.propagation, (k * 1_000 + i) as u64);
                let e = propagate(&gauss, (c.stress, c.temperature), p.samples, seed)
                    .map_err(|e: PropagationError| PipelineError::numeric(stage, kind, e))?;
                let hist = e.histogram(p.bins).map_err(|e| PipelineError::numeric(stage, kind, e))?;
                let observed: Vec<f64> = data
                    .records()
                    .iter()
                    .filter(|r| same(r.stress, c.stress) && same(r.temperature, c.temperature))
                    .map(|r| r.rupture_time)
                    .collect();
                let mut samples = Vec::new();
                e.write_samples_csv(&mut samples).map_err(|err| io_error(stage, &dir, err))?;
                out.write(dir.join(format!("cond{}_samples.csv", i + 1)), samples)?;
                let mut hist_csv = Vec::new();
                hist.write_csv(&mut hist_csv).map_err(|err| io_error(stage, &dir, err))?;
                out.write(dir.join(format!("cond{}_hist.csv", i + 1)), hist_csv)?;
                let title = format!("{} at {} MPa, {} K", kind.name(), c.stress, c.temperature);
                out.write(
                    dir.join(format!("cond{}_hist.svg", i + 1)),
                    histogram_svg(&hist, e.ci95, &observed, &title).into_bytes(),
                )?;
                info!(
                    "{kind} condition {}: mean {} h, CoV {}, 95% [{}, {}]",
                    i + 1,
                    e.stats.mean,
                    e.stats.cov,
                    e.ci95.0,
                    e.ci95.1
                );
                ensembles.push(e);
            }
            let refs: Vec<&RuptureTimeEnsemble> = ensembles.iter().collect();
            let mut stats = Vec::new();
            write_stats_csv(&refs, &mut stats).map_err(|e| io_error(stage, &dir, e))?;
            out.write(dir.join("stats.csv"), stats)?;
        }
        out.commit()
    }

    /// AIC/BIC table and the summary naming the selected model.
    pub fn select(&self) -> Result<ModelScore, PipelineError> {
        let stage = Stage::Select;
        let data = self.dataset(stage)?;
        let mut scores = Vec::new();
        let mut gaussians = BTreeMap::new();
        for &kind in &self.kinds {
            let model = self.fitted_model(stage, kind)?;
            let gauss = self.gaussian_model(stage, kind)?;
            // Stats are produced by propagate; require them so `select` cannot skip it.
            let stats_path = self.model_dir(kind).join("stats.csv");
            if !stats_path.exists() {
                return Err(PipelineError::MissingArtifact {
                    stage,
                    path: stats_path,
                    producer: Stage::Propagate,
                });
            }
            let s = score(&data, &model, gauss.error_variance(), gauss.dim())
                .map_err(|e: SelectionError| PipelineError::numeric(stage, kind, e))?;
            scores.push(s);
            gaussians.insert(kind, (model, gauss));
        }
        let ranked = rank(&scores).map_err(|e| PipelineError::Numeric {
            stage,
            model: "all".into(),
            message: e.to_string(),
        })?;
        let mut out = StageWriter::new(stage);
        let mut csv = Vec::new();
        write_scores_csv(&ranked, &mut csv).map_err(|e| io_error(stage, &self.output_dir, e))?;
        out.write(self.output_dir.join("scores.csv"), csv)?;
        out.write(self.output_dir.join("summary.txt"), self.summary(&data, &ranked, &gaussians).into_bytes())?;
        out.commit()?;
        Ok(ranked[0].clone())
    }

    fn summary(
        &self,
        data: &CreepDataset,
        ranked: &[ModelScore],
        models: &BTreeMap<CreepModelKind, (FittedCreepModel, GaussianParameterModel)>,
    ) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "selected model: {}", ranked[0].kind.name());
        let _ = writeln!(s, "dataset: {} records", data.len());
        let _ = writeln!(s, "seed: {}", self.seeds.master);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<4} {:<14} {:>8} {:>14} {:>14} {:>14}", "rank", "model", "n_params", "log_lik", "AIC", "BIC");
        for (i, r) in ranked.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<4} {:<14} {:>8} {:>14.4} {:>14.4} {:>14.4}",
                i + 1,
                r.kind.name(),
                r.n_params,
                r.log_likelihood,
                r.aic,
                r.bic
            );
        }
        for (kind, (model, gauss)) in models {
            let _ = writeln!(s);
            let _ = writeln!(s, "{}:", kind.name());
            let _ = writeln!(s, "  C = {}", model.constant());
            let _ = writeln!(s, "  coefficients = {:?}", model.law().coefficients());
            let _ = writeln!(s, "  error variance (log10 h) = {}", gauss.error_variance());
            let names: Vec<String> = gauss.names().iter().map(|n| n.to_string()).collect();
            let frozen: Vec<String> = gauss.frozen().keys().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "  random parameters = [{}]", names.join(", "));
            let _ = writeln!(s, "  frozen parameters = [{}]", frozen.join(", "));
        }
        s
    }

    pub fn run(&self) -> Result<ModelScore, PipelineError> {
        self.fit()?;
        self.sensitivity()?;
        self.propagate()?;
        self.select()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySummary {
    /// Condition at which the rupture-time map was analysed.
    pub condition: Condition,
    pub input_box: UniformInputSpec,
    pub pce_degree: usize,
    pub pce_basis_size: usize,
    pub retained: Vec<String>,
    pub frozen: Vec<String>,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    text.into_bytes()
}

fn io_error(stage: Stage, path: &Path, err: std::io::Error) -> PipelineError {
    PipelineError::Io {
        stage,
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

/// Buffers a stage's files as `*.partial` and renames them on commit.
struct StageWriter {
    stage: Stage,
    written: Vec<PathBuf>,
}

impl StageWriter {
    fn new(stage: Stage) -> Self {
        Self {
            stage,
            written: Vec::new(),
        }
    }

    fn partial(path: &Path) -> PathBuf {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".partial");
        path.with_file_name(name)
    }

    fn write(&mut self, path: PathBuf, bytes: Vec<u8>) -> Result<(), PipelineError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| io_error(self.stage, dir, e))?;
        }
        let tmp = Self::partial(&path);
        fs::write(&tmp, bytes).map_err(|e| io_error(self.stage, &tmp, e))?;
        self.written.push(path);
        Ok(())
    }

    fn commit(self) -> Result<(), PipelineError> {
        for path in &self.written {
            let tmp = Self::partial(path);
            fs::rename(&tmp, path).map_err(|e| io_error(self.stage, path, e))?;
        }
        Ok(())
    }
}
