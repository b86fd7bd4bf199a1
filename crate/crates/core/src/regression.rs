//! Polynomial master-curve regression.
//!
//! `P(σ)` is fitted by sequential thresholded least squares (STLS): solve
//! least squares on the active powers, drop every coefficient with
//! `|a_k| < λ`, repeat until the active set is stable. Candidate maximum
//! degrees are compared by validation RMSE over repeated random
//! train/validation splits, and the model constant `C` is chosen by a
//! one-dimensional search on the cross-validated error.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{winsorize, CreepDataset, DataError, WinsorSpec};
use crate::linalg::{FactorError, PivotedQr};
use crate::models::{parameter_from_record, CreepModelKind, FittedCreepModel, ModelError, PolynomialLaw};
use crate::rng;

/// RMSE values closer than this are treated as ties.
pub const RMSE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("rank-deficient design: column of degree {degree} is numerically dependent")]
    RankDeficient { degree: usize },
    #[error("underdetermined system: {rows} observations for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("observation vector has length {got}, design has {expected} rows")]
    LengthMismatch { expected: usize, got: usize },
    #[error("every coefficient fell below the threshold λ = {threshold}")]
    EmptyModel { threshold: f64 },
    #[error("invalid STLS configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid cross-validation settings: {0}")]
    InvalidCrossValidation(String),
    #[error("no cross-validation candidate could be fitted ({skipped} of {iterations} splits skipped)")]
    NoCandidates { iterations: usize, skipped: usize },
    #[error(
        "constant bracket [{lower}, {upper}] does not enclose a minimum \
         (objective {f_lower} at lower end, {f_upper} at upper end)"
    )]
    Bracket {
        lower: f64,
        upper: f64,
        f_lower: f64,
        f_upper: f64,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

/// Monomial design `[σᵏ]` for a list of powers.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
    column_degrees: Vec<usize>,
}

impl DesignMatrix {
    pub fn new(stresses: &[f64], column_degrees: &[usize]) -> Self {
        let entries = DMatrix::from_fn(stresses.len(), column_degrees.len(), |i, j| {
            stresses[i].powi(column_degrees[j] as i32)
        });
        Self {
            entries,
            column_degrees: column_degrees.to_vec(),
        }
    }

    /// Full basis `1, σ, …, σ^max_degree`.
    pub fn polynomial(stresses: &[f64], max_degree: usize) -> Self {
        let degrees: Vec<usize> = (0..=max_degree).collect();
        Self::new(stresses, &degrees)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column_degrees(&self) -> &[usize] {
        &self.column_degrees
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    fn select(&self, columns: &[usize]) -> DesignMatrix {
        DesignMatrix {
            entries: self.entries.select_columns(columns),
            column_degrees: columns.iter().map(|&j| self.column_degrees[j]).collect(),
        }
    }
}

fn map_factor_error(err: FactorError, degrees: &[usize]) -> RegressionError {
    match err {
        FactorError::Underdetermined { rows, cols } => RegressionError::Underdetermined { rows, cols },
        FactorError::RankDeficient { column } => RegressionError::RankDeficient {
            degree: degrees[column],
        },
    }
}

/// `argmin ‖y − A x‖₂²` via a rank-revealing orthogonal factorization.
pub fn least_squares(a: &DesignMatrix, y: &[f64]) -> Result<Vec<f64>, RegressionError> {
    if y.len() != a.nrows() {
        return Err(RegressionError::LengthMismatch {
            expected: a.nrows(),
            got: y.len(),
        });
    }
    let qr = PivotedQr::new(a.entries()).map_err(|e| map_factor_error(e, a.column_degrees()))?;
    Ok(qr.solve(y))
}

fn residual_sum_of_squares(a: &DesignMatrix, x: &[f64], y: &[f64]) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let pred: f64 = (0..a.ncols()).map(|j| a.entries()[(i, j)] * x[j]).sum();
            (y[i] - pred).powi(2)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StlsConfig {
    /// Sparsity threshold λ on raw coefficient magnitudes.
    pub threshold: f64,
    pub max_degree: usize,
    pub max_iterations: usize,
    /// Threshold `|a_k|·rms(σᵏ)` instead of `|a_k|`.
    pub normalize_columns: bool,
}

impl StlsConfig {
    pub fn new(threshold: f64, max_degree: usize) -> Self {
        Self {
            threshold,
            max_degree,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RegressionError> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(RegressionError::InvalidConfig(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.max_degree < 1 {
            return Err(RegressionError::InvalidConfig("max_degree must be at least 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(RegressionError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for StlsConfig {
    fn default() -> Self {
        Self {
            threshold: 0.01,
            max_degree: 8,
            max_iterations: 20,
            normalize_columns: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StlsFit {
    pub law: PolynomialLaw,
    pub iterations: usize,
    /// `false` when `max_iterations` ran out before the active set settled;
    /// the law is still the last iterate.
    pub converged: bool,
}

/// Sequential thresholded least squares on the columns of `a`.
pub fn stls(a: &DesignMatrix, y: &[f64], cfg: &StlsConfig) -> Result<StlsFit, RegressionError> {
    cfg.validate()?;
    let mut active: Vec<usize> = (0..a.ncols()).collect();
    let mut coefficients = vec![0.0; a.ncols()];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let sub = a.select(&active);
        let x = least_squares(&sub, y)?;
        coefficients.iter_mut().for_each(|c| *c = 0.0);
        for (&j, &v) in active.iter().zip(&x) {
            coefficients[j] = v;
        }
        let keep: Vec<usize> = active
            .iter()
            .zip(&x)
            .filter(|(&j, &v)| {
                let magnitude = if cfg.normalize_columns {
                    let col = a.entries().column(j);
                    v.abs() * col.norm() / (a.nrows() as f64).sqrt()
                } else {
                    v.abs()
                };
                magnitude >= cfg.threshold
            })
            .map(|(&j, _)| j)
            .collect();
        if keep.is_empty() {
            return Err(RegressionError::EmptyModel {
                threshold: cfg.threshold,
            });
        }
        if keep.len() == active.len() {
            converged = true;
            break;
        }
        active = keep;
    }
    if !converged {
        log::warn!("STLS stopped after {iterations} iterations without a stable active set");
        // The last solve still carries the sub-threshold terms; report the
        // thresholded iterate.
        let active: BTreeSet<usize> = active.into_iter().collect();
        for (j, c) in coefficients.iter_mut().enumerate() {
            if !active.contains(&j) {
                *c = 0.0;
            }
        }
    }

    let max_degree = a.column_degrees().iter().copied().max().unwrap_or(0);
    let mut law = vec![0.0; max_degree + 1];
    for (j, &c) in coefficients.iter().enumerate() {
        law[a.column_degrees()[j]] += c;
    }
    Ok(StlsFit {
        law: PolynomialLaw::new(law)?,
        iterations,
        converged,
    })
}

/// `√(Σ eᵢ² / k)`.
pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub iterations: usize,
    /// Training fraction of each random split.
    pub split: f64,
    pub seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            iterations: 100,
            split: 0.8,
            seed: 0,
        }
    }
}

impl CvOptions {
    fn validate(&self, m: usize) -> Result<usize, RegressionError> {
        if self.iterations == 0 {
            return Err(RegressionError::InvalidCrossValidation("iterations must be ≥ 1".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(RegressionError::InvalidCrossValidation(format!(
                "split must lie in (0, 1), got {}",
                self.split
            )));
        }
        let n_train = (self.split * m as f64).round() as usize;
        if n_train < 2 || n_train >= m {
            return Err(RegressionError::InvalidCrossValidation(format!(
                "split {} of {m} records leaves {n_train} training and {} validation records",
                self.split,
                m.saturating_sub(n_train)
            )));
        }
        Ok(n_train)
    }
}

/// One fitted candidate: the STLS law for a maximum degree on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct CvEntry {
    pub iteration: usize,
    pub degree: usize,
    pub rmse: f64,
    pub law: PolynomialLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValReport {
    pub entries: Vec<CvEntry>,
    best: usize,
    pub iterations: usize,
    pub split_fraction: f64,
    /// Splits whose training part had fewer than two distinct stresses.
    pub skipped_iterations: Vec<usize>,
}

impl CrossValReport {
    pub fn best(&self) -> &CvEntry {
        &self.entries[self.best]
    }

    pub fn best_law(&self) -> &PolynomialLaw {
        &self.best().law
    }

    /// Lowest RMSE reached by each candidate degree.
    pub fn rmse_by_degree(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            let slot = out.entry(e.degree).or_insert(f64::INFINITY);
            if e.rmse < *slot {
                *slot = e.rmse;
            }
        }
        out
    }

    /// Mean over splits of the best RMSE within each split.
    pub fn mean_split_rmse(&self) -> f64 {
        let mut per_split: BTreeMap<usize, f64> = BTreeMap::new();
        for e in &self.entries {
            let slot = per_split.entry(e.iteration).or_insert(f64::INFINITY);
            *slot = slot.min(e.rmse);
        }
        per_split.values().sum::<f64>() / per_split.len() as f64
    }

    /// CSV `iteration,degree,rmse,selected`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,degree,rmse,selected")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                e.iteration,
                e.degree,
                e.rmse,
                u8::from(i == self.best)
            )?;
        }
        Ok(())
    }
}

/// Index of the winning candidate: minimum RMSE, ties broken by fewer
/// nonzero coefficients, then lower candidate degree, then earlier split.
fn select_best(entries: &[CvEntry]) -> usize {
    let min = entries.iter().map(|e| e.rmse).fold(f64::INFINITY, f64::min);
    entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.rmse <= min + RMSE_TIE_TOLERANCE)
        .min_by_key(|(i, e)| (e.law.nonzero_count(), e.degree, *i))
        .map(|(i, _)| i)
        .expect("at least one entry")
}

/// Repeated random-split cross-validation of STLS candidates of maximum
/// degree `1..=cfg.max_degree` on `(σ, P)` pairs.
pub fn cross_validate(
    pairs: &[(f64, f64)],
    cfg: &StlsConfig,
    opts: &CvOptions,
) -> Result<CrossValReport, RegressionError> {
    cfg.validate()?;
    let m = pairs.len();
    let n_train = opts.validate(m)?;

    let per_split: Vec<Option<Vec<CvEntry>>> = (0..opts.iterations)
        .into_par_iter()
        .map(|iteration| {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng::stream(opts.seed, iteration as u64));
            let (train, valid) = order.split_at(n_train);
            let distinct = train
                .iter()
                .map(|&i| pairs[i].0.to_bits())
                .collect::<BTreeSet<_>>()
                .len();
            if distinct < 2 {
                return None;
            }
            let sx: Vec<f64> = train.iter().map(|&i| pairs[i].0).collect();
            let sy: Vec<f64> = train.iter().map(|&i| pairs[i].1).collect();
            let entries = (1..=cfg.max_degree)
                .filter_map(|degree| {
                    let a = DesignMatrix::polynomial(&sx, degree);
                    let fit = stls(&a, &sy, cfg).ok()?;
                    let errors: Vec<f64> = valid
                        .iter()
                        .map(|&i| pairs[i].1 - fit.law.evaluate(pairs[i].0))
                        .collect();
                    Some(CvEntry {
                        iteration,
                        degree,
                        rmse: rmse(&errors),
                        law: fit.law,
                    })
                })
                .collect();
            Some(entries)
        })
        .collect();

    let skipped_iterations: Vec<usize> = per_split
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_none())
        .map(|(i, _)| i)
        .collect();
    let entries: Vec<CvEntry> = per_split.into_iter().flatten().flatten().collect();
    if entries.is_empty() {
        return Err(RegressionError::NoCandidates {
            iterations: opts.iterations,
            skipped: skipped_iterations.len(),
        });
    }
    let best = select_best(&entries);
    Ok(CrossValReport {
        entries,
        best,
        iterations: opts.iterations,
        split_fraction: opts.split,
        skipped_iterations,
    })
}

/// Settings of the one-dimensional search for the model constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantSearch {
    /// `None` uses [`CreepModelKind::default_constant_bracket`].
    pub bracket: Option<(f64, f64)>,
    /// Coarse scan points before golden-section refinement.
    pub grid_points: usize,
    /// Stop once the interval is narrower than this fraction of the bracket.
    pub relative_tolerance: f64,
}

impl Default for ConstantSearch {
    fn default() -> Self {
        Self {
            bracket: None,
            grid_points: 21,
            relative_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstantFit {
    pub model: FittedCreepModel,
    pub cv: CrossValReport,
    /// Objective (mean per-split best validation RMSE) at the optimum.
    pub objective: f64,
}

/// Parameter responses `(σ, P(C))` for every record, optionally winsorized
/// over the whole dataset.
pub fn parameter_responses(
    dataset: &CreepDataset,
    kind: CreepModelKind,
    constant: f64,
    winsor: Option<&WinsorSpec>,
) -> Result<Vec<(f64, f64)>, RegressionError> {
    let p: Vec<f64> = dataset
        .records()
        .iter()
        .map(|r| parameter_from_record(kind, r, constant))
        .collect();
    let p = match winsor {
        Some(spec) => winsorize(&p, spec)?,
        None => p,
    };
    Ok(dataset.stresses().into_iter().zip(p).collect())
}

/// Choose `C` minimizing cross-validated RMSE of the induced `(σ, P(C))`
/// regression and return the model with the best law at that `C`.
///
/// The same split seed is used for every trial `C`, so the objective is a
/// deterministic function of `C`.
pub fn fit_constant_and_law(
    dataset: &CreepDataset,
    kind: CreepModelKind,
    cfg: &StlsConfig,
    cv: &CvOptions,
    winsor: Option<&WinsorSpec>,
    search: &ConstantSearch,
) -> Result<ConstantFit, RegressionError> {
    let (lower, upper) = search.bracket.unwrap_or_else(|| kind.default_constant_bracket());
    if !(lower.is_finite() && upper.is_finite() && lower < upper) || search.grid_points < 3 {
        return Err(RegressionError::InvalidConfig(format!(
            "bad constant search: bracket [{lower}, {upper}], {} grid points",
            search.grid_points
        )));
    }
    let objective = |c: f64| -> f64 {
        parameter_responses(dataset, kind, c, winsor)
            .and_then(|pairs| cross_validate(&pairs, cfg, cv))
            .map(|report| report.mean_split_rmse())
            .unwrap_or(f64::INFINITY)
    };

    let n = search.grid_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&c| objective(c)).collect();
    let i_min = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if i_min == 0 || i_min == n - 1 || !values[i_min].is_finite() {
        return Err(RegressionError::Bracket {
            lower,
            upper,
            f_lower: values[0],
            f_upper: values[n - 1],
        });
    }

    let tol = search.relative_tolerance * (upper - lower);
    let (c_best, f_best) = golden_section(&objective, grid[i_min - 1], grid[i_min + 1], tol);
    let (c_best, _) = if values[i_min] < f_best {
        (grid[i_min], values[i_min])
    } else {
        (c_best, f_best)
    };

    let pairs = parameter_responses(dataset, kind, c_best, winsor)?;
    let report = cross_validate(&pairs, cfg, cv)?;
    let model = FittedCreepModel::new(kind, report.best_law().clone(), c_best)?;
    Ok(ConstantFit {
        model,
        objective: report.mean_split_rmse(),
        cv: report,
    })
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Residual sum of squares of `stls` vs plain least squares on the same
/// system; exposed for diagnostics.
pub fn residual_norms(a: &DesignMatrix, y: &[f64], cfg: &StlsConfig) -> Result<(f64, f64), RegressionError> {
    let ols = least_squares(a, y)?;
    let fit = stls(a, y, cfg)?;
    let coeffs: Vec<f64> = a
        .column_degrees()
        .iter()
        .map(|&k| fit.law.coefficients().get(k).copied().unwrap_or(0.0))
        .collect();
    Ok((
        residual_sum_of_squares(a, &coeffs, y).sqrt(),
        residual_sum_of_squares(a, &ols, y).sqrt(),
    ))
}
