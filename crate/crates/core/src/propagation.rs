//! Gaussian parameter uncertainty and its Monte Carlo propagation to
//! rupture time.
//!
//! The retained parameters are modelled as `x ~ N(μ, Σ)` with
//! `Σ = σ_e² (AᵀA)⁻¹`, where row `k` of `A` holds `∂ŷ/∂x` at record `k` and
//! `σ_e²` is the unbiased residual variance of `ŷ = log₁₀ t_r`. Samples are
//! drawn as `μ + L z` with `L` the lower Cholesky factor of `Σ`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::CreepDataset;
use crate::linalg::{FactorError, PivotedQr};
use crate::models::{
    predictor_partials, CreepModelKind, FittedCreepModel, ModelError, ParameterMap, ParameterName,
    MAX_LOG10_EXPONENT,
};
use crate::rng;
use crate::sensitivity::{SensitivityError, UniformInputSpec};
use crate::stats::{mean, percentile_sorted, sorted_copy};

/// Samples per independent random stream.
pub const CHUNK_SIZE: usize = 1000;

/// Pivots down to `−PIVOT_TOLERANCE · trace(Σ)` are clamped to zero.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_BINS: usize = 50;

/// Largest tolerated share of overflowed rupture-time samples.
pub const MAX_OVERFLOW_RATE: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("{observations} observations leave no degrees of freedom for {parameters} parameters")]
    DegreesOfFreedom { observations: usize, parameters: usize },
    #[error("design matrix is rank deficient: {0} is collinear with the preceding parameters")]
    Collinear(String),
    #[error("no retained parameters")]
    NoParameters,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("covariance is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("covariance has non-finite entries")]
    NonFinite,
    #[error("covariance is not positive semi-definite: most negative pivot {pivot:e} at {name}")]
    NotPositiveSemiDefinite { pivot: f64, name: String },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("{overflowed} of {total} rupture-time samples overflowed (limit 1%)")]
    Overflow { overflowed: usize, total: usize },
    #[error("no valid rupture-time samples")]
    NoValidSamples,
    #[error("histogram needs a non-empty sample and at least one bin")]
    InvalidHistogram,
    #[error("error variance must be finite and non-negative, got {0}")]
    InvalidErrorVariance(f64),
    #[error("input box width must be positive, got {0}")]
    InvalidWidth(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
}

/// Residuals `log₁₀ t_r − ŷ` at every record.
pub fn residuals(dataset: &CreepDataset, model: &FittedCreepModel) -> Vec<f64> {
    dataset
        .records()
        .iter()
        .map(|r| r.rupture_time.log10() - model.log10_rupture_time(r.stress, r.temperature))
        .collect()
}

/// `Σ rₖ² / (m − n)`.
pub fn error_variance_from_residuals(residuals: &[f64], parameters: usize) -> Result<f64, PropagationError> {
    let m = residuals.len();
    if m <= parameters {
        return Err(PropagationError::DegreesOfFreedom {
            observations: m,
            parameters,
        });
    }
    Ok(residuals.iter().map(|r| r * r).sum::<f64>() / (m - parameters) as f64)
}

/// Unbiased residual variance with `n` = every parameter of the model
/// (active coefficients and `C`).
pub fn error_variance(dataset: &CreepDataset, model: &FittedCreepModel) -> Result<f64, PropagationError> {
    error_variance_from_residuals(&residuals(dataset, model), model.parameter_names().len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParameterModel {
    kind: CreepModelKind,
    names: Vec<ParameterName>,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    frozen: BTreeMap<ParameterName, f64>,
    error_variance: f64,
}

impl GaussianParameterModel {
    /// Validates dimensions and symmetry (relative `1e-12`), then stores the
    /// symmetrized covariance. Positive semi-definiteness is checked when
    /// factorizing.
    pub fn new(
        kind: CreepModelKind,
        names: Vec<ParameterName>,
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        frozen: BTreeMap<ParameterName, f64>,
        error_variance: f64,
    ) -> Result<Self, PropagationError> {
        let d = names.len();
        if d == 0 {
            return Err(PropagationError::NoParameters);
        }
        if mean.len() != d || covariance.len() != d || covariance.iter().any(|row| row.len() != d) {
            return Err(PropagationError::Dimension(format!(
                "{d} names, {} means, {}-row covariance",
                mean.len(),
                covariance.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) || frozen.contains_key(name) {
                return Err(PropagationError::Dimension(format!("{name} listed twice")));
            }
        }
        if mean.iter().chain(covariance.iter().flatten()).any(|v| !v.is_finite())
            || frozen.values().any(|v| !v.is_finite())
        {
            return Err(PropagationError::NonFinite);
        }
        if !(error_variance.is_finite() && error_variance >= 0.0) {
            return Err(PropagationError::InvalidErrorVariance(error_variance));
        }
        let scale = covariance.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut sym = covariance.clone();
        for i in 0..d {
            for j in 0..i {
                if (covariance[i][j] - covariance[j][i]).abs() > 1e-12 * scale {
                    return Err(PropagationError::Asymmetric { row: i, col: j });
                }
                let avg = 0.5 * (covariance[i][j] + covariance[j][i]);
                sym[i][j] = avg;
                sym[j][i] = avg;
            }
        }
        Ok(Self {
            kind,
            names,
            mean,
            covariance: sym,
            frozen,
            error_variance,
        })
    }

    pub fn kind(&self) -> CreepModelKind {
        self.kind
    }

    pub fn names(&self) -> &[ParameterName] {
        &self.names
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[Vec<f64>] {
        &self.covariance
    }

    pub fn frozen(&self) -> &BTreeMap<ParameterName, f64> {
        &self.frozen
    }

    pub fn error_variance(&self) -> f64 {
        self.error_variance
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.covariance[i][i].max(0.0).sqrt()).collect()
    }

    /// Keep only `retained` as random; the rest are frozen at their means.
    pub fn marginal(&self, retained: &[ParameterName]) -> Result<Self, PropagationError> {
        let idx: Vec<usize> = retained
            .iter()
            .map(|name| {
                self.names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| PropagationError::Model(ModelError::UnknownParameter(name.to_string())))
            })
            .collect::<Result<_, _>>()?;
        let mut frozen = self.frozen.clone();
        for (i, name) in self.names.iter().enumerate() {
            if !idx.contains(&i) {
                frozen.insert(*name, self.mean[i]);
            }
        }
        Self::new(
            self.kind,
            retained.to_vec(),
            idx.iter().map(|&i| self.mean[i]).collect(),
            idx.iter().map(|&i| idx.iter().map(|&j| self.covariance[i][j]).collect()).collect(),
            frozen,
            self.error_variance,
        )
    }

    /// Evaluator over the random parameters with frozen values substituted.
    pub fn parameter_map(&self) -> ParameterMap {
        let mut coefficients = Vec::new();
        let mut constant = 0.0;
        let all = self.names.iter().zip(&self.mean).chain(self.frozen.iter());
        for (name, &value) in all {
            match *name {
                ParameterName::Coefficient(k) => {
                    if k >= coefficients.len() {
                        coefficients.resize(k + 1, 0.0);
                    }
                    coefficients[k] = value;
                }
                ParameterName::Constant => constant = value,
            }
        }
        ParameterMap::from_parts(self.kind, coefficients, constant, &self.names)
    }

    /// Uniform box `μᵢ ± width · SEᵢ`, floored at a relative `1e-9`
    /// half-width and with `C > 0` enforced for Larson-Miller.
    pub fn input_box(&self, width: f64) -> Result<UniformInputSpec, PropagationError> {
        if !(width.is_finite() && width > 0.0) {
            return Err(PropagationError::InvalidWidth(width));
        }
        let se = self.standard_errors();
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let mu = self.mean[i];
            let half = (width * se[i]).max(1e-9 * mu.abs().max(1.0));
            let mut lo = mu - half;
            if self.kind == CreepModelKind::LarsonMiller && self.names[i] == ParameterName::Constant {
                lo = lo.max(1e-6 * mu.abs());
            }
            lower.push(lo);
            upper.push(mu + half);
        }
        Ok(UniformInputSpec::new(
            self.names.iter().map(|n| n.to_string()).collect(),
            lower,
            upper,
        )?)
    }

    /// Projection onto the PSD cone by eigenvalue clipping. Returns the
    /// repaired model and the Frobenius norm of the correction.
    pub fn repaired(&self) -> (Self, f64) {
        let d = self.dim();
        let sigma = DMatrix::from_fn(d, d, |i, j| self.covariance[i][j]);
        let eig = SymmetricEigen::new(sigma.clone());
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let rebuilt = (&rebuilt + rebuilt.transpose()) * 0.5;
        let correction = (&rebuilt - &sigma).norm();
        let mut out = self.clone();
        out.covariance = (0..d).map(|i| (0..d).map(|j| rebuilt[(i, j)]).collect()).collect();
        (out, correction)
    }

    /// Lower Cholesky factor with near-zero negative pivots clamped.
    pub fn cholesky(&self) -> Result<DMatrix<f64>, PropagationError> {
        let d = self.dim();
        let trace: f64 = (0..d).map(|i| self.covariance[i][i]).sum();
        let tol = PIVOT_TOLERANCE * trace.abs();
        let mut l = DMatrix::<f64>::zeros(d, d);
        let mut worst: Option<(f64, usize)> = None;
        for j in 0..d {
            let pivot = self.covariance[j][j] - (0..j).map(|k| l[(j, k)].powi(2)).sum::<f64>();
            if pivot < -tol && worst.is_none_or(|(w, _)| pivot < w) {
                worst = Some((pivot, j));
            }
            if pivot <= 0.0 {
                continue;
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..d {
                let s = self.covariance[i][j] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                l[(i, j)] = s / ljj;
            }
        }
        match worst {
            Some((pivot, j)) => Err(PropagationError::NotPositiveSemiDefinite {
                pivot,
                name: self.names[j].to_string(),
            }),
            None => Ok(l),
        }
    }
}

/// `Σ = σ_e² (AᵀA)⁻¹` over `retained`, with `A` the predictor partials at
/// every record. Parameters of the model not in `retained` are frozen at
/// their fitted values.
pub fn parameter_covariance(
    dataset: &CreepDataset,
    model: &FittedCreepModel,
    retained: &[ParameterName],
    error_variance: f64,
) -> Result<GaussianParameterModel, PropagationError> {
    if !(error_variance.is_finite() && error_variance >= 0.0) {
        return Err(PropagationError::InvalidErrorVariance(error_variance));
    }
    if retained.is_empty() {
        return Err(PropagationError::NoParameters);
    }
    let records = dataset.records();
    let d = retained.len();
    let mut a = DMatrix::zeros(records.len(), d);
    for (k, r) in records.iter().enumerate() {
        for (j, g) in predictor_partials(model, r.stress, r.temperature, retained)?.into_iter().enumerate() {
            a[(k, j)] = g;
        }
    }
    let qr = PivotedQr::new(&a).map_err(|e| match e {
        FactorError::RankDeficient { column } => PropagationError::Collinear(retained[column].to_string()),
        FactorError::Underdetermined { rows, cols } => PropagationError::DegreesOfFreedom {
            observations: rows,
            parameters: cols,
        },
    })?;
    let inv = qr.inverse_gram();
    let covariance = (0..d)
        .map(|i| (0..d).map(|j| error_variance * inv[(i, j)]).collect())
        .collect();
    let mean = retained.iter().map(|&n| model.parameter(n)).collect::<Result<_, _>>()?;
    let frozen = model
        .parameter_names()
        .into_iter()
        .filter(|n| !retained.contains(n))
        .map(|n| Ok((n, model.parameter(n)?)))
        .collect::<Result<_, ModelError>>()?;
    GaussianParameterModel::new(model.kind(), retained.to_vec(), mean, covariance, frozen, error_variance)
}

/// `n` draws of `μ + L z`, one row per sample. Chunks of [`CHUNK_SIZE`]
/// use independent streams, so the result does not depend on threading.
pub fn sample_parameters(
    gauss: &GaussianParameterModel,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, PropagationError> {
    if n == 0 {
        return Err(PropagationError::TooFewSamples { min: 1, got: 0 });
    }
    let l = gauss.cholesky()?;
    let d = gauss.dim();
    let mu = gauss.mean();
    let chunks: Vec<Vec<Vec<f64>>> = (0..n.div_ceil(CHUNK_SIZE))
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c as u64);
            let rows = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            (0..rows)
                .map(|_| {
                    let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    (0..d)
                        .map(|i| mu[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>())
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub cov: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub kurtosis: f64,
    pub median: f64,
}

impl SummaryStats {
    /// Sample std uses `n − 1`; skewness `m₃/m₂^{3/2}` and kurtosis
    /// `m₄/m₂²` use biased central moments. A zero-spread sample reports
    /// zero skewness and excess kurtosis.
    pub fn from_samples(samples: &[f64]) -> Result<Self, PropagationError> {
        if samples.is_empty() {
            return Err(PropagationError::NoValidSamples);
        }
        let n = samples.len() as f64;
        let constant = samples.iter().all(|&x| x == samples[0]);
        let mu = if constant { samples[0] } else { mean(samples) };
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in samples {
            let d = x - mu;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let ss = m2;
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let std = if samples.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        let (skewness, kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2))
        } else {
            (0.0, 3.0)
        };
        Ok(Self {
            mean: mu,
            std,
            cov: std / mu,
            skewness,
            excess_kurtosis: kurtosis - 3.0,
            kurtosis,
            median: percentile_sorted(&sorted_copy(samples), 0.5),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// CSV `bin_lo,bin_hi,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c)?;
        }
        Ok(())
    }
}

/// Equal-width bins on `[min, max]`, the last one closed. A constant
/// sample gives a single zero-width bin.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Histogram, PropagationError> {
    if samples.is_empty() || bins == 0 {
        return Err(PropagationError::InvalidHistogram);
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Ok(Histogram {
            edges: vec![lo, hi],
            counts: vec![samples.len()],
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0; bins];
    for &x in samples {
        let mut b = (((x - lo) / width) as usize).min(bins - 1);
        // Guard against round-off placing x on the wrong side of an edge.
        if x < edges[b] {
            b -= 1;
        } else if b + 1 < bins && x >= edges[b + 1] {
            b += 1;
        }
        counts[b] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuptureTimeEnsemble {
    pub samples: Vec<f64>,
    pub condition: (f64, f64),
    pub stats: SummaryStats,
    pub ci95: (f64, f64),
    pub n_overflow: usize,
}

impl RuptureTimeEnsemble {
    pub fn histogram(&self, bins: usize) -> Result<Histogram, PropagationError> {
        histogram(&self.samples, bins)
    }

    /// CSV `sample_index,rupture_time_h`.
    pub fn write_samples_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sample_index,rupture_time_h")?;
        for (i, t) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{t}")?;
        }
        Ok(())
    }
}

pub const STATS_HEADER: &str =
    "condition_stress,condition_temp_K,mean,std,cov,skewness,excess_kurtosis,ci95_lo,ci95_hi,n_valid,n_overflow";

/// One stats row per ensemble under [`STATS_HEADER`].
pub fn write_stats_csv<W: Write>(ensembles: &[&RuptureTimeEnsemble], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{STATS_HEADER}")?;
    for e in ensembles {
        let s = &e.stats;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            e.condition.0,
            e.condition.1,
            s.mean,
            s.std,
            s.cov,
            s.skewness,
            s.excess_kurtosis,
            e.ci95.0,
            e.ci95.1,
            e.samples.len(),
            e.n_overflow
        )?;
    }
    Ok(())
}

/// Monte Carlo rupture-time distribution at one `(σ, T)` condition.
/// Samples whose `|log₁₀ t_r|` exceeds the overflow guard are excluded and
/// counted.
pub fn propagate(
    gauss: &GaussianParameterModel,
    condition: (f64, f64),
    n: usize,
    seed: u64,
) -> Result<RuptureTimeEnsemble, PropagationError> {
    if n < 100 {
        return Err(PropagationError::TooFewSamples { min: 100, got: n });
    }
    let (stress, temperature) = condition;
    if !(stress.is_finite() && stress > 0.0 && temperature.is_finite() && temperature > 0.0) {
        return Err(ModelError::InvalidCondition { stress, temperature }.into());
    }
    let draws = sample_parameters(gauss, n, seed)?;
    let map = gauss.parameter_map();
    let exponents: Vec<f64> = draws
        .par_iter()
        .map(|x| map.log10_rupture_time(x, stress, temperature))
        .collect();
    let samples: Vec<f64> = exponents
        .iter()
        .filter(|e| e.is_finite() && e.abs() <= MAX_LOG10_EXPONENT)
        .map(|e| 10f64.powf(*e))
        .collect();
    let n_overflow = n - samples.len();
    if n_overflow as f64 > MAX_OVERFLOW_RATE * n as f64 {
        return Err(PropagationError::Overflow {
            overflowed: n_overflow,
            total: n,
        });
    }
    let stats = SummaryStats::from_samples(&samples)?;
    let sorted = sorted_copy(&samples);
    let ci95 = (percentile_sorted(&sorted, 0.025), percentile_sorted(&sorted, 0.975));
    Ok(RuptureTimeEnsemble {
        samples,
        condition,
        stats,
        ci95,
        n_overflow,
    })
}

/// Static SVG bar chart of a histogram with the 95% interval as red dashed
/// lines and observed rupture times as gold lines.
pub fn histogram_svg(hist: &Histogram, ci95: (f64, f64), observed: &[f64], title: &str) -> String {
    let (w, h) = (640.0, 360.0);
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 40.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let lo = hist.edges[0];
    let hi = *hist.edges.last().unwrap();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x_of = |v: f64| left + (v - lo) / span * plot_w;
    let peak = hist.counts.iter().copied().max().unwrap_or(1).max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let nbins = hist.counts.len();
    for (i, &c) in hist.counts.iter().enumerate() {
        let x0 = if hi > lo { x_of(hist.edges[i]) } else { left };
        let x1 = if hi > lo { x_of(hist.edges[i + 1]) } else { left + plot_w / nbins as f64 };
        let bh = c as f64 / peak * plot_h;
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white" stroke-width="0.5"/>"##,
            x0,
            top + plot_h - bh,
            (x1 - x0).max(0.5),
            bh
        );
    }
    let mut marker = |v: f64, color: &str, dash: &str| {
        if v >= lo && v <= hi {
            let x = x_of(v);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
                top + plot_h
            );
        }
    };
    marker(ci95.0, "red", r#" stroke-dasharray="6,3""#);
    marker(ci95.1, "red", r#" stroke-dasharray="6,3""#);
    for &t in observed {
        marker(t, "gold", "");
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
        h - 12.0,
        format_tick(lo)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        left + plot_w,
        h - 12.0,
        format_tick(hi)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">rupture time (h)</text>"#,
        left + plot_w / 2.0,
        h - 12.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
