//! Creep rupture records: CSV ingestion, winsorization and synthetic data.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{FittedCreepModel, ModelError};
use crate::rng;
use crate::stats::{percentile_sorted, sorted_copy};

pub const CSV_HEADER: [&str; 3] = ["stress_mpa", "temperature", "rupture_time_h"];

const CELSIUS_OFFSET: f64 = 273.15;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("expected header `stress_mpa,temperature,rupture_time_h`, found `{found}`")]
    BadHeader { found: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {field} must be positive and finite, got {value}")]
    InvalidField {
        line: u64,
        field: &'static str,
        value: f64,
    },
    #[error("invalid record: {field} must be positive and finite, got {value}")]
    InvalidRecord { field: &'static str, value: f64 },
    #[error("dataset needs at least 2 records, found {0}")]
    TooFewRecords(usize),
    #[error("dataset needs at least 2 distinct stress values, found {0}")]
    TooFewStresses(usize),
    #[error("invalid winsorization percentiles ({lower}, {upper})")]
    InvalidWinsorSpec { lower: f64, upper: f64 },
    #[error("cannot winsorize an empty sample")]
    EmptySample,
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("synthesis needs at least one condition")]
    NoConditions,
    #[error("noise standard deviation must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureUnit {
    Celsius,
    #[default]
    Kelvin,
}

impl TemperatureUnit {
    pub fn to_kelvin(self, value: f64) -> f64 {
        match self {
            TemperatureUnit::Celsius => value + CELSIUS_OFFSET,
            TemperatureUnit::Kelvin => value,
        }
    }
}

/// One rupture test: stress (MPa), absolute temperature (K), rupture time (h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreepRecord {
    pub stress: f64,
    pub temperature: f64,
    pub rupture_time: f64,
}

impl CreepRecord {
    pub fn new(stress: f64, temperature: f64, rupture_time: f64) -> Result<Self, DataError> {
        for (field, value) in [
            ("stress", stress),
            ("temperature", temperature),
            ("rupture_time", rupture_time),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DataError::InvalidRecord { field, value });
            }
        }
        Ok(Self {
            stress,
            temperature,
            rupture_time,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreepDataset {
    records: Vec<CreepRecord>,
    source_label: String,
}

impl CreepDataset {
    pub fn new(records: Vec<CreepRecord>, source_label: impl Into<String>) -> Result<Self, DataError> {
        if records.len() < 2 {
            return Err(DataError::TooFewRecords(records.len()));
        }
        let distinct = records
            .iter()
            .map(|r| r.stress.to_bits())
            .collect::<BTreeSet<_>>()
            .len();
        if distinct < 2 {
            return Err(DataError::TooFewStresses(distinct));
        }
        Ok(Self {
            records,
            source_label: source_label.into(),
        })
    }

    pub fn records(&self) -> &[CreepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn stresses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.stress).collect()
    }

    /// Observations `log₁₀ t_r`.
    pub fn log10_rupture_times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rupture_time.log10()).collect()
    }
}

/// Load a dataset from `stress_mpa,temperature,rupture_time_h` CSV.
pub fn load_csv(path: impl AsRef<Path>, unit: TemperatureUnit) -> Result<CreepDataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader.headers().map_err(|e| DataError::Malformed {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(DataError::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| DataError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(DataError::Malformed {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let mut fields = [0.0; 3];
        for (i, name) in ["stress", "temperature", "rupture_time"].into_iter().enumerate() {
            let text = &row[i];
            let value: f64 = text.parse().map_err(|_| DataError::Malformed {
                line,
                message: format!("cannot parse {name} `{text}` as a number"),
            })?;
            let value = if i == 1 { unit.to_kelvin(value) } else { value };
            if !(value.is_finite() && value > 0.0) {
                return Err(DataError::InvalidField {
                    line,
                    field: name,
                    value,
                });
            }
            fields[i] = value;
        }
        records.push(CreepRecord {
            stress: fields[0],
            temperature: fields[1],
            rupture_time: fields[2],
        });
    }
    CreepDataset::new(records, path.display().to_string())
}

/// Round to 12 significant digits and print the shortest text that
/// reproduces the rounded value.
pub fn format_sig12(value: f64) -> String {
    let rounded: f64 = format!("{value:.11e}").parse().unwrap_or(value);
    format!("{rounded}")
}

/// Write a dataset in the `load_csv` schema (temperatures in kelvin).
pub fn write_csv(dataset: &CreepDataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::from("stress_mpa,temperature,rupture_time_h\n");
    for r in dataset.records() {
        out.push_str(&format!(
            "{},{},{}\n",
            format_sig12(r.stress),
            format_sig12(r.temperature),
            format_sig12(r.rupture_time)
        ));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(io_err)
}

/// Lower/upper percentile fractions for winsorization; `(0.05, 0.95)` is
/// the usual 90% two-sided clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinsorSpec {
    lower_percentile: f64,
    upper_percentile: f64,
}

impl WinsorSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self, DataError> {
        let valid = (0.0..0.5).contains(&lower) && upper > 0.5 && upper <= 1.0 && lower < upper;
        if !valid {
            return Err(DataError::InvalidWinsorSpec { lower, upper });
        }
        Ok(Self {
            lower_percentile: lower,
            upper_percentile: upper,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower_percentile
    }

    pub fn upper(&self) -> f64 {
        self.upper_percentile
    }

    /// Clamp thresholds for `values` under the linear-interpolation
    /// percentile rule.
    pub fn thresholds(&self, values: &[f64]) -> Result<(f64, f64), DataError> {
        validate_sample(values)?;
        let sorted = sorted_copy(values);
        Ok((
            percentile_sorted(&sorted, self.lower_percentile),
            percentile_sorted(&sorted, self.upper_percentile),
        ))
    }
}

impl Default for WinsorSpec {
    fn default() -> Self {
        Self {
            lower_percentile: 0.05,
            upper_percentile: 0.95,
        }
    }
}

fn validate_sample(values: &[f64]) -> Result<(), DataError> {
    if values.is_empty() {
        return Err(DataError::EmptySample);
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(DataError::NonFinite { index, value });
    }
    Ok(())
}

/// Clamp values outside the percentile thresholds onto them.
pub fn winsorize(values: &[f64], spec: &WinsorSpec) -> Result<Vec<f64>, DataError> {
    let (lo, hi) = spec.thresholds(values)?;
    Ok(values.iter().map(|v| v.clamp(lo, hi)).collect())
}

/// Sample a dataset from a known model: `log₁₀ t_r` at each `(σ, T)` plus
/// Gaussian noise of standard deviation `noise_sd`.
pub fn synthesize_dataset(
    truth: &FittedCreepModel,
    conditions: &[(f64, f64)],
    noise_sd: f64,
    seed: u64,
) -> Result<CreepDataset, DataError> {
    if conditions.is_empty() {
        return Err(DataError::NoConditions);
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(DataError::InvalidNoise(noise_sd));
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|_| DataError::InvalidNoise(noise_sd))?;
    let mut rng = rng::stream(seed, 0);
    let mut records = Vec::with_capacity(conditions.len());
    for &(stress, temperature) in conditions {
        // Validates the condition and the exponent range.
        let exact = crate::models::rupture_time(truth, stress, temperature)?;
        let rupture_time = if noise_sd == 0.0 {
            exact
        } else {
            let log_t = truth.log10_rupture_time(stress, temperature) + noise.sample(&mut rng);
            if log_t.abs() > crate::models::MAX_LOG10_EXPONENT {
                return Err(ModelError::Overflow { exponent: log_t }.into());
            }
            10f64.powf(log_t)
        };
        records.push(CreepRecord::new(stress, temperature, rupture_time)?);
    }
    CreepDataset::new(
        records,
        format!("synthetic {} (noise_sd = {noise_sd}, seed = {seed})", truth.kind()),
    )
}
