//! Time-temperature-parameter creep laws.
//!
//! All three laws relate a stress-dependent parameter `P(σ)` to rupture
//! time `t_r` (hours, base-10 logarithm) and absolute temperature `T`
//! (kelvin) through a model constant `C`:
//!
//! | law              | parameter                 | inversion              |
//! |------------------|---------------------------|------------------------|
//! | Larson-Miller    | `P = T (C + log t_r)`     | `t_r = 10^(P/T − C)`   |
//! | Orr-Sherby-Dorn  | `P = log t_r − C/T`       | `t_r = 10^(P + C/T)`   |
//! | Manson-Succop    | `P = log t_r + C T`       | `t_r = 10^(P − C T)`   |
//!
//! The observable used for error statistics is `ŷ = log₁₀ t_r`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::CreepRecord;

/// Largest admissible `|log₁₀ t_r|`; beyond this the prediction is
/// reported as non-physical instead of saturating to `inf`/`0`.
pub const MAX_LOG10_EXPONENT: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("polynomial law needs at least one coefficient")]
    EmptyLaw,
    #[error("non-finite polynomial coefficient a{index} = {value}")]
    NonFiniteCoefficient { index: usize, value: f64 },
    #[error("invalid model constant {value} for {kind}: {reason}")]
    InvalidConstant {
        kind: CreepModelKind,
        value: f64,
        reason: &'static str,
    },
    #[error("rupture time exponent {exponent} outside ±300 (non-physical overflow/underflow)")]
    Overflow { exponent: f64 },
    #[error("stress and temperature must be positive and finite (σ = {stress}, T = {temperature})")]
    InvalidCondition { stress: f64, temperature: f64 },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown creep model `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CreepModelKind {
    LarsonMiller,
    OrrSherbyDorn,
    MansonSuccop,
}

impl CreepModelKind {
    pub const ALL: [CreepModelKind; 3] = [
        CreepModelKind::LarsonMiller,
        CreepModelKind::OrrSherbyDorn,
        CreepModelKind::MansonSuccop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CreepModelKind::LarsonMiller => "LarsonMiller",
            CreepModelKind::OrrSherbyDorn => "OrrSherbyDorn",
            CreepModelKind::MansonSuccop => "MansonSuccop",
        }
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            CreepModelKind::LarsonMiller => "LM",
            CreepModelKind::OrrSherbyDorn => "OSD",
            CreepModelKind::MansonSuccop => "MS",
        }
    }

    /// Search interval for the model constant, sized to the usual magnitudes
    /// of `C` for each law with `T` in kelvin.
    pub fn default_constant_bracket(self) -> (f64, f64) {
        match self {
            CreepModelKind::LarsonMiller => (1.0, 40.0),
            CreepModelKind::OrrSherbyDorn => (1e3, 1e5),
            CreepModelKind::MansonSuccop => (1e-3, 1e-1),
        }
    }

    /// Default STLS threshold (the finer of the two usual settings per law).
    pub fn default_threshold(self) -> f64 {
        match self {
            CreepModelKind::LarsonMiller => 0.01,
            CreepModelKind::OrrSherbyDorn | CreepModelKind::MansonSuccop => 5e-6,
        }
    }
}

impl fmt::Display for CreepModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CreepModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "lm" | "larsonmiller" => Ok(CreepModelKind::LarsonMiller),
            "osd" | "orrsherbydorn" => Ok(CreepModelKind::OrrSherbyDorn),
            "ms" | "mansonsuccop" => Ok(CreepModelKind::MansonSuccop),
            _ => Err(ModelError::UnknownKind(s.to_string())),
        }
    }
}

/// `P(σ) = a₀ + a₁σ + … + a_{n−1}σ^{n−1}`, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolynomialLaw {
    coefficients: Vec<f64>,
}

impl PolynomialLaw {
    pub fn new(mut coefficients: Vec<f64>) -> Result<Self, ModelError> {
        if coefficients.is_empty() {
            return Err(ModelError::EmptyLaw);
        }
        if let Some((index, &value)) = coefficients
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite())
        {
            return Err(ModelError::NonFiniteCoefficient { index, value });
        }
        while coefficients.len() > 1 && coefficients[coefficients.len() - 1] == 0.0 {
            coefficients.pop();
        }
        Ok(Self { coefficients })
    }

    pub fn constant(value: f64) -> Result<Self, ModelError> {
        Self::new(vec![value])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Powers carrying a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }

    pub fn evaluate(&self, stress: f64) -> f64 {
        horner(&self.coefficients, stress)
    }
}

impl TryFrom<Vec<f64>> for PolynomialLaw {
    type Error = ModelError;

    fn try_from(value: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<PolynomialLaw> for Vec<f64> {
    fn from(law: PolynomialLaw) -> Self {
        law.coefficients
    }
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// A random-variable slot of a fitted model: polynomial coefficient `a_k`
/// or the model constant `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ParameterName {
    Coefficient(usize),
    Constant,
}

impl fmt::Display for ParameterName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterName::Coefficient(k) => write!(f, "a{k}"),
            ParameterName::Constant => f.write_str("C"),
        }
    }
}

impl FromStr for ParameterName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "C" || s == "c" {
            return Ok(ParameterName::Constant);
        }
        s.strip_prefix('a')
            .and_then(|k| k.parse::<usize>().ok())
            .map(ParameterName::Coefficient)
            .ok_or_else(|| ModelError::UnknownParameter(s.to_string()))
    }
}

impl TryFrom<String> for ParameterName {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<ParameterName> for String {
    fn from(name: ParameterName) -> Self {
        name.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFittedModel")]
pub struct FittedCreepModel {
    kind: CreepModelKind,
    coefficients: PolynomialLaw,
    constant: f64,
}

#[derive(Deserialize)]
struct RawFittedModel {
    kind: CreepModelKind,
    coefficients: PolynomialLaw,
    constant: f64,
}

impl TryFrom<RawFittedModel> for FittedCreepModel {
    type Error = ModelError;

    fn try_from(raw: RawFittedModel) -> Result<Self, Self::Error> {
        Self::new(raw.kind, raw.coefficients, raw.constant)
    }
}

impl FittedCreepModel {
    pub fn new(kind: CreepModelKind, law: PolynomialLaw, constant: f64) -> Result<Self, ModelError> {
        if !constant.is_finite() {
            return Err(ModelError::InvalidConstant {
                kind,
                value: constant,
                reason: "must be finite",
            });
        }
        if kind == CreepModelKind::LarsonMiller && constant <= 0.0 {
            return Err(ModelError::InvalidConstant {
                kind,
                value: constant,
                reason: "Larson-Miller constant must be positive",
            });
        }
        Ok(Self {
            kind,
            coefficients: law,
            constant,
        })
    }

    pub fn kind(&self) -> CreepModelKind {
        self.kind
    }

    pub fn law(&self) -> &PolynomialLaw {
        &self.coefficients
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Active coefficients (nonzero powers) followed by `C`.
    pub fn parameter_names(&self) -> Vec<ParameterName> {
        self.coefficients
            .support()
            .into_iter()
            .map(ParameterName::Coefficient)
            .chain(std::iter::once(ParameterName::Constant))
            .collect()
    }

    pub fn parameter(&self, name: ParameterName) -> Result<f64, ModelError> {
        match name {
            ParameterName::Constant => Ok(self.constant),
            ParameterName::Coefficient(k) => self
                .coefficients
                .coefficients()
                .get(k)
                .copied()
                .ok_or_else(|| ModelError::UnknownParameter(name.to_string())),
        }
    }

    pub fn log10_rupture_time(&self, stress: f64, temperature: f64) -> f64 {
        log10_rupture_time(
            self.kind,
            self.coefficients.coefficients(),
            self.constant,
            stress,
            temperature,
        )
    }
}

fn log10_rupture_time(
    kind: CreepModelKind,
    coefficients: &[f64],
    constant: f64,
    stress: f64,
    temperature: f64,
) -> f64 {
    let p = horner(coefficients, stress);
    match kind {
        CreepModelKind::LarsonMiller => p / temperature - constant,
        CreepModelKind::OrrSherbyDorn => p + constant / temperature,
        CreepModelKind::MansonSuccop => p - constant * temperature,
    }
}

fn checked_power_of_ten(exponent: f64) -> Result<f64, ModelError> {
    if !exponent.is_finite() || exponent.abs() > MAX_LOG10_EXPONENT {
        return Err(ModelError::Overflow { exponent });
    }
    Ok(10f64.powf(exponent))
}

fn check_condition(stress: f64, temperature: f64) -> Result<(), ModelError> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if ok(stress) && ok(temperature) {
        Ok(())
    } else {
        Err(ModelError::InvalidCondition {
            stress,
            temperature,
        })
    }
}

/// Time-temperature parameter of one test record.
pub fn parameter_from_record(kind: CreepModelKind, record: &CreepRecord, constant: f64) -> f64 {
    let log_t = record.rupture_time.log10();
    let t = record.temperature;
    match kind {
        CreepModelKind::LarsonMiller => t * (constant + log_t),
        CreepModelKind::OrrSherbyDorn => log_t - constant / t,
        CreepModelKind::MansonSuccop => log_t + constant * t,
    }
}

/// Predicted rupture time in hours.
pub fn rupture_time(model: &FittedCreepModel, stress: f64, temperature: f64) -> Result<f64, ModelError> {
    check_condition(stress, temperature)?;
    checked_power_of_ten(model.log10_rupture_time(stress, temperature))
}

/// Gradient of `ŷ = log₁₀ t_r` with respect to each named parameter.
///
/// `ŷ` is linear in every parameter, so these are exact and independent
/// of the current parameter values.
pub fn predictor_partials(
    model: &FittedCreepModel,
    stress: f64,
    temperature: f64,
    retained: &[ParameterName],
) -> Result<Vec<f64>, ModelError> {
    check_condition(stress, temperature)?;
    let n_coeffs = model.law().coefficients().len();
    retained
        .iter()
        .map(|name| match *name {
            ParameterName::Coefficient(k) if k < n_coeffs => {
                let s = stress.powi(k as i32);
                Ok(match model.kind {
                    CreepModelKind::LarsonMiller => s / temperature,
                    _ => s,
                })
            }
            ParameterName::Coefficient(_) => Err(ModelError::UnknownParameter(name.to_string())),
            ParameterName::Constant => Ok(match model.kind {
                CreepModelKind::LarsonMiller => -1.0,
                CreepModelKind::OrrSherbyDorn => 1.0 / temperature,
                CreepModelKind::MansonSuccop => -temperature,
            }),
        })
        .collect()
}

/// Maps a vector of values for selected parameter slots onto a base model
/// and evaluates it. Used where sampled values may leave the validated
/// domain of [`FittedCreepModel`] (e.g. a sampled `C_LM ≤ 0`).
#[derive(Debug, Clone)]
pub struct ParameterMap {
    kind: CreepModelKind,
    coefficients: Vec<f64>,
    constant: f64,
    slots: Vec<ParameterName>,
}

impl ParameterMap {
    pub fn new(base: &FittedCreepModel, slots: &[ParameterName]) -> Result<Self, ModelError> {
        Ok(Self::from_parts(
            base.kind(),
            base.law().coefficients().to_vec(),
            base.constant(),
            slots,
        ))
    }

    /// Map over explicit coefficients and constant, bypassing the
    /// validation of [`FittedCreepModel`].
    pub fn from_parts(
        kind: CreepModelKind,
        mut coefficients: Vec<f64>,
        constant: f64,
        slots: &[ParameterName],
    ) -> Self {
        for slot in slots {
            if let ParameterName::Coefficient(k) = *slot {
                if k >= coefficients.len() {
                    coefficients.resize(k + 1, 0.0);
                }
            }
        }
        Self {
            kind,
            coefficients,
            constant,
            slots: slots.to_vec(),
        }
    }

    pub fn slots(&self) -> &[ParameterName] {
        &self.slots
    }

    pub fn kind(&self) -> CreepModelKind {
        self.kind
    }

    /// `log₁₀ t_r` with the slot values substituted.
    pub fn log10_rupture_time(&self, values: &[f64], stress: f64, temperature: f64) -> f64 {
        debug_assert_eq!(values.len(), self.slots.len());
        let mut coefficients = self.coefficients.clone();
        let mut constant = self.constant;
        for (slot, &v) in self.slots.iter().zip(values) {
            match *slot {
                ParameterName::Coefficient(k) => coefficients[k] = v,
                ParameterName::Constant => constant = v,
            }
        }
        log10_rupture_time(self.kind, &coefficients, constant, stress, temperature)
    }

    pub fn rupture_time(&self, values: &[f64], stress: f64, temperature: f64) -> Result<f64, ModelError> {
        check_condition(stress, temperature)?;
        checked_power_of_ten(self.log10_rupture_time(values, stress, temperature))
    }
}
