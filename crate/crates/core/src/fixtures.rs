//! Named reference models and condition grids.
//!
//! Reference 1CrMoV-steel fits serve as ground truths for synthetic data,
//! alongside the four operating conditions used for propagation. The
//! reference LM parameter mean and covariance are kept as given; they are
//! not mutually consistent (the intercept differs from the fitted law and
//! the covariance is not positive semi-definite).

use crate::models::{CreepModelKind, FittedCreepModel, PolynomialLaw};

fn model(kind: CreepModelKind, coefficients: &[f64], constant: f64) -> FittedCreepModel {
    FittedCreepModel::new(kind, PolynomialLaw::new(coefficients.to_vec()).unwrap(), constant)
        .expect("fixture constants are valid")
}

/// `P_LM = 22205 − 12σ`, `C = 23`.
pub fn reference_lm_model() -> FittedCreepModel {
    model(CreepModelKind::LarsonMiller, &[22205.0, -12.0], 23.0)
}

/// `P_OSD = −26.3 − 0.002σ − 0.00003σ²`, `C = 21000`.
pub fn reference_osd_model() -> FittedCreepModel {
    model(CreepModelKind::OrrSherbyDorn, &[-26.3, -0.002, -0.00003], 21000.0)
}

/// `P_MS = 24.8 − 0.011σ − 0.00002σ²`, `C = 0.0289`.
pub fn reference_ms_model() -> FittedCreepModel {
    model(CreepModelKind::MansonSuccop, &[24.8, -0.011, -0.00002], 0.0289)
}

pub fn reference_models() -> [FittedCreepModel; 3] {
    [reference_lm_model(), reference_osd_model(), reference_ms_model()]
}

/// Printed Larson-Miller mean `[a0, a1, C]`; its intercept disagrees with
/// [`reference_lm_model`].
pub fn reference_lm_mean() -> [f64; 3] {
    [26000.0, -9.3, 23.0]
}

/// Printed Larson-Miller covariance (not positive semi-definite).
pub fn reference_lm_covariance() -> Vec<Vec<f64>> {
    [[0.005, 1.7, 4.1], [1.7, 0.07, 1.4], [4.1, 1.4, 3.3]]
        .iter()
        .map(|row| row.iter().map(|v| v * 1e-3).collect())
        .collect()
}

/// The four operating conditions `(σ MPa, T K)`: 137/333 MPa at 550 °C and
/// 47/137 MPa at 650 °C.
pub fn operating_conditions() -> [(f64, f64); 4] {
    [(137.0, 823.15), (333.0, 823.15), (47.0, 923.15), (137.0, 923.15)]
}

pub const SYNTHETIC_STRESSES: [f64; 10] =
    [47.0, 80.0, 110.0, 137.0, 165.0, 195.0, 225.0, 260.0, 295.0, 333.0];

pub const SYNTHETIC_TEMPERATURES: [f64; 5] = [798.15, 823.15, 848.15, 873.15, 898.15];

/// 50-point full-factorial stress × temperature grid.
pub fn synthetic_conditions() -> Vec<(f64, f64)> {
    SYNTHETIC_STRESSES
        .iter()
        .flat_map(|&s| SYNTHETIC_TEMPERATURES.iter().map(move |&t| (s, t)))
        .collect()
}
