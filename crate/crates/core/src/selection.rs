//! Gaussian likelihood and information criteria over `log₁₀ t_r`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::CreepDataset;
use crate::models::{CreepModelKind, FittedCreepModel};
use crate::propagation::residuals;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("error variance must be positive and finite, got {0}")]
    InvalidErrorVariance(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("scores were computed on different datasets (m = {0} vs {1})")]
    Incomparable(usize, usize),
    #[error("no scores to rank")]
    NoScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub kind: CreepModelKind,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_obs: usize,
}

impl ModelScore {
    /// `AIC = 2n − 2 ln L`, `BIC = n ln m − 2 ln L`.
    pub fn from_log_likelihood(kind: CreepModelKind, log_likelihood: f64, n_params: usize, n_obs: usize) -> Self {
        let n = n_params as f64;
        Self {
            kind,
            log_likelihood,
            aic: 2.0 * n - 2.0 * log_likelihood,
            bic: n * (n_obs as f64).ln() - 2.0 * log_likelihood,
            n_params,
            n_obs,
        }
    }
}

/// `ln L = −(m/2) ln 2π − m ln σ_e − Σ r² / (2σ_e²)`.
pub fn log_likelihood_from_residuals(residuals: &[f64], error_variance: f64) -> Result<f64, SelectionError> {
    if !(error_variance.is_finite() && error_variance > 0.0) {
        return Err(SelectionError::InvalidErrorVariance(error_variance));
    }
    if residuals.is_empty() {
        return Err(SelectionError::EmptyDataset);
    }
    let m = residuals.len() as f64;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(-0.5 * m * (2.0 * PI).ln() - 0.5 * m * error_variance.ln() - rss / (2.0 * error_variance))
}

/// Likelihood of the observed `log₁₀ t_r` at the fitted parameter values.
pub fn log_likelihood(
    dataset: &CreepDataset,
    model: &FittedCreepModel,
    error_variance: f64,
) -> Result<f64, SelectionError> {
    log_likelihood_from_residuals(&residuals(dataset, model), error_variance)
}

/// `n_params` counts the retained random parameters; `σ_e²` is not one.
pub fn score(
    dataset: &CreepDataset,
    model: &FittedCreepModel,
    error_variance: f64,
    n_params: usize,
) -> Result<ModelScore, SelectionError> {
    let ll = log_likelihood(dataset, model, error_variance)?;
    Ok(ModelScore::from_log_likelihood(model.kind(), ll, n_params, dataset.len()))
}

fn compare(a: &ModelScore, b: &ModelScore) -> Ordering {
    a.bic
        .total_cmp(&b.bic)
        .then(a.aic.total_cmp(&b.aic))
        .then(a.n_params.cmp(&b.n_params))
        .then(a.kind.cmp(&b.kind))
}

/// Ascending by BIC, then AIC, then fewer parameters, then law order.
pub fn rank(scores: &[ModelScore]) -> Result<Vec<ModelScore>, SelectionError> {
    let first = scores.first().ok_or(SelectionError::NoScores)?;
    if let Some(other) = scores.iter().find(|s| s.n_obs != first.n_obs) {
        return Err(SelectionError::Incomparable(first.n_obs, other.n_obs));
    }
    let mut ranked = scores.to_vec();
    ranked.sort_by(compare);
    Ok(ranked)
}

/// CSV `model,n_params,n_obs,log_likelihood,aic,bic,rank` in ranked order.
pub fn write_scores_csv<W: Write>(ranked: &[ModelScore], mut out: W) -> std::io::Result<()> {
    writeln!(out, "model,n_params,n_obs,log_likelihood,aic,bic,rank")?;
    for (i, s) in ranked.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.kind.name(),
            s.n_params,
            s.n_obs,
            s.log_likelihood,
            s.aic,
            s.bic,
            i + 1
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

    #[test]
    fn gaussian_normalizer() {
        assert_relative_eq!(log_likelihood_from_residuals(&[0.0], 1.0).unwrap(), -HALF_LN_2PI, max_relative = 1e-15);
        assert_relative_eq!(
            log_likelihood_from_residuals(&[1.0], 1.0).unwrap(),
            -HALF_LN_2PI - 0.5,
            max_relative = 1e-15
        );
        assert!(log_likelihood_from_residuals(&[1.0], 0.0).is_err());
        assert!(log_likelihood_from_residuals(&[], 1.0).is_err());
    }

    #[test]
    fn product_of_densities() {
        let r: [f64; 5] = [0.12, -0.31, 0.05, 0.44, -0.2];
        let s2: f64 = 0.07;
        let direct: f64 = r
            .iter()
            .map(|x: &f64| ((-x * x / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()).ln())
            .sum();
        assert_relative_eq!(log_likelihood_from_residuals(&r, s2).unwrap(), direct, epsilon = 1e-10);
    }

    #[test]
    fn criteria_arithmetic() {
        let s = ModelScore::from_log_likelihood(CreepModelKind::LarsonMiller, -10.0, 2, 7);
        assert_eq!(s.aic, 24.0);
        assert_relative_eq!(s.bic, 23.891820298110627, max_relative = 1e-14);
    }

    #[test]
    fn ranking_and_csv() {
        let a = ModelScore::from_log_likelihood(CreepModelKind::MansonSuccop, -10.0, 2, 50);
        let b = ModelScore::from_log_likelihood(CreepModelKind::LarsonMiller, -5.0, 2, 50);
        let c = ModelScore::from_log_likelihood(CreepModelKind::OrrSherbyDorn, -10.0, 2, 50);
        let ranked = rank(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let kinds: Vec<_> = ranked.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [CreepModelKind::LarsonMiller, CreepModelKind::OrrSherbyDorn, CreepModelKind::MansonSuccop]
        );
        assert_eq!(rank(&[c, a, b]).unwrap(), ranked);

        let mut csv = Vec::new();
        write_scores_csv(&ranked[..1], &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("model,n_params,n_obs,log_likelihood,aic,bic,rank\nLarsonMiller,2,50,-5,14,"));
        assert!(text.ends_with(",1\n"));
    }

    #[test]
    fn mixed_observation_counts_rejected() {
        let a = ModelScore::from_log_likelihood(CreepModelKind::LarsonMiller, -1.0, 2, 50);
        let b = ModelScore::from_log_likelihood(CreepModelKind::MansonSuccop, -1.0, 2, 49);
        assert_eq!(rank(&[a, b]).unwrap_err(), SelectionError::Incomparable(50, 49));
        assert_eq!(rank(&[]).unwrap_err(), SelectionError::NoScores);
    }

    proptest! {
        #[test]
        fn identities_hold(ll in -1e4f64..1e4, n in 0usize..20, m in 1usize..500) {
            let s = ModelScore::from_log_likelihood(CreepModelKind::OrrSherbyDorn, ll, n, m);
            prop_assert!((s.aic - (2.0 * n as f64 - 2.0 * ll)).abs() <= 1e-12 * s.aic.abs().max(1.0));
            prop_assert!((s.bic - (n as f64 * (m as f64).ln() - 2.0 * ll)).abs() <= 1e-12 * s.bic.abs().max(1.0));
        }

        #[test]
        fn bic_penalizes_more_for_large_m(ll in -1e3f64..1e3, n in 0usize..20, m in 8usize..1000) {
            let k = CreepModelKind::LarsonMiller;
            let (a0, a1) = (ModelScore::from_log_likelihood(k, ll, n, m), ModelScore::from_log_likelihood(k, ll, n + 1, m));
            prop_assert!(a1.bic - a0.bic > a1.aic - a0.aic);
        }

        #[test]
        fn useless_parameter_never_lowers_bic(
            r in proptest::collection::vec(-1.0f64..1.0, 8..60),
            n in 1usize..5,
        ) {
            // A zero coefficient leaves residuals unchanged but costs a degree of freedom.
            let rss: f64 = r.iter().map(|x| x * x).sum();
            prop_assume!(rss > 1e-12);
            let m = r.len();
            let bic = |n: usize| {
                let s2 = rss / (m - n) as f64;
                let ll = log_likelihood_from_residuals(&r, s2).unwrap();
                ModelScore::from_log_likelihood(CreepModelKind::LarsonMiller, ll, n, m).bic
            };
            prop_assert!(bic(n + 1) >= bic(n));
        }

        #[test]
        fn rank_is_permutation_stable(
            lls in proptest::collection::vec(-50.0f64..0.0, 3),
            ns in proptest::collection::vec(1usize..5, 3),
        ) {
            let scores: Vec<_> = CreepModelKind::ALL
                .iter()
                .zip(lls.iter().zip(&ns))
                .map(|(&k, (&ll, &n))| ModelScore::from_log_likelihood(k, ll, n, 30))
                .collect();
            let forward = rank(&scores).unwrap();
            let mut reversed = scores.clone();
            reversed.reverse();
            prop_assert_eq!(rank(&reversed).unwrap(), forward.clone());
            prop_assert!(forward.windows(2).all(|w| compare(&w[0], &w[1]) != Ordering::Greater));
        }
    }
}
