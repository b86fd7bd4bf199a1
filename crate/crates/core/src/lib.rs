//! Uncertainty quantification for creep rupture-life prediction.
//!
//! The pipeline fits a time-temperature-parameter creep law (Larson-Miller,
//! Orr-Sherby-Dorn or Manson-Succop) to rupture data, ranks the law's
//! parameters by Sobol sensitivity, propagates Gaussian parameter
//! uncertainty to a rupture-time distribution by Monte Carlo, and compares
//! the probabilistic models by AIC/BIC.

pub mod dataset;
pub mod fixtures;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod propagation;
pub mod regression;
pub mod rng;
pub mod selection;
pub mod sensitivity;
pub mod stats;
