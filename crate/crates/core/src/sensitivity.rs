//! Variance-based global sensitivity under independent uniform inputs.
//!
//! Two estimators of first-order (`Sᵢ`) and total (`S_Tᵢ`) Sobol indices:
//!
//! * Monte Carlo pick-freeze: sample matrices `A`, `B` and the cross
//!   matrices `A_B⁽ⁱ⁾` (column `i` of `A` replaced by that of `B`), with
//!   Jansen's estimators
//!   `Sᵢ = [V − ½ E(f(B) − f(A_B⁽ⁱ⁾))²] / V` and
//!   `S_Tᵢ = ½ E(f(A) − f(A_B⁽ⁱ⁾))² / V`.
//! * Polynomial chaos: least-squares fit on a total-degree orthonormal
//!   Legendre basis, then indices from sums of squared coefficients.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{FactorError, PivotedQr};
use crate::rng;

/// Largest tolerated share of failed (non-finite) model evaluations.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// A variance below this fraction of the second moment is round-off.
pub const DEGENERATE_RELATIVE_VARIANCE: f64 = 1e-20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error("invalid input box: {0}")]
    InvalidSpec(String),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("{failed} of {total} model evaluations failed (limit 1%)")]
    ModelFailures { failed: usize, total: usize },
    #[error("output variance is zero; indices are undefined")]
    DegenerateVariance,
    #[error("PCE basis of {basis} terms needs at least {needed} samples, have {samples}")]
    Underdetermined {
        basis: usize,
        needed: usize,
        samples: usize,
    },
    #[error("PCE regression is rank deficient at basis term {0}")]
    RankDeficient(usize),
    #[error("every parameter fell below the total-index threshold {0}")]
    AllFrozen(f64),
}

/// Independent `Xᵢ ~ U(aᵢ, bᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformInputSpec {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl UniformInputSpec {
    pub fn new(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SensitivityError> {
        let d = names.len();
        if d == 0 || lower.len() != d || upper.len() != d {
            return Err(SensitivityError::InvalidSpec(format!(
                "{d} names, {} lower and {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for i in 0..d {
            if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i]) {
                return Err(SensitivityError::InvalidSpec(format!(
                    "{}: need finite lower < upper, got [{}, {}]",
                    names[i], lower[i], upper[i]
                )));
            }
            if names[..i].contains(&names[i]) {
                return Err(SensitivityError::InvalidSpec(format!("duplicate name {}", names[i])));
            }
        }
        Ok(Self { names, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn from_unit(&self, i: usize, u: f64) -> f64 {
        self.lower[i] + u * (self.upper[i] - self.lower[i])
    }

    /// Map `xᵢ` onto `[−1, 1]`.
    fn to_reference(&self, i: usize, x: f64) -> f64 {
        2.0 * (x - self.lower[i]) / (self.upper[i] - self.lower[i]) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    MonteCarlo,
    Pce,
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::MonteCarlo => "MC",
            Estimator::Pce => "PCE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolReport {
    pub names: Vec<String>,
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
    pub estimator: Estimator,
    pub sample_count: usize,
}

impl SobolReport {
    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn first_order_of(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.first_order[i])
    }

    pub fn total_of(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.total[i])
    }

    /// CSV `parameter,first_order,total,estimator,samples`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "parameter,first_order,total,estimator,samples")?;
        for i in 0..self.names.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.names[i],
                self.first_order[i],
                self.total[i],
                self.estimator.label(),
                self.sample_count
            )?;
        }
        Ok(())
    }
}

fn evaluate_rows<F>(model: &F, rows: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    rows.par_iter().map(|x| model(x)).collect()
}

fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Pick-freeze Monte Carlo estimate with Jansen's first-order and total
/// estimators, `n(d + 2)` model evaluations.
///
/// The model signals failure with a non-finite output. Rows with any failed
/// evaluation are dropped; more than 1% failures aborts.
pub fn sobol_mc<F>(model: &F, spec: &UniformInputSpec, n: usize, seed: u64) -> Result<SobolReport, SensitivityError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n < 100 {
        return Err(SensitivityError::TooFewSamples { min: 100, got: n });
    }
    let d = spec.dim();
    let mut rng = rng::stream(seed, 0);
    let mut draw = || -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|i| spec.from_unit(i, rng.random::<f64>())).collect())
            .collect()
    };
    let a = draw();
    let b = draw();

    let f_a = evaluate_rows(model, &a);
    let f_b = evaluate_rows(model, &b);
    let f_ab: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let cross: Vec<Vec<f64>> = a
                .iter()
                .zip(&b)
                .map(|(ra, rb)| {
                    let mut row = ra.clone();
                    row[i] = rb[i];
                    row
                })
                .collect();
            evaluate_rows(model, &cross)
        })
        .collect();

    let total_evals = n * (d + 2);
    let failed = f_a
        .iter()
        .chain(&f_b)
        .chain(f_ab.iter().flatten())
        .filter(|v| !v.is_finite())
        .count();
    if failed as f64 > MAX_FAILURE_RATE * total_evals as f64 {
        return Err(SensitivityError::ModelFailures {
            failed,
            total: total_evals,
        });
    }
    let valid: Vec<usize> = (0..n)
        .filter(|&j| f_a[j].is_finite() && f_b[j].is_finite() && f_ab.iter().all(|c| c[j].is_finite()))
        .collect();
    let m = valid.len() as f64;

    let pooled: Vec<f64> = valid.iter().flat_map(|&j| [f_a[j], f_b[j]]).collect();
    let v = variance(&pooled);
    let second_moment = pooled.iter().map(|x| x * x).sum::<f64>() / pooled.len().max(1) as f64;
    if valid.is_empty() || !(v > DEGENERATE_RELATIVE_VARIANCE * second_moment) {
        return Err(SensitivityError::DegenerateVariance);
    }

    let mut first_order = Vec::with_capacity(d);
    let mut total = Vec::with_capacity(d);
    for cross in &f_ab {
        let sq_b: f64 = valid.iter().map(|&j| (f_b[j] - cross[j]).powi(2)).sum::<f64>() / m;
        let sq_a: f64 = valid.iter().map(|&j| (f_a[j] - cross[j]).powi(2)).sum::<f64>() / m;
        first_order.push((v - 0.5 * sq_b) / v);
        total.push(0.5 * sq_a / v);
    }
    Ok(SobolReport {
        names: spec.names().to_vec(),
        first_order,
        total,
        estimator: Estimator::MonteCarlo,
        sample_count: n,
    })
}

/// Orthonormal Legendre polynomials `√(2k+1) P_k(u)`, `k = 0..=degree`,
/// for `u ~ U(−1, 1)`.
pub fn legendre_orthonormal(u: f64, degree: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(degree + 1);
    p.push(1.0);
    if degree >= 1 {
        p.push(u);
    }
    for k in 1..degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * u * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p.iter()
        .enumerate()
        .map(|(k, v)| v * ((2 * k + 1) as f64).sqrt())
        .collect()
}

/// Multi-indices of total degree `≤ max_degree` in `d` variables, graded
/// by total degree.
pub fn total_degree_indices(d: usize, max_degree: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, d: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == d - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(prefix, d, remaining - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=max_degree {
        fill(&mut Vec::with_capacity(d), d, total, &mut out);
    }
    out
}

/// `C(d + p, p)`.
pub fn basis_size(d: usize, max_degree: usize) -> usize {
    (1..=d).fold(1usize, |acc, i| acc * (max_degree + i) / i)
}

/// Largest degree `≤ requested` whose basis fits in `n / 2` samples.
pub fn feasible_degree(d: usize, n: usize, requested: usize) -> Option<usize> {
    (0..=requested).rev().find(|&p| 2 * basis_size(d, p) <= n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceExpansion {
    pub multi_indices: Vec<Vec<usize>>,
    pub coefficients: Vec<f64>,
    pub max_degree: usize,
    pub input_spec: UniformInputSpec,
    pub sample_count: usize,
}

impl PceExpansion {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let polys: Vec<Vec<f64>> = (0..self.input_spec.dim())
            .map(|i| legendre_orthonormal(self.input_spec.to_reference(i, x[i]), self.max_degree))
            .collect();
        self.multi_indices
            .iter()
            .zip(&self.coefficients)
            .map(|(alpha, c)| c * alpha.iter().enumerate().map(|(i, &k)| polys[i][k]).product::<f64>())
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.multi_indices
            .iter()
            .zip(&self.coefficients)
            .filter(|(alpha, _)| alpha.iter().all(|&k| k == 0))
            .map(|(_, c)| *c)
            .sum()
    }

    /// `D = Σ yⱼ²` over non-constant terms.
    pub fn variance(&self) -> f64 {
        self.multi_indices
            .iter()
            .zip(&self.coefficients)
            .filter(|(alpha, _)| alpha.iter().any(|&k| k > 0))
            .map(|(_, c)| c * c)
            .sum()
    }
}

/// Least-squares PCE on `n` seeded uniform draws in the input box.
pub fn pce_fit<F>(
    model: &F,
    spec: &UniformInputSpec,
    n: usize,
    max_degree: usize,
    seed: u64,
) -> Result<PceExpansion, SensitivityError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = spec.dim();
    let basis = basis_size(d, max_degree);
    if n < 2 * basis {
        return Err(SensitivityError::Underdetermined {
            basis,
            needed: 2 * basis,
            samples: n,
        });
    }
    let mut rng = rng::stream(seed, 0);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|i| spec.from_unit(i, rng.random::<f64>())).collect())
        .collect();
    let outputs = evaluate_rows(model, &points);
    let failed = outputs.iter().filter(|v| !v.is_finite()).count();
    if failed as f64 > MAX_FAILURE_RATE * n as f64 {
        return Err(SensitivityError::ModelFailures { failed, total: n });
    }

    let rows: Vec<usize> = (0..n).filter(|&j| outputs[j].is_finite()).collect();
    let indices = total_degree_indices(d, max_degree);
    let mut design = nalgebra::DMatrix::zeros(rows.len(), indices.len());
    for (r, &j) in rows.iter().enumerate() {
        let polys: Vec<Vec<f64>> = (0..d)
            .map(|i| legendre_orthonormal(spec.to_reference(i, points[j][i]), max_degree))
            .collect();
        for (c, alpha) in indices.iter().enumerate() {
            design[(r, c)] = alpha.iter().enumerate().map(|(i, &k)| polys[i][k]).product();
        }
    }
    let y: Vec<f64> = rows.iter().map(|&j| outputs[j]).collect();
    let qr = PivotedQr::new(&design).map_err(|e| match e {
        FactorError::RankDeficient { column } => SensitivityError::RankDeficient(column),
        FactorError::Underdetermined { .. } => SensitivityError::Underdetermined {
            basis,
            needed: 2 * basis,
            samples: rows.len(),
        },
    })?;
    let coefficients = qr.solve(&y);
    Ok(PceExpansion {
        multi_indices: indices,
        coefficients,
        max_degree,
        input_spec: spec.clone(),
        sample_count: n,
    })
}

/// Sobol indices from PCE coefficients: `Sᵢ = Dᵢ/D` with `Dᵢ` over terms in
/// `Xᵢ` alone, `S_Tᵢ = 1 − D₋ᵢ/D` with `D₋ᵢ` over non-constant terms free
/// of `Xᵢ`.
pub fn sobol_from_pce(expansion: &PceExpansion) -> Result<SobolReport, SensitivityError> {
    let d = expansion.input_spec.dim();
    let total_var = expansion.variance();
    let second_moment = total_var + expansion.mean().powi(2);
    if !(total_var > DEGENERATE_RELATIVE_VARIANCE * second_moment) {
        return Err(SensitivityError::DegenerateVariance);
    }
    let mut only = vec![0.0; d];
    let mut without = vec![0.0; d];
    for (alpha, c) in expansion.multi_indices.iter().zip(&expansion.coefficients) {
        let active: Vec<usize> = (0..d).filter(|&i| alpha[i] > 0).collect();
        if active.is_empty() {
            continue;
        }
        let sq = c * c;
        if active.len() == 1 {
            only[active[0]] += sq;
        }
        for (i, w) in without.iter_mut().enumerate() {
            if alpha[i] == 0 {
                *w += sq;
            }
        }
    }
    Ok(SobolReport {
        names: expansion.input_spec.names().to_vec(),
        first_order: only.iter().map(|v| v / total_var).collect(),
        total: without.iter().map(|v| 1.0 - v / total_var).collect(),
        estimator: Estimator::Pce,
        sample_count: expansion.sample_count,
    })
}

/// Split parameters into retained (`S_Tᵢ ≥ threshold`, input order kept)
/// and frozen.
pub fn rank_parameters(report: &SobolReport, total_threshold: f64) -> Result<(Vec<String>, Vec<String>), SensitivityError> {
    let (retained, frozen): (Vec<_>, Vec<_>) = report
        .names
        .iter()
        .zip(&report.total)
        .partition(|(_, &st)| st >= total_threshold);
    if retained.is_empty() {
        return Err(SensitivityError::AllFrozen(total_threshold));
    }
    Ok((
        retained.into_iter().map(|(n, _)| n.clone()).collect(),
        frozen.into_iter().map(|(n, _)| n.clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_box(d: usize) -> UniformInputSpec {
        UniformInputSpec::new((1..=d).map(|i| format!("X{i}")).collect(), vec![0.0; d], vec![1.0; d]).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(UniformInputSpec::new(vec!["a".into()], vec![1.0], vec![1.0]).is_err());
        assert!(UniformInputSpec::new(vec!["a".into(), "a".into()], vec![0.0; 2], vec![1.0; 2]).is_err());
        assert!(UniformInputSpec::new(vec!["a".into()], vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn constant_model_has_no_indices() {
        let spec = unit_box(2);
        assert_eq!(
            sobol_mc(&|_: &[f64]| 3.0, &spec, 1000, 1).unwrap_err(),
            SensitivityError::DegenerateVariance
        );
        let pce = pce_fit(&|_: &[f64]| 3.0, &spec, 200, 3, 1).unwrap();
        for (alpha, c) in pce.multi_indices.iter().zip(&pce.coefficients) {
            if alpha.iter().all(|&k| k == 0) {
                assert_relative_eq!(*c, 3.0, max_relative = 1e-12);
            } else {
                assert!(c.abs() < 1e-12);
            }
        }
        assert_eq!(sobol_from_pce(&pce).unwrap_err(), SensitivityError::DegenerateVariance);
    }

    #[test]
    fn additive_mc_indices() {
        let r = sobol_mc(&|x: &[f64]| x[0] + 2.0 * x[1], &unit_box(2), 10_000, 7).unwrap();
        assert!((r.first_order[0] - 0.2).abs() < 0.03);
        assert!((r.first_order[1] - 0.8).abs() < 0.03);
        assert!((r.total[0] - 0.2).abs() < 0.03);
        assert!((r.total[1] - 0.8).abs() < 0.03);
    }

    #[test]
    fn too_few_samples_and_failures() {
        let spec = unit_box(2);
        assert!(matches!(sobol_mc(&|x: &[f64]| x[0], &spec, 50, 1), Err(SensitivityError::TooFewSamples { .. })));
        let flaky = |x: &[f64]| if x[0] < 0.1 { f64::NAN } else { x[0] };
        assert!(matches!(sobol_mc(&flaky, &spec, 1000, 1), Err(SensitivityError::ModelFailures { .. })));
        let rare = |x: &[f64]| if x[0] < 1e-3 { f64::NAN } else { x[0] + x[1] };
        assert!(sobol_mc(&rare, &spec, 1000, 1).is_ok());
    }

    #[test]
    fn pce_linear_coefficient() {
        let spec = UniformInputSpec::new(vec!["X1".into(), "X2".into()], vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let pce = pce_fit(&|x: &[f64]| x[0], &spec, 400, 3, 3).unwrap();
        for (alpha, c) in pce.multi_indices.iter().zip(&pce.coefficients) {
            if alpha == &vec![1, 0] {
                assert_relative_eq!(*c, 1.0 / 3f64.sqrt(), max_relative = 1e-10);
            } else {
                assert!(c.abs() < 1e-10, "{alpha:?}: {c}");
            }
        }
        assert_relative_eq!(pce.variance(), 1.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn pce_product_variance_and_indices() {
        // X1·X2 on U(0,1)²: E = 1/4, E[(X1X2)²] = 1/9, V = 7/144.
        // V1 = V2 = Var(X/2) = 1/48, interaction = 7/144 − 2/48 = 1/144.
        let pce = pce_fit(&|x: &[f64]| x[0] * x[1], &unit_box(2), 1000, 10, 5).unwrap();
        assert!((pce.variance() - 7.0 / 144.0).abs() < 1e-6);
        let r = sobol_from_pce(&pce).unwrap();
        assert_relative_eq!(r.first_order[0], r.first_order[1], epsilon = 1e-9);
        assert_relative_eq!(r.first_order[0], (1.0 / 48.0) / (7.0 / 144.0), epsilon = 1e-8);
        assert!(r.total[0] > r.first_order[0]);
        assert_relative_eq!(r.total[0], (1.0 / 48.0 + 1.0 / 144.0) / (7.0 / 144.0), epsilon = 1e-8);
    }

    #[test]
    fn pce_additive_indices_exact() {
        let pce = pce_fit(&|x: &[f64]| x[0] + 2.0 * x[1], &unit_box(2), 1000, 10, 5).unwrap();
        let r = sobol_from_pce(&pce).unwrap();
        assert!((r.first_order[0] - 0.2).abs() < 1e-6);
        for i in 0..2 {
            assert!((r.total[i] - r.first_order[i]).abs() < 1e-9);
        }
        assert!((r.first_order.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pce_underdetermined() {
        match pce_fit(&|x: &[f64]| x[0], &unit_box(4), 1000, 10, 1) {
            Err(SensitivityError::Underdetermined { basis: 1001, needed: 2002, samples: 1000 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(feasible_degree(4, 1000, 10), Some(8));
        assert_eq!(feasible_degree(2, 1000, 10), Some(10));
    }

    #[test]
    fn basis_enumeration() {
        for (d, p) in [(1, 4), (2, 10), (3, 5), (4, 8)] {
            let idx = total_degree_indices(d, p);
            assert_eq!(idx.len(), basis_size(d, p));
            assert!(idx.iter().all(|a| a.iter().sum::<usize>() <= p));
            let mut dedup = idx.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), idx.len());
        }
        assert_eq!(basis_size(2, 10), 66);
    }

    #[test]
    fn legendre_orthonormality_by_quadrature() {
        // Midpoint rule on [−1, 1] with density 1/2.
        let m = 20_000;
        let mut gram = [[0.0; 5]; 5];
        for j in 0..m {
            let u = -1.0 + (j as f64 + 0.5) * 2.0 / m as f64;
            let p = legendre_orthonormal(u, 4);
            for a in 0..5 {
                for b in 0..5 {
                    gram[a][b] += p[a] * p[b] / m as f64;
                }
            }
        }
        for a in 0..5 {
            for b in 0..5 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a][b] - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ishigami_mc() {
        let (a, b) = (7.0, 0.1);
        let f = move |x: &[f64]| x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin();
        let spec = UniformInputSpec::new(vec!["X1".into(), "X2".into(), "X3".into()], vec![-PI; 3], vec![PI; 3]).unwrap();
        let r = sobol_mc(&f, &spec, 10_000, 11).unwrap();
        assert!((r.first_order[0] - 0.3139).abs() < 0.03);
        assert!((r.first_order[1] - 0.4424).abs() < 0.03);
        assert!(r.first_order[2].abs() < 0.03);
    }

    #[test]
    fn pce_coefficient_order_is_irrelevant() {
        let pce = pce_fit(&|x: &[f64]| x[0] * x[1] + x[1], &unit_box(2), 500, 4, 2).unwrap();
        let mut shuffled = pce.clone();
        shuffled.multi_indices.reverse();
        shuffled.coefficients.reverse();
        let a = sobol_from_pce(&pce).unwrap();
        let b = sobol_from_pce(&shuffled).unwrap();
        for i in 0..2 {
            assert_relative_eq!(a.first_order[i], b.first_order[i], max_relative = 1e-12);
            assert_relative_eq!(a.total[i], b.total[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn ranking() {
        let report = SobolReport {
            names: vec!["X1".into(), "X2".into()],
            first_order: vec![0.2, 0.8],
            total: vec![0.2, 0.8],
            estimator: Estimator::Pce,
            sample_count: 10,
        };
        assert_eq!(rank_parameters(&report, 0.0).unwrap().0, vec!["X1", "X2"]);
        let (kept, frozen) = rank_parameters(&report, 0.5).unwrap();
        assert_eq!(kept, vec!["X2"]);
        assert_eq!(frozen, vec!["X1"]);
        assert_eq!(rank_parameters(&report, 0.9).unwrap_err(), SensitivityError::AllFrozen(0.9));

        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "parameter,first_order,total,estimator,samples\nX1,0.2,0.2,PCE,10\nX2,0.8,0.8,PCE,10\n"
        );
    }
}
