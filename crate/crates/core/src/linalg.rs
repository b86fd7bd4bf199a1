//! Rank-revealing least squares.
//!
//! Columns are equilibrated to unit norm before a Householder QR with
//! column pivoting, so monomial bases such as `[1, σ, …, σ⁸]` with
//! σ ≈ 300 (column norms spanning twenty decades) stay solvable. Rank is
//! judged on the equilibrated `R` diagonal relative to its first pivot.

use nalgebra::DMatrix;

/// Relative pivot tolerance below which a column counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum FactorError {
    /// More unknowns than equations.
    Underdetermined { rows: usize, cols: usize },
    /// Column (original index) is numerically dependent on the others.
    RankDeficient { column: usize },
}

/// Householder QR of the column-equilibrated matrix `A·S⁻¹·P`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// `R` on and above the diagonal, Householder vectors below (unit
    /// leading entry implied).
    factors: DMatrix<f64>,
    tau: Vec<f64>,
    /// `perm[k]` is the original column placed at position `k`.
    perm: Vec<usize>,
    scale: Vec<f64>,
}

impl PivotedQr {
    pub fn new(a: &DMatrix<f64>) -> Result<Self, FactorError> {
        let (m, n) = a.shape();
        if m < n || n == 0 {
            return Err(FactorError::Underdetermined { rows: m, cols: n });
        }
        let mut factors = a.clone();
        let mut scale = vec![0.0; n];
        for j in 0..n {
            let norm = factors.column(j).norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(FactorError::RankDeficient { column: j });
            }
            scale[j] = norm;
            factors.column_mut(j).scale_mut(1.0 / norm);
        }

        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![0.0; n];
        let mut first_pivot = 0.0;
        for k in 0..n {
            // Exact trailing norms; cheaper downdating formulas lose
            // accuracy exactly in the ill-conditioned cases we care about.
            let (p, best) = (k..n)
                .map(|j| (j, factors.view((k, j), (m - k, 1)).norm()))
                .fold((k, -1.0), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
            if p != k {
                factors.swap_columns(k, p);
                perm.swap(k, p);
            }
            if k == 0 {
                first_pivot = best;
            }
            if best <= RANK_TOLERANCE * first_pivot {
                return Err(FactorError::RankDeficient { column: perm[k] });
            }

            let alpha = factors[(k, k)];
            let beta = -alpha.signum() * best;
            let beta = if alpha == 0.0 { -best } else { beta };
            let t = (beta - alpha) / beta;
            let inv = 1.0 / (alpha - beta);
            for i in (k + 1)..m {
                factors[(i, k)] *= inv;
            }
            factors[(k, k)] = beta;
            tau[k] = t;

            for j in (k + 1)..n {
                let mut dot = factors[(k, j)];
                for i in (k + 1)..m {
                    dot += factors[(i, k)] * factors[(i, j)];
                }
                dot *= t;
                factors[(k, j)] -= dot;
                for i in (k + 1)..m {
                    let v = factors[(i, k)];
                    factors[(i, j)] -= dot * v;
                }
            }
        }

        Ok(Self {
            factors,
            tau,
            perm,
            scale,
        })
    }

    pub fn ncols(&self) -> usize {
        self.perm.len()
    }

    /// Minimizer of `‖y − A x‖₂` in the original column order and scaling.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let (m, n) = self.factors.shape();
        assert_eq!(y.len(), m, "observation length must match row count");
        let mut qty = y.to_vec();
        for k in 0..n {
            let mut dot = qty[k];
            for i in (k + 1)..m {
                dot += self.factors[(i, k)] * qty[i];
            }
            dot *= self.tau[k];
            qty[k] -= dot;
            for i in (k + 1)..m {
                qty[i] -= dot * self.factors[(i, k)];
            }
        }
        let mut z = vec![0.0; n];
        for k in (0..n).rev() {
            let mut acc = qty[k];
            for j in (k + 1)..n {
                acc -= self.factors[(k, j)] * z[j];
            }
            z[k] = acc / self.factors[(k, k)];
        }
        let mut x = vec![0.0; n];
        for (k, &col) in self.perm.iter().enumerate() {
            x[col] = z[k] / self.scale[col];
        }
        x
    }

    /// `(AᵀA)⁻¹` assembled from `R⁻¹R⁻ᵀ`, never forming the normal equations.
    pub fn inverse_gram(&self) -> DMatrix<f64> {
        let n = self.ncols();
        let mut rinv = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            rinv[(j, j)] = 1.0 / self.factors[(j, j)];
            for i in (0..j).rev() {
                let mut acc = 0.0;
                for k in (i + 1)..=j {
                    acc += self.factors[(i, k)] * rinv[(k, j)];
                }
                rinv[(i, j)] = -acc / self.factors[(i, i)];
            }
        }
        let inner = &rinv * rinv.transpose();
        let mut out = DMatrix::<f64>::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let (ia, ib) = (self.perm[a], self.perm[b]);
                out[(ia, ib)] = inner[(a, b)] / (self.scale[ia] * self.scale[ib]);
            }
        }
        out
    }
}
