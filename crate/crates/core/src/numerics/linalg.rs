//! Dense solves for the small systems that fix the hybrid cap polynomials.

use crate::error::{Error, Result};

/// Largest system accepted by [`solve_linear`].
pub const MAX_DIM: usize = 8;

/// Condition estimates above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix rows must all have length n".into()));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &SquareMatrix) -> Option<Self> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let pivot = (col..n).max_by(|&p, &q| lu[p * n + col].abs().total_cmp(&lu[q * n + col].abs()))?;
            if lu[pivot * n + col] == 0.0 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot * n + j);
                }
                perm.swap(col, pivot);
            }
            let d = lu[col * n + col];
            for row in col + 1..n {
                let factor = lu[row * n + col] / d;
                lu[row * n + col] = factor;
                for j in col + 1..n {
                    lu[row * n + j] -= factor * lu[col * n + j];
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| y[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// 1-norm of the inverse, column by column.
    fn inverse_norm_one(&self) -> f64 {
        let n = self.n;
        let mut best = 0.0_f64;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            best = best.max(col.iter().map(|v| v.abs()).sum());
        }
        best
    }
}

/// Solves `A x = y` by partial-pivoting elimination.
///
/// Fails when the 1-norm condition number exceeds [`MAX_CONDITION`].
pub fn solve_linear(a: &SquareMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if n == 0 || n > MAX_DIM {
        return Err(Error::DimensionMismatch(format!(
            "system size {n} outside 1..={MAX_DIM}"
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {}, expected {n}",
            y.len()
        )));
    }
    let lu = Lu::factor(a).ok_or(Error::SingularMatrix {
        condition: f64::INFINITY,
    })?;
    let condition = a.norm_one() * lu.inverse_norm_one();
    if !(condition.is_finite() && condition < MAX_CONDITION) {
        return Err(Error::SingularMatrix { condition });
    }
    Ok(lu.solve(y))
}
