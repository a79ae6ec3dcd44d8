//! Householder QR least squares.

use crate::error::{Error, Result};

/// Columns are stored separately; every column must have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if let Some((name, c)) = names.iter().zip(&columns).find(|(_, c)| c.len() != n_rows) {
            return Err(Error::Shape(format!(
                "column `{name}` has {} rows, expected {n_rows}",
                c.len()
            )));
        }
        Ok(Self {
            names,
            columns,
            n_rows,
        })
    }

    /// Unnamed columns, labelled `x0`, `x1`, ...
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("x{j}")).collect();
        Self::new(names, columns)
    }

    /// Row-major construction, mostly for tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let columns = (0..k)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        Self::from_columns(columns)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }
}

/// Relative tolerance on the diagonal of R, scaled by the largest column norm.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Solution of a least-squares problem plus the triangular factor needed for
/// coefficient variances.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Upper-triangular R, row-major, `k x k`.
    r: Vec<Vec<f64>>,
}

impl LeastSquares {
    /// Diagonal of `(X'X)^{-1} = R^{-1} R^{-T}`.
    pub fn unscaled_variances(&self) -> Vec<f64> {
        let k = self.r.len();
        // Columns of R^{-1} by back substitution against unit vectors.
        let mut inv = vec![vec![0.0; k]; k];
        for col in 0..k {
            for i in (0..=col).rev() {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for j in (i + 1)..=col {
                    s -= self.r[i][j] * inv[j][col];
                }
                inv[i][col] = s / self.r[i][i];
            }
        }
        inv.iter()
            .map(|row| row.iter().map(|v| v * v).sum())
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `||y - X b||` through a Householder QR factorization of `X`.
///
/// Fails with a collinearity error naming the first column whose remaining
/// norm after orthogonalization falls below `RANK_TOLERANCE` times the
/// largest column norm.
pub fn solve_least_squares(design: &DesignMatrix, response: &[f64]) -> Result<LeastSquares> {
    let n = design.n_rows();
    let k = design.n_cols();
    if response.len() != n {
        return Err(Error::Shape(format!(
            "response has {} rows, design has {n}",
            response.len()
        )));
    }
    if n < k || k == 0 {
        return Err(Error::InsufficientData { n, k });
    }

    let mut a: Vec<Vec<f64>> = design.columns().to_vec();
    let mut b = response.to_vec();
    let max_norm = a.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);
    let tol = RANK_TOLERANCE * max_norm;

    let mut r = vec![vec![0.0; k]; k];
    let mut v = vec![0.0; n];
    for j in 0..k {
        let norm = dot(&a[j][j..], &a[j][j..]).sqrt();
        if !(norm > tol) {
            return Err(Error::Collinearity {
                column: design.names()[j].clone(),
            });
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let v = &mut v[j..];
        v.copy_from_slice(&a[j][j..]);
        v[0] -= alpha;
        let vnorm2 = dot(v, v);

        r[j][j] = alpha;
        if vnorm2 > 0.0 {
            for c in a.iter_mut().skip(j + 1) {
                let s = 2.0 * dot(v, &c[j..]) / vnorm2;
                c[j..]
                    .iter_mut()
                    .zip(v.iter())
                    .for_each(|(x, vi)| *x -= s * vi);
            }
            let s = 2.0 * dot(v, &b[j..]) / vnorm2;
            b[j..]
                .iter_mut()
                .zip(v.iter())
                .for_each(|(x, vi)| *x -= s * vi);
        }
        for (c, col) in a.iter().enumerate().skip(j + 1) {
            r[j][c] = col[j];
        }
    }

    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * coef[j]).sum();
        coef[i] = (b[i] - s) / r[i][i];
    }
    Ok(LeastSquares {
        coefficients: coef,
        r,
    })
}
