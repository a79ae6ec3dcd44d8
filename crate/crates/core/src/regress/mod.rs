//! Ordinary least squares with classical inference and fit diagnostics.

mod diagnostics;
mod inference;
mod qr;

pub use diagnostics::{adjusted_r_squared, mae, r_squared, rmse};
pub use inference::{
    t_test, CriticalValues, TTest, DEFAULT_INTERCEPT_CRITICAL, DEFAULT_SLOPE_CRITICAL,
};
pub use qr::{solve_least_squares, DesignMatrix, LeastSquares, RANK_TOLERANCE};

use crate::error::{Error, Result};
use crate::frame::{ModelFrame, RowLabel};

pub const INTERCEPT: &str = "Intercept";

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimate {
    pub name: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub t_statistic: f64,
    pub critical_value: f64,
    pub significant: bool,
}

impl CoefficientEstimate {
    fn new(name: String, estimate: f64, standard_error: f64, critical_value: f64) -> Result<Self> {
        let test = if standard_error > 0.0 {
            t_test(estimate, standard_error, critical_value)?
        } else {
            // Exact fit: zero variance, so any nonzero estimate is infinitely far from zero.
            let t = if estimate == 0.0 {
                0.0
            } else {
                estimate.signum() * f64::INFINITY
            };
            TTest {
                t_statistic: t,
                critical_value,
                significant: estimate != 0.0,
            }
        };
        Ok(Self {
            name,
            estimate,
            standard_error,
            t_statistic: test.t_statistic,
            critical_value: test.critical_value,
            significant: test.significant,
        })
    }

    pub fn decision(&self) -> &'static str {
        if self.significant {
            "Significant"
        } else {
            "Not significant"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub adjusted_r_squared: f64,
    pub r_squared: f64,
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
    pub k: usize,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub response: String,
    /// Intercept first, then one entry per regressor in frame order.
    pub coefficients: Vec<CoefficientEstimate>,
    pub diagnostics: FitDiagnostics,
    pub fitted: Vec<f64>,
    pub rows: Vec<RowLabel>,
    /// Diagonal of `(X'X)^{-1}`; standard errors are `sqrt(s² * v)`.
    pub unscaled_variances: Vec<f64>,
    pub critical_values: Vec<f64>,
}

impl FitResult {
    pub fn intercept(&self) -> &CoefficientEstimate {
        &self.coefficients[0]
    }

    pub fn slopes(&self) -> &[CoefficientEstimate] {
        &self.coefficients[1..]
    }

    pub fn coefficient(&self, name: &str) -> Option<&CoefficientEstimate> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    /// Rebuilds the coefficient table with a new residual variance, keeping
    /// point estimates and critical values.
    pub(crate) fn rescale_standard_errors(&mut self, residual_variance: f64) -> Result<()> {
        let rebuilt = self
            .coefficients
            .iter()
            .zip(&self.unscaled_variances)
            .zip(&self.critical_values)
            .map(|((c, v), crit)| {
                CoefficientEstimate::new(
                    c.name.clone(),
                    c.estimate,
                    (residual_variance * v).sqrt(),
                    *crit,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        self.coefficients = rebuilt;
        Ok(())
    }
}

fn linear_predictor(coefficients: &[f64], columns: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            columns
                .iter()
                .zip(&coefficients[1..])
                .fold(coefficients[0], |acc, (col, b)| acc + b * col[i])
        })
        .collect()
}

/// OLS of the frame response on an intercept plus every frame regressor.
pub fn fit_ols(frame: &ModelFrame, critical: &CriticalValues) -> Result<FitResult> {
    let n = frame.n_rows();
    let k = frame.columns().len() + 1;
    if n <= k {
        return Err(Error::InsufficientData { n, k });
    }

    let mut names = vec![INTERCEPT.to_string()];
    names.extend(frame.regressor_names().iter().cloned());
    let mut columns = vec![vec![1.0; n]];
    columns.extend(frame.columns().iter().cloned());
    let design = DesignMatrix::new(names.clone(), columns)?;

    let ls = solve_least_squares(&design, frame.response())?;
    let fitted = linear_predictor(&ls.coefficients, frame.columns(), n);
    let y = frame.response();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let s2 = sse / (n - k) as f64;

    let unscaled = ls.unscaled_variances();
    let critical_values = critical.resolve(k, n - k)?;
    let coefficients = names
        .into_iter()
        .zip(&ls.coefficients)
        .zip(unscaled.iter().zip(&critical_values))
        .map(|((name, b), (v, c))| CoefficientEstimate::new(name, *b, (s2 * v).sqrt(), *c))
        .collect::<Result<Vec<_>>>()?;

    let diagnostics = FitDiagnostics {
        adjusted_r_squared: adjusted_r_squared(y, &fitted, k)?,
        r_squared: r_squared(y, &fitted)?,
        mae: mae(y, &fitted)?,
        rmse: rmse(y, &fitted)?,
        n,
        k,
        residuals,
    };

    Ok(FitResult {
        response: frame.response_name().to_string(),
        coefficients,
        diagnostics,
        fitted,
        rows: frame.rows().to_vec(),
        unscaled_variances: unscaled,
        critical_values,
    })
}

/// Evaluates `a + sum_j b_j x_j` on every row of `frame`.
pub fn predict(fit: &FitResult, frame: &ModelFrame) -> Result<Vec<f64>> {
    let expected: Vec<&str> = fit.slopes().iter().map(|c| c.name.as_str()).collect();
    let actual: Vec<&str> = frame.regressor_names().iter().map(String::as_str).collect();
    if expected != actual {
        return Err(Error::Schema(format!(
            "frame regressors {actual:?} do not match fitted {expected:?}"
        )));
    }
    Ok(linear_predictor(
        &fit.estimates(),
        frame.columns(),
        frame.n_rows(),
    ))
}
