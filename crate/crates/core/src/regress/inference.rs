//! Coefficient t-tests against critical values.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const DEFAULT_INTERCEPT_CRITICAL: f64 = 1.96;
pub const DEFAULT_SLOPE_CRITICAL: f64 = 1.65;

/// How critical t-values are chosen for each coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum CriticalValues {
    /// One value for the intercept, one shared by every slope.
    Fixed { intercept: f64, slope: f64 },
    /// Explicit values, intercept first, one per coefficient.
    PerCoefficient(Vec<f64>),
    /// Student-t quantile with `n - k` degrees of freedom.
    StudentT { alpha: f64, two_sided: bool },
}

impl Default for CriticalValues {
    fn default() -> Self {
        CriticalValues::Fixed {
            intercept: DEFAULT_INTERCEPT_CRITICAL,
            slope: DEFAULT_SLOPE_CRITICAL,
        }
    }
}

impl CriticalValues {
    /// Resolves one critical value per coefficient (intercept first).
    pub fn resolve(&self, k: usize, df: usize) -> Result<Vec<f64>> {
        let values = match self {
            CriticalValues::Fixed { intercept, slope } => (0..k)
                .map(|j| if j == 0 { *intercept } else { *slope })
                .collect(),
            CriticalValues::PerCoefficient(v) => {
                if v.len() != k {
                    return Err(Error::Shape(format!(
                        "{} critical values for {k} coefficients",
                        v.len()
                    )));
                }
                v.clone()
            }
            CriticalValues::StudentT { alpha, two_sided } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::Config(format!("alpha {alpha} outside (0, 1)")));
                }
                if df == 0 {
                    return Err(Error::InvalidInference(
                        "zero residual degrees of freedom".into(),
                    ));
                }
                let dist = StudentsT::new(0.0, 1.0, df as f64)
                    .map_err(|e| Error::InvalidInference(e.to_string()))?;
                let tail = if *two_sided { alpha / 2.0 } else { *alpha };
                vec![dist.inverse_cdf(1.0 - tail); k]
            }
        };
        if let Some(bad) = values.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInference(format!(
                "critical value must be positive and finite, got {bad}"
            )));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t_statistic: f64,
    pub critical_value: f64,
    pub significant: bool,
}

/// `t = estimate / standard_error`; significant when `|t| >= critical_value`.
pub fn t_test(estimate: f64, standard_error: f64, critical_value: f64) -> Result<TTest> {
    if !(standard_error > 0.0) {
        return Err(Error::InvalidInference(format!(
            "standard error must be positive, got {standard_error}"
        )));
    }
    if !(critical_value > 0.0) {
        return Err(Error::InvalidInference(format!(
            "critical value must be positive, got {critical_value}"
        )));
    }
    let t = estimate / standard_error;
    Ok(TTest {
        t_statistic: t,
        critical_value,
        significant: t.abs() >= critical_value,
    })
}
