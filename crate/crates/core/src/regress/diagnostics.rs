//! Adjusted R², mean absolute error and root mean square error.

use crate::error::{Error, Result};

fn check_lengths(observed: &[f64], fitted: &[f64]) -> Result<()> {
    if observed.len() != fitted.len() {
        return Err(Error::Shape(format!(
            "{} observed values vs {} fitted values",
            observed.len(),
            fitted.len()
        )));
    }
    if observed.is_empty() {
        return Err(Error::Shape("empty input".into()));
    }
    Ok(())
}

fn sse(observed: &[f64], fitted: &[f64]) -> f64 {
    observed
        .iter()
        .zip(fitted)
        .map(|(y, f)| (y - f).powi(2))
        .sum()
}

fn sst(observed: &[f64]) -> f64 {
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    observed.iter().map(|y| (y - mean).powi(2)).sum()
}

/// `1 - (SSE / (n - k)) / (SST / (n - 1))`, with `k` counting the intercept.
pub fn adjusted_r_squared(observed: &[f64], fitted: &[f64], k: usize) -> Result<f64> {
    check_lengths(observed, fitted)?;
    let n = observed.len();
    if n <= k || n <= 1 {
        return Err(Error::InsufficientData { n, k });
    }
    let sst = sst(observed);
    if sst == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let sse = sse(observed, fitted);
    Ok(1.0 - (sse / (n - k) as f64) / (sst / (n - 1) as f64))
}

/// Unadjusted `1 - SSE / SST`.
pub fn r_squared(observed: &[f64], fitted: &[f64]) -> Result<f64> {
    check_lengths(observed, fitted)?;
    let sst = sst(observed);
    if sst == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(1.0 - sse(observed, fitted) / sst)
}

pub fn mae(observed: &[f64], fitted: &[f64]) -> Result<f64> {
    check_lengths(observed, fitted)?;
    let total: f64 = observed
        .iter()
        .zip(fitted)
        .map(|(y, f)| (y - f).abs())
        .sum();
    Ok(total / observed.len() as f64)
}

pub fn rmse(observed: &[f64], fitted: &[f64]) -> Result<f64> {
    check_lengths(observed, fitted)?;
    Ok((sse(observed, fitted) / observed.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Observed (1, 2, 4) against the least-squares line -2/3 + 3/2 x.
    const OBS: [f64; 3] = [1.0, 2.0, 4.0];
    const FIT: [f64; 3] = [5.0 / 6.0, 7.0 / 3.0, 23.0 / 6.0];

    #[test]
    fn perfect_fit() {
        assert_eq!(adjusted_r_squared(&OBS, &OBS, 2).unwrap(), 1.0);
        assert_eq!(mae(&OBS, &OBS).unwrap(), 0.0);
        assert_eq!(rmse(&OBS, &OBS).unwrap(), 0.0);
    }

    #[test]
    fn mean_prediction_gives_zero() {
        let m = 7.0 / 3.0;
        let r2 = adjusted_r_squared(&OBS, &[m, m, m], 1).unwrap();
        assert!(r2.abs() < 1e-15);
    }

    #[test]
    fn three_point_values() {
        assert!((adjusted_r_squared(&OBS, &FIT, 2).unwrap() - 13.0 / 14.0).abs() < 1e-12);
        assert!((mae(&OBS, &FIT).unwrap() - 2.0 / 9.0).abs() < 1e-12);
        assert!((rmse(&OBS, &FIT).unwrap() - (1.0f64 / 18.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_residuals() {
        let c = -0.75;
        let fitted: Vec<f64> = OBS.iter().map(|y| y - c).collect();
        assert!((mae(&OBS, &fitted).unwrap() - 0.75).abs() < 1e-15);
        assert!((rmse(&OBS, &fitted).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(mae(&OBS, &OBS[..2]), Err(Error::Shape(_))));
        assert!(matches!(rmse(&[], &[]), Err(Error::Shape(_))));
        assert!(matches!(
            adjusted_r_squared(&[2.0, 2.0, 2.0], &[2.0, 2.0, 2.0], 1),
            Err(Error::DegenerateVariance)
        ));
        assert!(matches!(
            adjusted_r_squared(&OBS, &FIT, 3),
            Err(Error::InsufficientData { n: 3, k: 3 })
        ));
    }
}
