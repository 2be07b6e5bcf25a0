use nalgebra::DVector;

use crate::error::{Error, Result};

/// `100 (1 - ‖y - ŷ‖ / ‖y - mean(y)‖)`; 100 is perfect, 0 matches the mean predictor.
pub fn fit_metric(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::shape("fit_metric prediction length", y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(Error::Precondition("fit_metric needs at least one sample".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let den = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::Precondition("fit is undefined for a constant target".into()));
    }
    let num = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(100.0 * (1.0 - num / den))
}

/// Fit of every output channel.
pub fn channel_fits(y: &[DVector<f64>], y_hat: &[DVector<f64>]) -> Result<Vec<f64>> {
    let n_y = y.first().map_or(0, |v| v.len());
    (0..n_y)
        .map(|c| {
            let a: Vec<f64> = y.iter().map(|v| v[c]).collect();
            let b: Vec<f64> = y_hat.iter().map(|v| v[c]).collect();
            fit_metric(&a, &b)
        })
        .collect()
}

/// Root mean squared error of a scalar signal.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::shape("rmse prediction length", y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    Ok((y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64).sqrt())
}

/// RMSE pooled over steps and channels.
pub fn rmse_pooled(y: &[DVector<f64>], y_hat: &[DVector<f64>]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::shape("rmse prediction length", y.len(), y_hat.len()));
    }
    let a: Vec<f64> = y.iter().flat_map(|v| v.iter().copied()).collect();
    let b: Vec<f64> = y_hat.iter().flat_map(|v| v.iter().copied()).collect();
    rmse(&a, &b)
}
