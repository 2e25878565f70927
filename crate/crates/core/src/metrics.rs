//! Regression metrics over actual counts `Y` and predictions `Ŷ`.
//!
//! Errors are signed as `actual - predicted`. Relative metrics divide by the
//! mean of the *predictions* and multiply by 100.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {actual} actual vs {predicted} predicted values")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("metrics need at least one value")]
    Empty,
    #[error("relative metric undefined: mean of predictions is zero")]
    ZeroPredictionMean,
    #[error("r2 undefined: actual values are constant")]
    ConstantActual,
}

fn check(actual: &[f64], predicted: &[f64]) -> Result<usize, MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(actual.len())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    let n = check(actual, predicted)?;
    Ok(actual.iter().zip(predicted).map(|(y, p)| (y - p).abs()).sum::<f64>() / n as f64)
}

pub fn mbe(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    let n = check(actual, predicted)?;
    Ok(actual.iter().zip(predicted).map(|(y, p)| y - p).sum::<f64>() / n as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    let n = check(actual, predicted)?;
    Ok((actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / n as f64).sqrt())
}

/// `value / mean(predicted) * 100`.
pub fn relative(value: f64, predicted: &[f64]) -> Result<f64, MetricsError> {
    if predicted.is_empty() {
        return Err(MetricsError::Empty);
    }
    let m = mean(predicted);
    if m == 0.0 {
        return Err(MetricsError::ZeroPredictionMean);
    }
    Ok(value / m * 100.0)
}

/// Coefficient of determination, `1 - RSS / TSS`.
pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check(actual, predicted)?;
    let m = mean(actual);
    let rss: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    let tss: f64 = actual.iter().map(|y| (y - m).powi(2)).sum();
    if tss == 0.0 {
        return Err(MetricsError::ConstantActual);
    }
    Ok(1.0 - rss / tss)
}

/// All seven metrics. Undefined values serialize as `null` with a warning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub mae: f64,
    pub rmae: Option<f64>,
    pub mbe: f64,
    pub rmbe: Option<f64>,
    pub rmse: f64,
    pub rrmse: Option<f64>,
    pub r2: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn compute_report(actual: &[f64], predicted: &[f64]) -> Result<MetricsReport, MetricsError> {
    let n = check(actual, predicted)?;
    let mae_v = mae(actual, predicted)?;
    let mbe_v = mbe(actual, predicted)?;
    let rmse_v = rmse(actual, predicted)?;
    let mut warnings = Vec::new();
    let mut soft = |r: Result<f64, MetricsError>, name: &str| match r {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("{name}: {e}"));
            None
        }
    };
    let rmae = soft(relative(mae_v, predicted), "rmae");
    let rmbe = soft(relative(mbe_v, predicted), "rmbe");
    let rrmse = soft(relative(rmse_v, predicted), "rrmse");
    let r2_v = soft(r2(actual, predicted), "r2");
    Ok(MetricsReport {
        n,
        mae: mae_v,
        rmae,
        mbe: mbe_v,
        rmbe,
        rmse: rmse_v,
        rrmse,
        r2: r2_v,
        warnings,
    })
}
