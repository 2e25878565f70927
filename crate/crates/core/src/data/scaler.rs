use serde::{Deserialize, Serialize};

use super::features::NUM_FEATURES;
use super::DataError;

pub const SCALER_VERSION: u32 = 1;

/// Per-feature z-score standardization fit on the training split.
///
/// Uses the population standard deviation. Constant columns get a
/// standard deviation of 1.0 so they scale to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub version: u32,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[[f64; NUM_FEATURES]]) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::Empty("cannot fit a scaler on zero examples".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; NUM_FEATURES];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; NUM_FEATURES];
        for r in rows {
            for j in 0..NUM_FEATURES {
                var[j] += (r[j] - mean[j]).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            version: SCALER_VERSION,
            mean,
            std,
        })
    }

    pub fn apply(&self, x: &[f64; NUM_FEATURES]) -> [f64; NUM_FEATURES] {
        let mut out = [0.0; NUM_FEATURES];
        for j in 0..NUM_FEATURES {
            out[j] = (x[j] - self.mean[j]) / self.std[j];
        }
        out
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.mean.len() != NUM_FEATURES || self.std.len() != NUM_FEATURES {
            return Err(DataError::Artifact(format!(
                "scaler must have {NUM_FEATURES} entries, got {}/{}",
                self.mean.len(),
                self.std.len()
            )));
        }
        if self.std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(DataError::Artifact(
                "scaler has a non-positive standard deviation".into(),
            ));
        }
        Ok(())
    }
}
