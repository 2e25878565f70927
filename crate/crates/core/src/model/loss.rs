#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("loss needs a non-empty batch")]
    Empty,
    #[error("{pred} predictions vs {target} targets")]
    LengthMismatch { pred: usize, target: usize },
}

/// Mean squared error and its gradient `2 (pred - target) / n`.
pub fn loss_mse(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), LossError> {
    if pred.len() != target.len() {
        return Err(LossError::LengthMismatch {
            pred: pred.len(),
            target: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(LossError::Empty);
    }
    let n = pred.len() as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap().0, 0.0);
        let (l, g) = loss_mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g, vec![-1.0, 1.0]);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let pred = [0.3, -1.2, 4.0];
        let target = [1.0, 0.5, 3.0];
        let (_, g) = loss_mse(&pred, &target).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = pred;
            let mut down = pred;
            up[i] += h;
            down[i] -= h;
            let fd = (loss_mse(&up, &target).unwrap().0 - loss_mse(&down, &target).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn empty_batch() {
        assert_eq!(loss_mse(&[], &[]), Err(LossError::Empty));
    }
}
