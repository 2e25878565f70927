//! Adam and the mini-batch training loop.

mod adam;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};

use crate::data::{EncodedExample, TargetTransform};
use crate::metrics::{compute_report, MetricsError, MetricsReport};
use crate::model::{Model, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error("missing gradient for parameter `{0}`")]
    MissingGradient(String),
    #[error("optimizer state mismatch: {0}")]
    StateMismatch(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("batch size must be positive")]
    ZeroBatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    pub adam: AdamConfig,
    /// Labels are stored transformed; metrics are reported on counts.
    pub target_transform: TargetTransform,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            seed: 0,
            adam: AdamConfig::default(),
            target_transform: TargetTransform::None,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example loss over the epoch's mini-batches.
    pub train_loss: f64,
    pub validation: Option<MetricsReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were retained.
    pub best_epoch: usize,
}

impl TrainingLog {
    /// Line-delimited JSON, one object per epoch.
    pub fn to_jsonl(&self) -> String {
        self.epochs
            .iter()
            .map(|e| serde_json::to_string(e).expect("epoch record serializes") + "\n")
            .collect()
    }
}

pub struct FitOutcome {
    /// Parameters with the lowest validation MAE (last epoch when no validation set).
    pub best: Model,
    pub last: Model,
    pub log: TrainingLog,
}

/// Predictions and labels mapped back to retweet counts.
pub fn evaluate(
    model: &Model,
    data: &[EncodedExample],
    transform: TargetTransform,
) -> Result<MetricsReport, OptimError> {
    let preds = model.forward(data)?;
    let predicted: Vec<f64> = preds.data().iter().map(|&p| transform.inverse(p)).collect();
    let actual: Vec<f64> = data.iter().map(|e| transform.inverse(e.label)).collect();
    Ok(compute_report(&actual, &predicted)?)
}

/// Mini-batch Adam training. Each epoch reshuffles the training set, visits
/// every example once (the last partial batch included) and evaluates on
/// `valid` when it is non-empty.
pub fn fit(
    mut model: Model,
    train: &[EncodedExample],
    valid: &[EncodedExample],
    cfg: &FitConfig,
) -> Result<FitOutcome, OptimError> {
    if train.is_empty() {
        return Err(OptimError::EmptyTrainingSet);
    }
    if cfg.batch_size == 0 {
        return Err(OptimError::ZeroBatch);
    }
    let mut adam = AdamState::new(cfg.adam, model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, Model)> = None;
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let loss = model.accumulate_gradients(&batch)?;
            loss_sum += loss * chunk.len() as f64;
            adam.step(model.params_mut())?;
        }
        let train_loss = loss_sum / train.len() as f64;
        let validation = if valid.is_empty() {
            None
        } else {
            let report = evaluate(&model, valid, cfg.target_transform)?;
            if best.as_ref().is_none_or(|(mae, _)| report.mae < *mae) {
                best = Some((report.mae, model.clone()));
                log.best_epoch = epoch;
            }
            Some(report)
        };
        log::info!(
            "epoch {epoch}/{}: train_loss={train_loss:.6}{}",
            cfg.epochs,
            validation
                .as_ref()
                .map(|r| format!(" val_mae={:.4}", r.mae))
                .unwrap_or_default()
        );
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation,
        });
    }
    let best = match best {
        Some((_, m)) => m,
        None => {
            log.best_epoch = cfg.epochs;
            model.clone()
        }
    };
    Ok(FitOutcome { best, last: model, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gradcheck::random_batch, Arch, Mode, ModelConfig};

    fn data(n: usize, seed: u64) -> (ModelConfig, Vec<EncodedExample>) {
        let cfg = ModelConfig::miniature(Arch::Rnn, Mode::NumericOnly);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (cfg.clone(), random_batch(&cfg, n, &mut rng))
    }

    #[test]
    fn training_is_deterministic() {
        let (cfg, train) = data(100, 1);
        let (_, valid) = data(10, 2);
        let fc = FitConfig {
            epochs: 3,
            seed: 5,
            ..FitConfig::default()
        };
        let a = fit(Model::new(cfg.clone(), 1).unwrap(), &train, &valid, &fc).unwrap();
        let b = fit(Model::new(cfg, 1).unwrap(), &train, &valid, &fc).unwrap();
        assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn partial_batches_are_trained() {
        // 100 examples with batch 64: two Adam steps per epoch
        let (cfg, train) = data(100, 3);
        let model = Model::new(cfg, 0).unwrap();
        let mut adam = AdamState::new(AdamConfig::default(), model.params());
        let fc = FitConfig {
            epochs: 1,
            ..FitConfig::default()
        };
        let out = fit(model.clone(), &train, &[], &fc).unwrap();
        let mut manual = model;
        let mut order: Vec<usize> = (0..100).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
        let mut steps = 0;
        for chunk in order.chunks(64) {
            let batch: Vec<_> = chunk.iter().map(|&i| train[i].clone()).collect();
            manual.accumulate_gradients(&batch).unwrap();
            adam.step(manual.params_mut()).unwrap();
            steps += 1;
        }
        assert_eq!(steps, 2);
        assert_eq!(adam.t, 2);
        assert_eq!(out.last, manual);
        assert_eq!(out.log.best_epoch, 1);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let (cfg, _) = data(1, 0);
        assert!(matches!(
            fit(Model::new(cfg, 0).unwrap(), &[], &[], &FitConfig::default()),
            Err(OptimError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn log_lines_are_json() {
        let (cfg, train) = data(20, 4);
        let fc = FitConfig {
            epochs: 2,
            ..FitConfig::default()
        };
        let out = fit(Model::new(cfg, 0).unwrap(), &train, &train, &fc).unwrap();
        let jsonl = out.log.to_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(v["epoch"], 2);
        assert!(v["train_loss"].is_f64());
        assert!(v["validation"]["mae"].is_f64());
    }
}
