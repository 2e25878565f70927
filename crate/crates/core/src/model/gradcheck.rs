//! End-to-end finite-difference check of the MSE loss gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Arch, Mode, Model, ModelConfig, ModelError};
use crate::data::EncodedExample;
use crate::nn::gradcheck::{rel_error, STEP};

#[derive(Debug, Clone, Serialize)]
pub struct ModelCheck {
    pub arch: Arch,
    pub mode: Mode,
    /// Worst relative error per parameter tensor.
    pub per_param: Vec<(String, f64)>,
    pub max_rel_error: f64,
}

/// Random examples compatible with `cfg`.
pub fn random_batch(cfg: &ModelConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<EncodedExample> {
    (0..n)
        .map(|_| EncodedExample {
            numeric: (0..cfg.numeric_dim).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            token_ids: (0..cfg.seq_len).map(|_| rng.gen_range(0..cfg.vocab_size)).collect(),
            label: rng.gen_range(0.0..5.0),
            has_text: true,
        })
        .collect()
}

pub fn check_model(cfg: ModelConfig, seed: u64) -> Result<ModelCheck, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Model::new(cfg.clone(), seed)?;
    let batch = random_batch(&cfg, 3, &mut rng);
    let (_, grads) = model.loss_and_gradients(&batch)?;

    let mut per_param = Vec::new();
    for (slot_idx, analytic) in grads.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..analytic.len() {
            let orig = model.params().slots()[slot_idx].value.data()[i];
            let eval = |v: f64, m: &mut Model| -> Result<f64, ModelError> {
                m.params_mut().slots_mut()[slot_idx].value.data_mut()[i] = v;
                m.loss(&batch)
            };
            let up = eval(orig + STEP, &mut model)?;
            let down = eval(orig - STEP, &mut model)?;
            eval(orig, &mut model)?;
            let numeric = (up - down) / (2.0 * STEP);
            worst = worst.max(rel_error(analytic.data()[i], numeric));
        }
        per_param.push((model.params().slots()[slot_idx].name.clone(), worst));
    }
    let max_rel_error = per_param.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(ModelCheck {
        arch: cfg.arch,
        mode: cfg.mode,
        per_param,
        max_rel_error,
    })
}

/// Both architectures in all three modes on the miniature config.
pub fn check_all(seed: u64) -> Result<Vec<ModelCheck>, ModelError> {
    let mut out = Vec::new();
    for arch in [Arch::Cnn, Arch::Rnn] {
        for mode in Mode::ALL {
            out.push(check_model(ModelConfig::miniature(arch, mode), seed)?);
        }
    }
    Ok(out)
}
