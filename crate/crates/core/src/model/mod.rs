//! CNN and RNN retweet regressors in numeric-only, text-only and combined modes.
//!
//! Both architectures share the same skeleton: each active branch turns its
//! input into a flat feature vector, the vectors are concatenated
//! (numeric first, then text) and a single dense unit predicts the count.

mod checkpoint;
mod cnn;
mod config;
pub mod gradcheck;
mod loss;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use cnn::CnnTrace;
pub use config::{Arch, CnnGeometry, Mode, ModelConfig};
pub use loss::{loss_mse, LossError};

use crate::data::EncodedExample;
use crate::nn::{
    dense, dense_backward, embedding_backward, embedding_lookup, rnn_backward, rnn_forward, scatter_rows, NnError,
    ParamStore, RnnState, RnnWeights, Tensor,
};

pub const EMBEDDING: &str = "text.embedding";
pub const TEXT_CONV1: &str = "text.conv1";
pub const TEXT_CONV2: &str = "text.conv2";
pub const NUMERIC_CONV1: &str = "numeric.conv1";
pub const NUMERIC_CONV2: &str = "numeric.conv2";
pub const HEAD_WEIGHT: &str = "head.weight";
pub const HEAD_BIAS: &str = "head.bias";

fn rnn_names(branch: &str) -> [String; 3] {
    [
        format!("{branch}.rnn.w_xh"),
        format!("{branch}.rnn.w_hh"),
        format!("{branch}.rnn.bias"),
    ]
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("inference error: {0}")]
    Inference(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    Glorot,
    Embedding,
    Zero,
}

/// Parameter names and shapes in the order they are created.
pub fn param_shapes(cfg: &ModelConfig) -> Result<Vec<(String, Vec<usize>)>, ModelError> {
    Ok(param_plan(cfg)?.into_iter().map(|(n, s, _)| (n, s)).collect())
}

fn param_plan(cfg: &ModelConfig) -> Result<Vec<(String, Vec<usize>, Init)>, ModelError> {
    cfg.validate()?;
    let (f1, f2, w, h, d) = (
        cfg.filters_l1,
        cfg.filters_l2,
        cfg.filter_width,
        cfg.rnn_hidden,
        cfg.embed_dim,
    );
    let mut plan = Vec::new();
    let mut push = |name: &str, shape: Vec<usize>, init: Init| plan.push((name.to_string(), shape, init));
    match cfg.arch {
        Arch::Cnn => {
            if cfg.mode.uses_numeric() {
                push(NUMERIC_CONV1, vec![f1, 1, w], Init::Glorot);
                push(NUMERIC_CONV2, vec![f2, f1, w], Init::Glorot);
            }
            if cfg.mode.uses_text() {
                push(EMBEDDING, vec![cfg.vocab_size, d], Init::Embedding);
                push(TEXT_CONV1, vec![f1, d, w], Init::Glorot);
                push(TEXT_CONV2, vec![f2, f1, w], Init::Glorot);
            }
        }
        Arch::Rnn => {
            if cfg.mode.uses_numeric() {
                let [wx, wh, b] = rnn_names("numeric");
                push(&wx, vec![h, 1], Init::Glorot);
                push(&wh, vec![h, h], Init::Glorot);
                push(&b, vec![h], Init::Zero);
            }
            if cfg.mode.uses_text() {
                push(EMBEDDING, vec![cfg.vocab_size, d], Init::Embedding);
                let [wx, wh, b] = rnn_names("text");
                push(&wx, vec![h, d], Init::Glorot);
                push(&wh, vec![h, h], Init::Glorot);
                push(&b, vec![h], Init::Zero);
            }
        }
    }
    push(HEAD_WEIGHT, vec![1, cfg.head_input_len()?], Init::Glorot);
    push(HEAD_BIAS, vec![1], Init::Zero);
    Ok(plan)
}

fn fans(shape: &[usize]) -> (usize, usize) {
    match shape {
        [o, i, w] => (i * w, o * w),
        [m, n] => (*n, *m),
        [n] => (*n, *n),
        _ => (1, 1),
    }
}

enum BranchCache {
    Cnn(cnn::CnnCache),
    Rnn { input: Tensor, state: RnnState },
}

struct ExampleCache {
    numeric: Option<BranchCache>,
    text: Option<(Vec<usize>, BranchCache)>,
    head_input: Tensor,
}

/// A regressor: configuration plus named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
}

impl Model {
    /// Build for `cfg.arch` with seeded initialization.
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        for (name, shape, init) in param_plan(&cfg)? {
            let n: usize = shape.iter().product();
            let data: Vec<f64> = match init {
                Init::Zero => vec![0.0; n],
                Init::Embedding => (0..n).map(|_| rng.gen_range(-0.05..0.05)).collect(),
                Init::Glorot => {
                    let (fan_in, fan_out) = fans(&shape);
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
                }
            };
            params.insert(&name, Tensor::new(shape, data)?)?;
        }
        Ok(Self { config: cfg, params })
    }

    pub fn build_cnn(cfg: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        if cfg.arch != Arch::Cnn {
            return Err(ModelError::Config("build_cnn needs arch = cnn".into()));
        }
        Self::new(cfg, seed)
    }

    pub fn build_rnn(cfg: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        if cfg.arch != Arch::Rnn {
            return Err(ModelError::Config("build_rnn needs arch = rnn".into()));
        }
        Self::new(cfg, seed)
    }

    pub(crate) fn from_parts(config: ModelConfig, params: ParamStore) -> Self {
        Self { config, params }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn check_example(&self, ex: &EncodedExample) -> Result<(), ModelError> {
        let cfg = &self.config;
        if cfg.mode.uses_numeric() && ex.numeric.len() != cfg.numeric_dim {
            return Err(ModelError::Inference(format!(
                "expected {} numeric features, got {}",
                cfg.numeric_dim,
                ex.numeric.len()
            )));
        }
        if cfg.mode.uses_text() {
            if ex.token_ids.len() != cfg.seq_len {
                return Err(ModelError::Inference(format!(
                    "expected {} token ids, got {}",
                    cfg.seq_len,
                    ex.token_ids.len()
                )));
            }
            if let Some(&id) = ex.token_ids.iter().find(|&&id| id >= cfg.vocab_size) {
                return Err(ModelError::Inference(format!(
                    "token id {id} outside vocabulary of {}",
                    cfg.vocab_size
                )));
            }
        }
        Ok(())
    }

    fn rnn_weights(&self, branch: &str) -> Result<RnnWeights<'_>, ModelError> {
        let [wx, wh, b] = rnn_names(branch);
        Ok(RnnWeights {
            w_xh: self.params.get(&wx)?,
            w_hh: self.params.get(&wh)?,
            bias: self.params.get(&b)?,
            activation: self.config.rnn_activation,
        })
    }

    fn branch_forward(
        &self,
        branch: &str,
        input: Tensor,
    ) -> Result<(Tensor, BranchCache, Option<CnnTrace>), ModelError> {
        let cfg = &self.config;
        match cfg.arch {
            Arch::Cnn => {
                let (geo, c1, c2) = if branch == "text" {
                    (cfg.text_geometry()?, TEXT_CONV1, TEXT_CONV2)
                } else {
                    (cfg.numeric_geometry()?, NUMERIC_CONV1, NUMERIC_CONV2)
                };
                let (flat, cache, trace) = cnn::forward(
                    input,
                    self.params.get(c1)?,
                    self.params.get(c2)?,
                    &geo,
                    cfg.cnn_activation,
                )?;
                Ok((flat, BranchCache::Cnn(cache), Some(trace)))
            }
            Arch::Rnn => {
                let state = rnn_forward(&input, &self.rnn_weights(branch)?)?;
                let n = state.hidden.len();
                let flat = state.hidden.clone().reshape(vec![n])?;
                Ok((flat, BranchCache::Rnn { input, state }, None))
            }
        }
    }

    /// Returns the prediction, its cache and the CNN shape traces (numeric, text).
    fn forward_example(&self, ex: &EncodedExample) -> Result<(f64, ExampleCache, [Option<CnnTrace>; 2]), ModelError> {
        self.check_example(ex)?;
        let mode = self.config.mode;
        let mut flats = Vec::with_capacity(2);
        let mut traces = [None, None];
        let numeric = if mode.uses_numeric() {
            let input = Tensor::new(vec![1, ex.numeric.len()], ex.numeric.clone())?;
            let (flat, cache, trace) = self.branch_forward("numeric", input)?;
            flats.push(flat);
            traces[0] = trace;
            Some(cache)
        } else {
            None
        };
        let text = if mode.uses_text() {
            let embedded = embedding_lookup(&ex.token_ids, self.params.get(EMBEDDING)?)?;
            let (flat, cache, trace) = self.branch_forward("text", embedded)?;
            flats.push(flat);
            traces[1] = trace;
            Some((ex.token_ids.clone(), cache))
        } else {
            None
        };
        let head_input = Tensor::concat_flat(&flats.iter().collect::<Vec<_>>());
        let out = dense(&head_input, self.params.get(HEAD_WEIGHT)?, self.params.get(HEAD_BIAS)?)?;
        let pred = out.data()[0];
        if !pred.is_finite() {
            return Err(ModelError::NonFinite("prediction".into()));
        }
        Ok((
            pred,
            ExampleCache {
                numeric,
                text,
                head_input,
            },
            traces,
        ))
    }

    fn branch_backward(
        &self,
        branch: &str,
        cache: &BranchCache,
        upstream: &[f64],
        grads: &mut [Tensor],
    ) -> Result<Tensor, ModelError> {
        let cfg = &self.config;
        let idx = |name: &str| {
            self.params
                .index_of(name)
                .ok_or_else(|| ModelError::Nn(NnError::UnknownParam(name.to_string())))
        };
        match cache {
            BranchCache::Cnn(c) => {
                let (geo, n1, n2) = if branch == "text" {
                    (cfg.text_geometry()?, TEXT_CONV1, TEXT_CONV2)
                } else {
                    (cfg.numeric_geometry()?, NUMERIC_CONV1, NUMERIC_CONV2)
                };
                let (i1, i2) = (idx(n1)?, idx(n2)?);
                let g = cnn::backward(
                    c,
                    &self.params.slots()[i1].value,
                    &self.params.slots()[i2].value,
                    &geo,
                    cfg.cnn_activation,
                    upstream,
                )?;
                grads[i1].add_scaled(&g.conv1, 1.0)?;
                grads[i2].add_scaled(&g.conv2, 1.0)?;
                Ok(g.input)
            }
            BranchCache::Rnn { input, state } => {
                let up = Tensor::new(state.hidden.shape().to_vec(), upstream.to_vec())?;
                let g = rnn_backward(input, &self.rnn_weights(branch)?, state, &up)?;
                let [wx, wh, b] = rnn_names(branch);
                grads[idx(&wx)?].add_scaled(&g.w_xh, 1.0)?;
                grads[idx(&wh)?].add_scaled(&g.w_hh, 1.0)?;
                grads[idx(&b)?].add_scaled(&g.bias, 1.0)?;
                Ok(g.input)
            }
        }
    }

    /// Add `d_pred * d(pred)/d(theta)` into `grads` (aligned with parameter slots).
    fn backward_example(&self, cache: &ExampleCache, d_pred: f64, grads: &mut [Tensor]) -> Result<(), ModelError> {
        let w = self.params.get(HEAD_WEIGHT)?;
        let b = self.params.get(HEAD_BIAS)?;
        let g = dense_backward(&cache.head_input, w, b, &Tensor::vector(&[d_pred]))?;
        let (iw, ib) = (
            self.params.index_of(HEAD_WEIGHT).expect("head weight"),
            self.params.index_of(HEAD_BIAS).expect("head bias"),
        );
        grads[iw].add_scaled(&g.weights, 1.0)?;
        grads[ib].add_scaled(&g.bias, 1.0)?;

        let g_head = g.input.data();
        let mut offset = 0;
        if let Some(c) = &cache.numeric {
            let n = self.numeric_flat_len()?;
            self.branch_backward("numeric", c, &g_head[offset..offset + n], grads)?;
            offset += n;
        }
        if let Some((ids, c)) = &cache.text {
            let g_embedded = self.branch_backward("text", c, &g_head[offset..], grads)?;
            let rows = embedding_backward(ids, &g_embedded)?;
            let ie = self.params.index_of(EMBEDDING).expect("embedding");
            scatter_rows(&mut grads[ie], &rows, 1.0);
        }
        Ok(())
    }

    fn numeric_flat_len(&self) -> Result<usize, ModelError> {
        Ok(match self.config.arch {
            Arch::Cnn => self.config.numeric_geometry()?.flat_len(),
            Arch::Rnn => self.config.rnn_hidden * self.config.numeric_dim,
        })
    }

    /// One prediction per example.
    pub fn forward(&self, batch: &[EncodedExample]) -> Result<Tensor, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Inference("empty batch".into()));
        }
        let preds = batch
            .iter()
            .map(|ex| self.forward_example(ex).map(|(p, _, _)| p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Tensor::vector(&preds))
    }

    pub fn predict(&self, ex: &EncodedExample) -> Result<f64, ModelError> {
        Ok(self.forward_example(ex)?.0)
    }

    /// CNN intermediate shapes for one example: (numeric branch, text branch).
    pub fn cnn_trace(&self, ex: &EncodedExample) -> Result<[Option<CnnTrace>; 2], ModelError> {
        Ok(self.forward_example(ex)?.2)
    }

    /// Forward the batch, compute the MSE loss against labels and store
    /// its gradient in every parameter slot. Returns the loss.
    pub fn accumulate_gradients(&mut self, batch: &[EncodedExample]) -> Result<f64, ModelError> {
        let (loss, grads) = self.loss_and_gradients(batch)?;
        for (slot, g) in self.params.slots_mut().iter_mut().zip(grads) {
            slot.grad = Some(g);
        }
        Ok(loss)
    }

    pub fn loss_and_gradients(&self, batch: &[EncodedExample]) -> Result<(f64, Vec<Tensor>), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Inference("empty batch".into()));
        }
        let mut preds = Vec::with_capacity(batch.len());
        let mut caches = Vec::with_capacity(batch.len());
        for ex in batch {
            let (p, c, _) = self.forward_example(ex)?;
            preds.push(p);
            caches.push(c);
        }
        let targets: Vec<f64> = batch.iter().map(|e| e.label).collect();
        let (loss, d_pred) = loss_mse(&preds, &targets)?;
        if !loss.is_finite() {
            return Err(ModelError::NonFinite("training loss".into()));
        }
        let mut grads: Vec<Tensor> = self
            .params
            .slots()
            .iter()
            .map(|s| Tensor::zeros(s.value.shape()))
            .collect();
        for (cache, &dp) in caches.iter().zip(&d_pred) {
            self.backward_example(cache, dp, &mut grads)?;
        }
        for (slot, g) in self.params.slots().iter().zip(&grads) {
            g.check_finite(&format!("gradient of {}", slot.name))?;
        }
        Ok((loss, grads))
    }

    /// Mean squared error of the current parameters on `batch`.
    pub fn loss(&self, batch: &[EncodedExample]) -> Result<f64, ModelError> {
        let preds = self.forward(batch)?;
        let targets: Vec<f64> = batch.iter().map(|e| e.label).collect();
        Ok(loss_mse(preds.data(), &targets)?.0)
    }
}
