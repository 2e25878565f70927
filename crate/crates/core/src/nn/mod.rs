//! Dense tensors and layer primitives with analytic forward and backward passes.

mod activation;
mod conv;
mod dense;
mod embedding;
pub mod gradcheck;
mod param;
mod pool;
mod rnn;
mod tensor;

pub use activation::Activation;
pub use conv::{conv1d_backward, conv1d_wide, conv_output_len};
pub use dense::{dense, dense_backward, DenseGrads};
pub use embedding::{embedding_backward, embedding_lookup, scatter_rows};
pub use param::{ParamSlot, ParamStore};
pub use pool::{fold, fold_backward, kmax_backward, kmax_pool, KmaxSelection};
pub use rnn::{rnn_backward, rnn_forward, RnnGrads, RnnState, RnnWeights};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("k-max pooling needs 1 <= k <= length, got k={k} for length {length}")]
    Pooling { k: usize, length: usize },
    #[error("folding needs an even number of rows, got {0}")]
    Fold(usize),
    #[error("embedding id {id} out of range for vocabulary of {vocab}")]
    Lookup { id: usize, vocab: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
    #[error("internal error: {0}")]
    Internal(String),
}
