use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::NUM_FEATURES;
use crate::nn::{conv_output_len, Activation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Cnn,
    Rnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    NumericOnly,
    TextOnly,
    Combined,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NumericOnly, Mode::TextOnly, Mode::Combined];

    pub fn uses_numeric(self) -> bool {
        matches!(self, Mode::NumericOnly | Mode::Combined)
    }

    pub fn uses_text(self) -> bool {
        matches!(self, Mode::TextOnly | Mode::Combined)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::NumericOnly => "numeric_only",
            Mode::TextOnly => "text_only",
            Mode::Combined => "combined",
        }
    }
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Cnn => "cnn",
            Arch::Rnn => "rnn",
        }
    }
}

/// Architecture hyperparameters. Defaults give the 100-d, 30-token,
/// 64-filter, k=5, 32-unit configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub arch: Arch,
    pub mode: Mode,
    /// Embedding table rows, including the two reserved ids.
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub seq_len: usize,
    /// Zero padding on each side of the embedded text before the first convolution.
    pub pad: usize,
    pub filters_l1: usize,
    pub filters_l2: usize,
    pub filter_width: usize,
    pub k_pool: usize,
    pub rnn_hidden: usize,
    pub numeric_dim: usize,
    pub cnn_activation: Activation,
    pub rnn_activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Cnn,
            mode: Mode::Combined,
            vocab_size: 2,
            embed_dim: 100,
            seq_len: 30,
            pad: 49,
            filters_l1: 64,
            filters_l2: 64,
            filter_width: 3,
            k_pool: 5,
            rnn_hidden: 32,
            numeric_dim: NUM_FEATURES,
            cnn_activation: Activation::Relu,
            rnn_activation: Activation::Tanh,
        }
    }
}

/// Per-branch CNN geometry derived from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnGeometry {
    pub channels: usize,
    pub len: usize,
    pub pad1: usize,
    /// Length after the first convolution.
    pub conv1_len: usize,
    pub k1: usize,
    pub pad2: usize,
    /// Length after the second convolution (and folding).
    pub conv2_len: usize,
    pub k2: usize,
    pub folded_rows: usize,
}

impl CnnGeometry {
    pub fn flat_len(&self) -> usize {
        self.folded_rows * self.k2
    }
}

impl ModelConfig {
    pub fn with(arch: Arch, mode: Mode, vocab_size: usize) -> Self {
        Self {
            arch,
            mode,
            vocab_size,
            ..Self::default()
        }
    }

    /// Small configuration used by gradient checks and fast tests.
    pub fn miniature(arch: Arch, mode: Mode) -> Self {
        Self {
            arch,
            mode,
            vocab_size: 20,
            embed_dim: 8,
            seq_len: 6,
            pad: 2,
            filters_l1: 4,
            filters_l2: 4,
            filter_width: 3,
            k_pool: 2,
            rnn_hidden: 4,
            ..Self::default()
        }
    }

    fn cnn_geometry(&self, channels: usize, len: usize, pad1: usize) -> Result<CnnGeometry, ModelError> {
        let w = self.filter_width;
        if w == 0 || len + 2 * pad1 < w {
            return Err(ModelError::Config(format!(
                "filter width {w} does not fit length {len} with padding {pad1}"
            )));
        }
        let conv1_len = conv_output_len(len, w, pad1);
        if self.k_pool == 0 || self.k_pool > conv1_len {
            return Err(ModelError::Config(format!(
                "k_pool {} exceeds first-layer length {conv1_len}",
                self.k_pool
            )));
        }
        let pad2 = w - 1;
        let conv2_len = conv_output_len(self.k_pool, w, pad2);
        Ok(CnnGeometry {
            channels,
            len,
            pad1,
            conv1_len,
            k1: self.k_pool,
            pad2,
            conv2_len,
            k2: self.k_pool.min(conv2_len),
            folded_rows: self.filters_l2 / 2,
        })
    }

    /// Text branch: embedding rows are channels, padded by `pad` on both sides.
    pub fn text_geometry(&self) -> Result<CnnGeometry, ModelError> {
        self.cnn_geometry(self.embed_dim, self.seq_len, self.pad)
    }

    /// Numeric branch: one channel of `numeric_dim` values with `filter_width - 1` padding.
    pub fn numeric_geometry(&self) -> Result<CnnGeometry, ModelError> {
        self.cnn_geometry(1, self.numeric_dim, self.filter_width.saturating_sub(1))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("embed_dim", self.embed_dim),
            ("seq_len", self.seq_len),
            ("filters_l1", self.filters_l1),
            ("filters_l2", self.filters_l2),
            ("filter_width", self.filter_width),
            ("k_pool", self.k_pool),
            ("rnn_hidden", self.rnn_hidden),
            ("numeric_dim", self.numeric_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.vocab_size < 2 {
            return Err(ModelError::Config(
                "vocab_size must include the two reserved ids".into(),
            ));
        }
        if self.arch == Arch::Cnn {
            if !self.filters_l2.is_multiple_of(2) {
                return Err(ModelError::Config("filters_l2 must be even for folding".into()));
            }
            if self.mode.uses_text() {
                self.text_geometry()?;
            }
            if self.mode.uses_numeric() {
                self.numeric_geometry()?;
            }
        }
        Ok(())
    }

    /// Length of the vector fed to the output layer.
    pub fn head_input_len(&self) -> Result<usize, ModelError> {
        let mut n = 0;
        match self.arch {
            Arch::Cnn => {
                if self.mode.uses_numeric() {
                    n += self.numeric_geometry()?.flat_len();
                }
                if self.mode.uses_text() {
                    n += self.text_geometry()?.flat_len();
                }
            }
            Arch::Rnn => {
                if self.mode.uses_numeric() {
                    n += self.rnn_hidden * self.numeric_dim;
                }
                if self.mode.uses_text() {
                    n += self.rnn_hidden * self.seq_len;
                }
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_text_geometry() {
        let g = ModelConfig::default().text_geometry().unwrap();
        assert_eq!(g.len + 2 * g.pad1, 128);
        assert_eq!(g.conv1_len, 126);
        assert_eq!((g.k1, g.conv2_len, g.k2, g.folded_rows), (5, 7, 5, 32));
        assert_eq!(g.flat_len(), 160);
    }

    #[test]
    fn numeric_geometry_clamps_second_pool() {
        let cfg = ModelConfig {
            k_pool: 9,
            ..ModelConfig::default()
        };
        let g = cfg.numeric_geometry().unwrap();
        assert_eq!(g.conv1_len, 14);
        assert_eq!(g.conv2_len, 11);
        assert_eq!(g.k2, 9);
        let cfg = ModelConfig {
            k_pool: 14,
            ..ModelConfig::default()
        };
        let g = cfg.numeric_geometry().unwrap();
        assert_eq!((g.conv2_len, g.k2), (16, 14));
        let cfg = ModelConfig {
            k_pool: 15,
            mode: Mode::NumericOnly,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rnn_head_lengths() {
        let mut cfg = ModelConfig::with(Arch::Rnn, Mode::TextOnly, 10);
        assert_eq!(cfg.head_input_len().unwrap(), 960);
        cfg.mode = Mode::NumericOnly;
        assert_eq!(cfg.head_input_len().unwrap(), 384);
        cfg.mode = Mode::Combined;
        assert_eq!(cfg.head_input_len().unwrap(), 1344);
    }

    #[test]
    fn invalid_configs() {
        let bad = ModelConfig {
            filters_l2: 5,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            seq_len: 1,
            pad: 0,
            mode: Mode::TextOnly,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            vocab_size: 1,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
