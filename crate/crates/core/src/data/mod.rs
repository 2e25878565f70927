//! TweetsCOV19 ingestion: parsing, feature engineering, text encoding and splitting.

pub mod features;
pub mod record;
pub mod scaler;
pub mod split;
pub mod text;

use std::io::BufRead;
use std::path::Path;

pub use features::{
    count_mentions, decompose_timestamp, engineer_features, parse_sentiment, NumericFeatures, TimeParts, FEATURE_NAMES,
    NUM_FEATURES,
};
pub use record::{parse_tsv_line, to_tsv_line, Column, Schema, Timestamp, TweetRecord, EMPTY_MARKER};
pub use scaler::Scaler;
pub use split::{split_dataset, Split};
pub use text::{encode_text, tokenize, Vocabulary, OOV_ID, PAD_ID};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: expected {expected} tab-separated fields, found {found}")]
    Format { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse column `{column}` from `{value}`")]
    Field {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("invalid sentiment: {0}")]
    Sentiment(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// Optional label transform applied before training; predictions are mapped back.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetTransform {
    #[default]
    None,
    Log1p,
}

impl TargetTransform {
    pub fn forward(self, y: f64) -> f64 {
        match self {
            TargetTransform::None => y,
            TargetTransform::Log1p => y.ln_1p(),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            TargetTransform::None => y,
            TargetTransform::Log1p => y.exp_m1(),
        }
    }
}

/// Model-ready example.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    /// Standardized numeric features in [`FEATURE_NAMES`] order.
    pub numeric: Vec<f64>,
    /// Fixed-length token ids.
    pub token_ids: Vec<usize>,
    /// Regression target (raw or transformed retweet count).
    pub label: f64,
    /// False when the record had no text; text ids are then all padding.
    pub has_text: bool,
}

/// Encode one record. A missing label encodes as 0.
pub fn encode_record(
    rec: &TweetRecord,
    scaler: &Scaler,
    vocab: &Vocabulary,
    seq_len: usize,
    label_transform: impl Fn(f64) -> f64,
) -> Result<EncodedExample, DataError> {
    let feats = engineer_features(rec)?;
    let tokens = rec.text.as_deref().map(tokenize).unwrap_or_default();
    Ok(EncodedExample {
        numeric: scaler.apply(&feats.to_array()).to_vec(),
        token_ids: encode_text(&tokens, vocab, seq_len),
        label: label_transform(rec.retweets.unwrap_or(0) as f64),
        has_text: rec.text.is_some(),
    })
}

/// A skipped input line and the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropped {
    /// 0-based data line ordinal.
    pub ordinal: usize,
    pub reason: String,
}

/// Records that parsed, keyed by their 0-based line ordinal.
#[derive(Debug, Clone, Default)]
pub struct ParsedFile {
    pub records: Vec<(usize, TweetRecord)>,
    pub dropped: Vec<Dropped>,
}

/// Parse a TSV file, skipping (and recording) malformed lines. Blank lines are ignored.
pub fn read_tsv(path: &Path, schema: &Schema) -> Result<ParsedFile, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::Io(path.display().to_string(), e))?;
    let mut out = ParsedFile::default();
    for (ordinal, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::Io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_tsv_line(&line, schema, ordinal + 1).and_then(|r| engineer_features(&r).map(|_| r)) {
            Ok(r) => out.records.push((ordinal, r)),
            Err(e) => out.dropped.push(Dropped {
                ordinal,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}
