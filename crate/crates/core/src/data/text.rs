//! Tokenization, vocabulary and fixed-length id encoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DataError;

pub const PAD_ID: usize = 0;
pub const OOV_ID: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<unk>";
pub const URL_TOKEN: &str = "<url>";
pub const VOCAB_VERSION: u32 = 1;

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2010}'..='\u{205E}' | '\u{00A1}' | '\u{00BF}' | '\u{00AB}' | '\u{00BB}'
        )
}

/// Lowercase, split on whitespace, trim edge punctuation, map links to `<url>`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|raw| {
            let tok = raw.trim_matches(is_punct);
            if tok.is_empty() {
                None
            } else if tok.starts_with("http") {
                Some(URL_TOKEN.to_string())
            } else {
                Some(tok.to_string())
            }
        })
        .collect()
}

/// Token ids in first-occurrence order; 0 is padding and 1 out-of-vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    version: u32,
    tokens: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            tokens: vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()],
            index: HashMap::new(),
        }
    }
}

impl Vocabulary {
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>]) -> Self {
        let mut v = Self::default();
        for seq in corpus {
            for tok in seq {
                let tok = tok.as_ref();
                if !v.index.contains_key(tok) {
                    v.index.insert(tok.to_string(), v.tokens.len());
                    v.tokens.push(tok.to_string());
                }
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&VocabFile {
            version: VOCAB_VERSION,
            tokens: self.tokens.clone(),
        })
        .expect("vocabulary serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, DataError> {
        let file: VocabFile = serde_json::from_str(s).map_err(|e| DataError::Artifact(format!("vocabulary: {e}")))?;
        if file.version != VOCAB_VERSION {
            return Err(DataError::Artifact(format!(
                "unsupported vocabulary version {}",
                file.version
            )));
        }
        if file.tokens.len() < 2 || file.tokens[PAD_ID] != PAD_TOKEN || file.tokens[OOV_ID] != OOV_TOKEN {
            return Err(DataError::Artifact("vocabulary lacks reserved tokens".into()));
        }
        let mut index = HashMap::new();
        for (i, t) in file.tokens.iter().enumerate().skip(2) {
            if index.insert(t.clone(), i).is_some() {
                return Err(DataError::Artifact(format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Self {
            tokens: file.tokens,
            index,
        })
    }
}

/// Map tokens to exactly `len` ids: keep the first `len`, right-pad with [`PAD_ID`].
pub fn encode_text<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, len: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = tokens.iter().take(len).map(|t| vocab.id(t.as_ref())).collect();
    ids.resize(len, PAD_ID);
    ids
}
