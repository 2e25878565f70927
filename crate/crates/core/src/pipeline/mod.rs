//! Run configuration, on-disk artifacts and the end-to-end commands.

mod commands;
mod svg;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use commands::{
    cmd_evaluate, cmd_gradcheck, cmd_plot, cmd_predict, cmd_prepare, cmd_train, GradcheckReport, PlotOutcome,
    PredictOutcome, PrepareSummary, TrainOutcome, GRADCHECK_TOLERANCE,
};
pub use svg::render_svg;

use crate::data::{DataError, Scaler, Schema, TargetTransform, TweetRecord, Vocabulary};
use crate::model::{Arch, Mode, ModelConfig, ModelError};
use crate::nn::NnError;
use crate::optim::{AdamConfig, OptimError};

pub const SPLITS_VERSION: u32 = 1;

/// Everything a run depends on besides the dataset itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Input TSV.
    pub data: PathBuf,
    /// Optional JSON sidecar with the column order.
    pub schema: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Train, validation, test.
    pub split_ratios: [u32; 3],
    /// `vocab_size` is replaced by the prepared vocabulary's size.
    pub model: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub target_transform: TargetTransform,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data.tsv"),
            schema: None,
            out_dir: PathBuf::from("out"),
            seed: 42,
            split_ratios: [4, 1, 1],
            model: ModelConfig::default(),
            epochs: 100,
            batch_size: 64,
            optimizer: AdamConfig::default(),
            target_transform: TargetTransform::None,
        }
    }
}

/// Independent random streams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubSeed {
    Split,
    Init,
    Shuffle,
    PlotSample,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let raw =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&raw).map_err(|e| PipelineError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn sub_seed(&self, which: SubSeed) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(which as u64 + 1);
        rng.next_u64()
    }

    pub fn schema(&self) -> Result<Schema, PipelineError> {
        Ok(match &self.schema {
            Some(p) => Schema::from_sidecar(p)?,
            None => Schema::default(),
        })
    }

    fn stem(arch: Arch, mode: Mode) -> String {
        format!("{}_{}", arch.name(), mode.name())
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.out_dir.join("vocab.json")
    }

    pub fn scaler_path(&self) -> PathBuf {
        self.out_dir.join("scaler.json")
    }

    pub fn splits_path(&self) -> PathBuf {
        self.out_dir.join("splits.json")
    }

    /// Default checkpoint location for the configured architecture and `mode`.
    pub fn checkpoint_path(&self, mode: Mode) -> PathBuf {
        self.out_dir
            .join(format!("{}.ckpt.json", Self::stem(self.model.arch, mode)))
    }

    pub fn train_log_path(&self) -> PathBuf {
        self.out_dir.join(format!(
            "{}.train_log.jsonl",
            Self::stem(self.model.arch, self.model.mode)
        ))
    }

    pub fn report_path(&self, arch: Arch, mode: Mode, split: SplitName) -> PathBuf {
        self.out_dir
            .join(format!("{}.{}.report.json", Self::stem(arch, mode), split.name()))
    }

    pub fn predictions_path(&self, arch: Arch, mode: Mode) -> PathBuf {
        self.out_dir.join(format!("{}.predictions.tsv", Self::stem(arch, mode)))
    }

    /// Plot outputs; `label` is a mode name or `all`.
    pub fn plot_paths(&self, arch: Arch, label: &str) -> (PathBuf, PathBuf) {
        let base = format!("{}_{label}.plot", arch.name());
        (
            self.out_dir.join(format!("{base}.csv")),
            self.out_dir.join(format!("{base}.svg")),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub fn name(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitName::Train),
            "validation" | "valid" | "val" => Some(SplitName::Validation),
            "test" => Some(SplitName::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedLine {
    pub ordinal: usize,
    pub reason: String,
}

/// `splits.json`: data-line ordinals of the records in each split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndex {
    pub version: u32,
    pub seed: u64,
    pub ratios: [u32; 3],
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub dropped: Vec<DroppedLine>,
}

impl SplitIndex {
    pub fn get(&self, which: SplitName) -> &[usize] {
        match which {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    Numeric(String),
    #[error(transparent)]
    Model(ModelError),
}

impl PipelineError {
    /// Process exit status: 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Data(_) | PipelineError::Model(_) => 2,
            PipelineError::Numeric(_) => 3,
        }
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFinite(_) | ModelError::Nn(NnError::NonFinite(_)) => PipelineError::Numeric(e.to_string()),
            ModelError::Config(_) => PipelineError::Usage(e.to_string()),
            other => PipelineError::Model(other),
        }
    }
}

impl From<OptimError> for PipelineError {
    fn from(e: OptimError) -> Self {
        match e {
            OptimError::Model(m) => m.into(),
            other => PipelineError::Usage(other.to_string()),
        }
    }
}

impl From<NnError> for PipelineError {
    fn from(e: NnError) -> Self {
        ModelError::from(e).into()
    }
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Data(DataError::Io(path.display().to_string(), e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| {
        PipelineError::Data(DataError::Artifact(format!(
            "{}: {e} (run `prepare` first?)",
            path.display()
        )))
    })
}

/// Prepared artifacts plus the records they index.
pub struct Prepared {
    pub vocab: Vocabulary,
    pub scaler: Scaler,
    pub index: SplitIndex,
    records: HashMap<usize, TweetRecord>,
}

impl Prepared {
    pub fn load(cfg: &RunConfig) -> Result<Self, PipelineError> {
        let vocab = Vocabulary::from_json(&read_file(&cfg.vocab_path())?)?;
        let scaler: Scaler = serde_json::from_str(&read_file(&cfg.scaler_path())?)
            .map_err(|e| DataError::Artifact(format!("scaler: {e}")))?;
        scaler.validate()?;
        let index: SplitIndex = serde_json::from_str(&read_file(&cfg.splits_path())?)
            .map_err(|e| DataError::Artifact(format!("splits: {e}")))?;
        if index.version != SPLITS_VERSION {
            return Err(DataError::Artifact(format!("unsupported splits version {}", index.version)).into());
        }
        let parsed = crate::data::read_tsv(&cfg.data, &cfg.schema()?)?;
        let records = parsed.records.into_iter().collect();
        Ok(Self {
            vocab,
            scaler,
            index,
            records,
        })
    }

    pub fn records(&self, which: SplitName) -> Result<Vec<&TweetRecord>, PipelineError> {
        self.index
            .get(which)
            .iter()
            .map(|o| {
                self.records.get(o).ok_or_else(|| {
                    DataError::Artifact(format!(
                        "{} split refers to data line {} which is missing or malformed; rerun `prepare`",
                        which.name(),
                        o + 1
                    ))
                    .into()
                })
            })
            .collect()
    }
}

pub fn parse_arch(s: &str) -> Option<Arch> {
    match s {
        "cnn" => Some(Arch::Cnn),
        "rnn" => Some(Arch::Rnn),
        _ => None,
    }
}

pub fn parse_mode(s: &str) -> Option<Mode> {
    match s.replace('-', "_").as_str() {
        "numeric_only" | "numeric" => Some(Mode::NumericOnly),
        "text_only" | "text" => Some(Mode::TextOnly),
        "combined" => Some(Mode::Combined),
        _ => None,
    }
}
