use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    svg, write_file, DroppedLine, PipelineError, Prepared, RunConfig, SplitIndex, SplitName, SubSeed, SPLITS_VERSION,
};
use crate::data::{
    encode_record, engineer_features, parse_tsv_line, read_tsv, split_dataset, tokenize, DataError, EncodedExample,
    Scaler, TargetTransform, TweetRecord, Vocabulary,
};
use crate::metrics::MetricsReport;
use crate::model::gradcheck::{check_all, ModelCheck};
use crate::model::{Checkpoint, Mode, Model, ModelConfig};
use crate::nn::gradcheck::{layer_checks, LayerCheck};
use crate::optim::{evaluate, fit, FitConfig};

/// Largest relative gradient error `gradcheck` accepts.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

const TRANSFORM_KEY: &str = "target_transform";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepareSummary {
    pub records: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub vocab_size: usize,
    pub dropped: usize,
}

/// Parse the dataset, drop unusable lines, split, and fit the vocabulary
/// and scaler on the training split.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<PrepareSummary, PipelineError> {
    let schema = cfg.schema()?;
    let parsed = read_tsv(&cfg.data, &schema)?;
    let mut dropped: Vec<DroppedLine> = parsed
        .dropped
        .into_iter()
        .map(|d| DroppedLine {
            ordinal: d.ordinal,
            reason: d.reason,
        })
        .collect();
    let mut kept: Vec<(usize, TweetRecord)> = Vec::with_capacity(parsed.records.len());
    for (ordinal, rec) in parsed.records {
        let reason = if rec.retweets.is_none() {
            Some("missing retweet count")
        } else if schema.has_text() && rec.text.is_none() {
            Some("missing text")
        } else {
            None
        };
        match reason {
            Some(r) => dropped.push(DroppedLine {
                ordinal,
                reason: r.into(),
            }),
            None => kept.push((ordinal, rec)),
        }
    }
    dropped.sort_by_key(|d| d.ordinal);
    for d in &dropped {
        log::warn!("skipping data line {}: {}", d.ordinal + 1, d.reason);
    }
    if kept.is_empty() {
        return Err(DataError::Empty(format!("no valid records in {}", cfg.data.display())).into());
    }

    let [r_train, r_val, r_test] = cfg.split_ratios;
    let split = split_dataset(kept.len(), cfg.sub_seed(SubSeed::Split), (r_train, r_val, r_test))?;
    let train_recs: Vec<&TweetRecord> = split.train.iter().map(|&i| &kept[i].1).collect();
    let features = train_recs
        .iter()
        .map(|r| engineer_features(r).map(|f| f.to_array()))
        .collect::<Result<Vec<_>, _>>()?;
    let scaler = Scaler::fit(&features)?;
    let corpus: Vec<Vec<String>> = train_recs
        .iter()
        .map(|r| r.text.as_deref().map(tokenize).unwrap_or_default())
        .collect();
    let vocab = Vocabulary::build(&corpus);

    let ordinals = |idx: &[usize]| idx.iter().map(|&i| kept[i].0).collect::<Vec<_>>();
    let index = SplitIndex {
        version: SPLITS_VERSION,
        seed: cfg.seed,
        ratios: cfg.split_ratios,
        train: ordinals(&split.train),
        validation: ordinals(&split.validation),
        test: ordinals(&split.test),
        dropped,
    };
    write_file(&cfg.vocab_path(), &vocab.to_json())?;
    write_file(&cfg.scaler_path(), &to_json(&scaler))?;
    write_file(&cfg.splits_path(), &to_json(&index))?;
    Ok(PrepareSummary {
        records: kept.len(),
        train: index.train.len(),
        validation: index.validation.len(),
        test: index.test.len(),
        vocab_size: vocab.len(),
        dropped: index.dropped.len(),
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

fn check_schema_supports(cfg: &RunConfig, mode: Mode) -> Result<(), PipelineError> {
    if mode.uses_text() && !cfg.schema()?.has_text() {
        return Err(PipelineError::Usage(format!(
            "mode `{}` needs a text column",
            mode.name()
        )));
    }
    Ok(())
}

fn encode_all(
    recs: &[&TweetRecord],
    prep: &Prepared,
    mc: &ModelConfig,
    transform: TargetTransform,
) -> Result<Vec<EncodedExample>, PipelineError> {
    recs.iter()
        .map(|r| encode_record(r, &prep.scaler, &prep.vocab, mc.seq_len, |y| transform.forward(y)).map_err(Into::into))
        .collect()
}

fn encode_split(
    prep: &Prepared,
    which: SplitName,
    mc: &ModelConfig,
    transform: TargetTransform,
) -> Result<Vec<EncodedExample>, PipelineError> {
    encode_all(&prep.records(which)?, prep, mc, transform)
}

/// Load a checkpoint and check it against the prepared vocabulary.
fn load_model(path: &Path, vocab: &Vocabulary) -> Result<(Model, TargetTransform), PipelineError> {
    let ck = Checkpoint::load(path)?;
    if ck.config.mode.uses_text() && ck.config.vocab_size != vocab.len() {
        return Err(DataError::Artifact(format!(
            "{} expects a vocabulary of {} tokens but the prepared vocabulary has {}",
            path.display(),
            ck.config.vocab_size,
            vocab.len()
        ))
        .into());
    }
    let transform = match ck.metadata.get(TRANSFORM_KEY) {
        Some(t) => serde_json::from_value(serde_json::Value::String(t.clone()))
            .map_err(|_| DataError::Artifact(format!("{}: unknown target transform `{t}`", path.display())))?,
        None => TargetTransform::None,
    };
    Ok((ck.to_model()?, transform))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub best_epoch: usize,
    pub final_train_loss: f64,
    pub best_validation: Option<MetricsReport>,
}

/// Train the configured model and keep the best-validation parameters.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome, PipelineError> {
    check_schema_supports(cfg, cfg.model.mode)?;
    let prep = Prepared::load(cfg)?;
    let mut mc = cfg.model.clone();
    mc.vocab_size = prep.vocab.len();
    mc.validate()?;
    let train = encode_split(&prep, SplitName::Train, &mc, cfg.target_transform)?;
    let valid = encode_split(&prep, SplitName::Validation, &mc, cfg.target_transform)?;
    if train.is_empty() {
        return Err(DataError::Empty("training split is empty".into()).into());
    }
    let model = Model::new(mc, cfg.sub_seed(SubSeed::Init))?;
    let fc = FitConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.sub_seed(SubSeed::Shuffle),
        adam: cfg.optimizer,
        target_transform: cfg.target_transform,
    };
    let out = fit(model, &train, &valid, &fc)?;

    let mut ck = Checkpoint::from_model(&out.best);
    let transform = serde_json::to_value(cfg.target_transform).expect("transform serializes");
    ck.metadata
        .insert(TRANSFORM_KEY.into(), transform.as_str().unwrap_or("none").into());
    ck.metadata.insert("best_epoch".into(), out.log.best_epoch.to_string());
    ck.metadata.insert("seed".into(), cfg.seed.to_string());
    let ck_path = cfg.checkpoint_path(cfg.model.mode);
    write_file(&ck_path, &ck.to_json())?;
    let log_path = cfg.train_log_path();
    write_file(&log_path, &out.log.to_jsonl())?;

    let best_validation = out
        .log
        .epochs
        .iter()
        .find(|e| e.epoch == out.log.best_epoch)
        .and_then(|e| e.validation.clone());
    Ok(TrainOutcome {
        checkpoint: ck_path,
        log: log_path,
        best_epoch: out.log.best_epoch,
        final_train_loss: out.log.epochs.last().map_or(f64::NAN, |e| e.train_loss),
        best_validation,
    })
}

/// Metrics of a checkpoint on one split; also written next to the checkpoint.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    split: SplitName,
) -> Result<MetricsReport, PipelineError> {
    let prep = Prepared::load(cfg)?;
    let default_ck = cfg.checkpoint_path(cfg.model.mode);
    let (model, transform) = load_model(checkpoint.unwrap_or(&default_ck), &prep.vocab)?;
    let mc = model.config().clone();
    check_schema_supports(cfg, mc.mode)?;
    let data = encode_split(&prep, split, &mc, transform)?;
    if data.is_empty() {
        return Err(DataError::Empty(format!("{} split is empty", split.name())).into());
    }
    let report = evaluate(&model, &data, transform)?;
    write_file(&cfg.report_path(mc.arch, mc.mode, split), &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictOutcome {
    pub output: PathBuf,
    pub rows: usize,
    /// Rows written as `null` because the mode needs text and the row had none.
    pub nulls: usize,
}

/// One prediction per input row, in input order. Labels are optional.
pub fn cmd_predict(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    input: &Path,
    output: Option<&Path>,
) -> Result<PredictOutcome, PipelineError> {
    let prep_vocab = Vocabulary::from_json(
        &std::fs::read_to_string(cfg.vocab_path())
            .map_err(|e| DataError::Artifact(format!("{}: {e}", cfg.vocab_path().display())))?,
    )?;
    let scaler: Scaler = serde_json::from_str(
        &std::fs::read_to_string(cfg.scaler_path())
            .map_err(|e| DataError::Artifact(format!("{}: {e}", cfg.scaler_path().display())))?,
    )
    .map_err(|e| DataError::Artifact(format!("scaler: {e}")))?;
    scaler.validate()?;
    let default_ck = cfg.checkpoint_path(cfg.model.mode);
    let (model, transform) = load_model(checkpoint.unwrap_or(&default_ck), &prep_vocab)?;
    let mc = model.config().clone();
    let schema = cfg.schema()?;

    let raw = std::fs::read_to_string(input).map_err(|e| DataError::Io(input.display().to_string(), e))?;
    let mut out = String::from("tweet_id\tpredicted_retweets\n");
    let (mut rows, mut nulls) = (0, 0);
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_tsv_line(line, &schema, i + 1)?;
        rows += 1;
        if mc.mode.uses_text() && rec.text.is_none() {
            log::warn!(
                "line {}: tweet {} has no text; `{}` prediction left null",
                i + 1,
                rec.tweet_id,
                mc.mode.name()
            );
            writeln!(out, "{}\tnull", rec.tweet_id).unwrap();
            nulls += 1;
            continue;
        }
        let ex = encode_record(&rec, &scaler, &prep_vocab, mc.seq_len, |y| y)?;
        let y = transform.inverse(model.predict(&ex)?);
        if !y.is_finite() {
            return Err(PipelineError::Numeric(format!("line {}: non-finite prediction", i + 1)));
        }
        writeln!(out, "{}\t{y}", rec.tweet_id).unwrap();
    }
    let path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.predictions_path(mc.arch, mc.mode));
    write_file(&path, &out)?;
    Ok(PredictOutcome {
        output: path,
        rows,
        nulls,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub layers: Vec<LayerCheck>,
    pub models: Vec<ModelCheck>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Finite-difference check of every layer and of the miniature models.
pub fn cmd_gradcheck(seed: u64) -> Result<GradcheckReport, PipelineError> {
    let layers = layer_checks(seed)?;
    let models = check_all(seed)?;
    let max_rel_error = layers
        .iter()
        .map(|c| c.max_rel_error)
        .chain(models.iter().map(|c| c.max_rel_error))
        .fold(0.0, f64::max);
    let passed = max_rel_error < GRADCHECK_TOLERANCE && max_rel_error.is_finite();
    Ok(GradcheckReport {
        layers,
        models,
        max_rel_error,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotOutcome {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub rows: usize,
    pub columns: Vec<String>,
}

fn column_name(mode: Mode) -> &'static str {
    match mode {
        Mode::NumericOnly => "predicted_numeric",
        Mode::TextOnly => "predicted_text",
        Mode::Combined => "predicted_combined",
    }
}

/// Actual against predicted retweets for `n` sampled test tweets.
///
/// With no explicit checkpoints, uses the three sibling mode checkpoints
/// of the configured architecture when all exist, else the configured mode.
pub fn cmd_plot(cfg: &RunConfig, checkpoints: &[PathBuf], n: usize) -> Result<PlotOutcome, PipelineError> {
    let prep = Prepared::load(cfg)?;
    let paths: Vec<PathBuf> = if !checkpoints.is_empty() {
        checkpoints.to_vec()
    } else {
        let siblings: Vec<PathBuf> = Mode::ALL.iter().map(|&m| cfg.checkpoint_path(m)).collect();
        if siblings.iter().all(|p| p.exists()) {
            siblings
        } else {
            vec![cfg.checkpoint_path(cfg.model.mode)]
        }
    };
    let mut models = Vec::with_capacity(paths.len());
    for p in &paths {
        let (m, t) = load_model(p, &prep.vocab)?;
        check_schema_supports(cfg, m.config().mode)?;
        if models
            .iter()
            .any(|(other, _): &(Model, TargetTransform)| other.config().mode == m.config().mode)
        {
            return Err(PipelineError::Usage(format!(
                "two checkpoints for mode `{}`",
                m.config().mode.name()
            )));
        }
        models.push((m, t));
    }
    models.sort_by_key(|(m, _)| Mode::ALL.iter().position(|&x| x == m.config().mode));

    let test = prep.records(SplitName::Test)?;
    if test.is_empty() {
        return Err(DataError::Empty("test split is empty".into()).into());
    }
    let n = if n > test.len() {
        log::warn!(
            "requested {n} tweets but the test split has {}; plotting all of them",
            test.len()
        );
        test.len()
    } else {
        n
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sub_seed(SubSeed::PlotSample));
    let mut picks = rand::seq::index::sample(&mut rng, test.len(), n).into_vec();
    picks.sort_unstable();
    let sample: Vec<&TweetRecord> = picks.iter().map(|&i| test[i]).collect();

    let actual: Vec<f64> = sample.iter().map(|r| r.retweets.unwrap_or(0) as f64).collect();
    let mut series: Vec<(String, Vec<f64>)> = vec![("actual".into(), actual)];
    for (model, transform) in &models {
        let data = encode_all(&sample, &prep, model.config(), *transform)?;
        let preds = model.forward(&data)?;
        series.push((
            column_name(model.config().mode).into(),
            preds.data().iter().map(|&p| transform.inverse(p)).collect(),
        ));
    }

    let mut csv = String::from("index");
    for (name, _) in &series {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for i in 0..n {
        write!(csv, "{i}").unwrap();
        for (_, values) in &series {
            write!(csv, ",{}", values[i]).unwrap();
        }
        csv.push('\n');
    }

    let arch = models[0].0.config().arch;
    let label = if models.len() == 1 {
        models[0].0.config().mode.name()
    } else {
        "all"
    };
    let (csv_path, svg_path) = cfg.plot_paths(arch, label);
    let title = format!("{} test tweets: actual vs predicted retweets ({})", n, arch.name());
    write_file(&csv_path, &csv)?;
    write_file(&svg_path, &svg::render_svg(&title, &series))?;
    Ok(PlotOutcome {
        csv: csv_path,
        svg: svg_path,
        rows: n,
        columns: series.into_iter().map(|(name, _)| name).collect(),
    })
}
