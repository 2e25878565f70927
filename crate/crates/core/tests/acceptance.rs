//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use retweet_reg::data::EncodedExample;
use retweet_reg::metrics::{compute_report, mae, mbe, r2, relative, rmse};
use retweet_reg::model::{Arch, Mode, Model, ModelConfig, EMBEDDING};
use retweet_reg::nn::{embedding_lookup, fold, kmax_pool, ParamStore, Tensor};
use retweet_reg::optim::{AdamConfig, AdamState};
use retweet_reg::pipeline::{
    cmd_evaluate, cmd_gradcheck, cmd_plot, cmd_predict, cmd_prepare, cmd_train, RunConfig, SplitName,
    GRADCHECK_TOLERANCE,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn gradient_suite() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let report = cmd_gradcheck(seed).map_err(|e| e.to_string())?;
        ensure(report.models.len() == 6, "expected 2 architectures x 3 modes")?;
        for l in &report.layers {
            ensure(
                l.max_rel_error < GRADCHECK_TOLERANCE,
                format!("seed {seed} layer {}: {:e}", l.layer, l.max_rel_error),
            )?;
        }
        for m in &report.models {
            ensure(
                m.max_rel_error < GRADCHECK_TOLERANCE,
                format!("seed {seed} {}/{}: {:e}", m.arch.name(), m.mode.name(), m.max_rel_error),
            )?;
        }
        ensure(report.passed, format!("seed {seed} reported failure"))?;
        worst = worst.max(report.max_rel_error);
    }
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, format!("took {elapsed:.1}s"))?;
    Ok(format!("max relative error {worst:.2e} over 3 seeds in {elapsed:.2}s"))
}

struct Naive {
    mae: f64,
    mbe: f64,
    rmse: f64,
    mean_pred: f64,
    r2: Option<f64>,
}

fn naive(actual: &[f64], predicted: &[f64]) -> Naive {
    let n = actual.len() as f64;
    let (mut abs, mut signed, mut sq, mut sum_p, mut sum_a) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..actual.len() {
        let e = actual[i] - predicted[i];
        abs += e.abs();
        signed += e;
        sq += e * e;
        sum_p += predicted[i];
        sum_a += actual[i];
    }
    let mean_a = sum_a / n;
    let mut tss = 0.0;
    for a in actual {
        tss += (a - mean_a) * (a - mean_a);
    }
    Naive {
        mae: abs / n,
        mbe: signed / n,
        rmse: (sq / n).sqrt(),
        mean_pred: sum_p / n,
        r2: (tss > 0.0).then(|| 1.0 - sq / tss),
    }
}

fn metric_oracles() -> Outcome {
    ensure(mae(&[0.0, 2.0], &[1.0, 1.0]).unwrap() == 1.0, "mae worked example")?;
    ensure(
        mbe(&[1.0, 3.0], &[2.0, 2.0]).unwrap() == 0.0,
        "mbe cancellation example",
    )?;
    ensure(mbe(&[2.0, 2.0], &[1.0, 1.0]).unwrap() == 1.0, "mbe sign example")?;
    ensure(
        rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() == 12.5f64.sqrt(),
        "rmse worked example",
    )?;
    ensure(relative(1.0, &[1.0, 1.0]).unwrap() == 100.0, "relative worked example")?;
    ensure(r2(&[0.0, 1.0], &[1.0, 0.0]).unwrap() == -3.0, "r2 worked example")?;
    let perfect = compute_report(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    ensure(
        (perfect.mae, perfect.mbe, perfect.rmse, perfect.r2) == (0.0, 0.0, 0.0, Some(1.0))
            && perfect.rmae == Some(0.0)
            && perfect.rmbe == Some(0.0)
            && perfect.rrmse == Some(0.0),
        "perfect prediction report",
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for pair in 0..10_000 {
        let n = rng.gen_range(1..=64);
        let actual: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..500.0f64).round()).collect();
        let predicted: Vec<f64> = (0..n).map(|_| rng.gen_range(-20.0..500.0)).collect();
        let rep = compute_report(&actual, &predicted).map_err(|e| e.to_string())?;
        let o = naive(&actual, &predicted);
        let mut cmp = |name: &str, got: Option<f64>, want: Option<f64>| -> Result<(), String> {
            match (got, want) {
                (Some(g), Some(w)) => {
                    worst = worst.max((g - w).abs() / w.abs().max(1.0));
                    ensure(close(g, w, 1e-12), format!("pair {pair} {name}: {g} vs {w}"))
                }
                (None, None) => Ok(()),
                _ => Err(format!("pair {pair} {name}: {got:?} vs {want:?}")),
            }
        };
        let rel = |v: f64| (o.mean_pred != 0.0).then(|| v / o.mean_pred * 100.0);
        cmp("mae", Some(rep.mae), Some(o.mae))?;
        cmp("mbe", Some(rep.mbe), Some(o.mbe))?;
        cmp("rmse", Some(rep.rmse), Some(o.rmse))?;
        cmp("rmae", rep.rmae, rel(o.mae))?;
        cmp("rmbe", rep.rmbe, rel(o.mbe))?;
        cmp("rrmse", rep.rrmse, rel(o.rmse))?;
        cmp("r2", rep.r2, o.r2)?;
    }
    Ok(format!(
        "10000 pairs, worst deviation {worst:.1e}; worked examples exact"
    ))
}

fn brute_kmax(row: &[f64], k: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
    let mut keep = idx[..k].to_vec();
    keep.sort_unstable();
    keep.into_iter().map(|i| row[i]).collect()
}

fn pooling_folding_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ties = 0;
    for r in 0..10_000 {
        let len = rng.gen_range(1..=20);
        let k = rng.gen_range(1..=len);
        // a small value alphabet forces frequent ties
        let row: Vec<f64> = (0..len).map(|_| rng.gen_range(-3..=3) as f64 * 0.5).collect();
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            ties += 1;
        }
        let t = Tensor::new(vec![1, len], row.clone()).unwrap();
        let (pooled, _) = kmax_pool(&t, k).map_err(|e| e.to_string())?;
        let want = brute_kmax(&row, k);
        ensure(
            pooled.data() == &want[..],
            format!("row {r}: {row:?} k={k}: {:?} vs {want:?}", pooled.data()),
        )?;
    }
    for trial in 0..1000 {
        let rows = 2 * rng.gen_range(1..=8);
        let cols = rng.gen_range(1..=10);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let t = Tensor::new(vec![rows, cols], data.clone()).unwrap();
        let f = fold(&t).map_err(|e| e.to_string())?;
        ensure(f.shape() == [rows / 2, cols], format!("fold shape {:?}", f.shape()))?;
        for i in 0..rows / 2 {
            for j in 0..cols {
                let want = data[2 * i * cols + j] + data[(2 * i + 1) * cols + j];
                ensure(f.data()[i * cols + j] == want, format!("fold trial {trial} ({i},{j})"))?;
            }
        }
    }
    Ok(format!(
        "10000 k-max rows ({ties} with ties) and 1000 folds match exactly"
    ))
}

fn adam_single_step() -> Outcome {
    let mut p = ParamStore::new();
    p.insert("theta", Tensor::vector(&[0.0])).unwrap();
    let mut state = AdamState::new(AdamConfig::default(), &p);
    p.slots_mut()[0].grad = Some(Tensor::vector(&[1.0]));
    state.step(&mut p).map_err(|e| e.to_string())?;
    let theta = p.get("theta").unwrap().data()[0];
    // m = 0.1, v = 0.001; bias-corrected both become 1
    let closed_form = -0.001 * 1.0 / (1.0f64.sqrt() + 1e-7);
    ensure(
        (theta - closed_form).abs() <= 1e-9,
        format!("theta {theta} vs {closed_form}"),
    )?;
    Ok(format!("theta = {theta:.12} (closed form {closed_form:.12})"))
}

fn train_loss_ratio(log: &Path) -> Result<f64, String> {
    let raw = std::fs::read_to_string(log).map_err(|e| e.to_string())?;
    let losses: Vec<f64> = raw
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["train_loss"]
                .as_f64()
                .unwrap()
        })
        .collect();
    Ok(losses.last().unwrap() / losses[0])
}

fn smoke_training() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synthetic.tsv");
    common::write_tsv(&data, &common::synthetic_records(600, 11));
    let mut cfg = RunConfig {
        seed: 5,
        epochs: 100,
        batch_size: 64,
        ..common::run_config(&data, dir.path())
    };
    cfg.optimizer.learning_rate = 0.001;
    cfg.model.arch = Arch::Cnn;
    let err = |e: retweet_reg::pipeline::PipelineError| e.to_string();
    cmd_prepare(&cfg).map_err(err)?;

    cfg.model.mode = Mode::Combined;
    let trained = cmd_train(&cfg).map_err(err)?;
    let ratio = train_loss_ratio(&trained.log)?;
    let combined = cmd_evaluate(&cfg, None, SplitName::Test).map_err(err)?;

    cfg.model.mode = Mode::TextOnly;
    cmd_train(&cfg).map_err(err)?;
    let text = cmd_evaluate(&cfg, None, SplitName::Test).map_err(err)?;
    let elapsed = started.elapsed().as_secs_f64();

    let r2 = combined.r2.unwrap_or(f64::NAN);
    let detail = format!(
        "loss ratio {ratio:.4}, test R2 {r2:.4}, MAE combined {:.3} vs text-only {:.3}, {elapsed:.0}s",
        combined.mae, text.mae
    );
    ensure(
        ratio <= 0.10,
        format!("final/epoch-1 train loss {ratio:.4} > 0.10; {detail}"),
    )?;
    ensure(r2 >= 0.5, format!("test R2 below 0.5; {detail}"))?;
    ensure(
        combined.mae < text.mae,
        format!("combined MAE not below text-only; {detail}"),
    )?;
    ensure(elapsed < 300.0, format!("over 5 minutes; {detail}"))?;
    Ok(detail)
}

fn overfit_capacity() -> Outcome {
    let mut details = Vec::new();
    for arch in [Arch::Cnn, Arch::Rnn] {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("tiny.tsv");
        common::write_tsv(&data, &common::synthetic_records(16, 3));
        let mut cfg = RunConfig {
            seed: 1,
            epochs: 500,
            split_ratios: [1, 0, 0],
            ..common::run_config(&data, dir.path())
        };
        cfg.model.arch = arch;
        cfg.model.mode = Mode::Combined;
        let err = |e: retweet_reg::pipeline::PipelineError| e.to_string();
        cmd_prepare(&cfg).map_err(err)?;
        cmd_train(&cfg).map_err(err)?;
        let report = cmd_evaluate(&cfg, None, SplitName::Train).map_err(err)?;
        let r2 = report.r2.unwrap_or(f64::NAN);
        details.push(format!("{} r2 {r2:.5}", arch.name()));
        ensure(
            report.n == 16,
            format!("expected 16 training examples, got {}", report.n),
        )?;
        ensure(r2 > 0.99, details.join(", "))?;
    }
    Ok(format!("{} after 500 epochs on 16 examples", details.join(", ")))
}

fn run_pipeline(out: &Path, input: &Path) -> Result<(), String> {
    let cfg = common::run_config(&common::fixture(), out);
    let err = |e: retweet_reg::pipeline::PipelineError| e.to_string();
    let summary = cmd_prepare(&cfg).map_err(err)?;
    ensure(
        (summary.train, summary.validation, summary.test) == (80, 20, 20),
        format!("fixture splits {summary:?}"),
    )?;
    cmd_train(&cfg).map_err(err)?;
    cmd_evaluate(&cfg, None, SplitName::Test).map_err(err)?;
    cmd_predict(&cfg, None, input, None).map_err(err)?;
    cmd_plot(&cfg, &[], 50).map_err(err)?;
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input.tsv");
    let fixture = std::fs::read_to_string(common::fixture()).unwrap();
    std::fs::write(
        &input,
        fixture.lines().take(10).map(|l| format!("{l}\n")).collect::<String>(),
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let started = Instant::now();
    run_pipeline(&a, &input)?;
    let single = started.elapsed().as_secs_f64();
    run_pipeline(&b, &input)?;

    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in &names {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(x == y, format!("{name} differs between runs"))?;
    }
    ensure(names.iter().any(|n| n.ends_with(".ckpt.json")), "no checkpoint written")?;
    ensure(names.iter().any(|n| n.ends_with(".report.json")), "no report written")?;
    Ok(format!(
        "{} artifacts byte-identical; one full pipeline run took {single:.1}s",
        names.len()
    ))
}

fn shape_parity() -> Outcome {
    let cfg = ModelConfig::with(Arch::Cnn, Mode::TextOnly, 50);
    let geo = cfg.text_geometry().map_err(|e| e.to_string())?;
    ensure(
        (geo.channels, geo.len + 2 * geo.pad1) == (100, 128),
        format!("padded embedding {geo:?}"),
    )?;
    let model = Model::new(cfg.clone(), 0).map_err(|e| e.to_string())?;
    let ex = EncodedExample {
        numeric: vec![0.0; cfg.numeric_dim],
        token_ids: (0..cfg.seq_len).map(|i| 2 + i % 48).collect(),
        label: 0.0,
        has_text: true,
    };
    let emb = embedding_lookup(&ex.token_ids, model.params().get(EMBEDDING).unwrap()).map_err(|e| e.to_string())?;
    ensure(emb.shape() == [100, 30], format!("embedded {:?}", emb.shape()))?;
    let [_, text] = model.cnn_trace(&ex).map_err(|e| e.to_string())?;
    let t = text.ok_or("no text trace")?;
    ensure(t.pooled1 == [64, 5], format!("layer-1 pooled {:?}", t.pooled1))?;
    ensure(t.folded[0] == 32, format!("folded {:?}", t.folded))?;

    let rnn = Model::new(ModelConfig::with(Arch::Rnn, Mode::TextOnly, 50), 0).map_err(|e| e.to_string())?;
    let count: usize = rnn
        .params()
        .slots()
        .iter()
        .filter(|s| s.name.starts_with("text.rnn."))
        .map(|s| s.value.len())
        .sum();
    ensure(count == 4256, format!("rnn text parameters {count}"))?;
    Ok("E 100x128, pooled 64x5, folded 32 rows, RNN text branch 4256 parameters".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("gradient suite", gradient_suite),
        ("metric oracle equivalence", metric_oracles),
        ("pooling/folding oracles", pooling_folding_oracles),
        ("adam unit check", adam_single_step),
        ("smoke training", smoke_training),
        ("overfit capacity", overfit_capacity),
        ("determinism", determinism),
        ("shape parity", shape_parity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        match check() {
            Ok(detail) => println!("PASS {name}: {detail} [{:.1}s]", started.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{:.1}s]", started.elapsed().as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
