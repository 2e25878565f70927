use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use retweet_reg::pipeline::{
    cmd_evaluate, cmd_gradcheck, cmd_plot, cmd_predict, cmd_prepare, cmd_train, parse_arch, parse_mode, PipelineError,
    RunConfig, SplitName, GRADCHECK_TOLERANCE,
};

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser, Debug)]
#[command(
    name = "retweet-reg",
    version,
    about = "Retweet-count regression with CNN and RNN models"
)]
struct Cli {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input TSV dataset.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// JSON sidecar giving the TSV column order.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, env = "RETWEET_REG_OUT")]
    out: Option<PathBuf>,
    /// cnn or rnn.
    #[arg(long, global = true, value_parser = arch_arg)]
    arch: Option<retweet_reg::model::Arch>,
    /// numeric_only, text_only or combined.
    #[arg(long, global = true, value_parser = mode_arg)]
    mode: Option<retweet_reg::model::Mode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long, global = true)]
    batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the dataset and write vocabulary, scaler and split artifacts.
    Prepare,
    /// Train a model and save its best-validation checkpoint.
    Train,
    /// Print the metrics report of a checkpoint on one split.
    Evaluate {
        #[arg(long, default_value = "test", value_parser = split_arg)]
        split: SplitName,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write per-tweet predictions for a TSV file.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck,
    /// CSV and SVG of actual against predicted retweets on sampled test tweets.
    Plot {
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Repeat to overlay several modes.
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
    },
}

fn arch_arg(s: &str) -> Result<retweet_reg::model::Arch, String> {
    parse_arch(s).ok_or_else(|| format!("unknown architecture `{s}` (expected cnn or rnn)"))
}

fn mode_arg(s: &str) -> Result<retweet_reg::model::Mode, String> {
    parse_mode(s).ok_or_else(|| format!("unknown mode `{s}` (expected numeric_only, text_only or combined)"))
}

fn split_arg(s: &str) -> Result<SplitName, String> {
    SplitName::parse(s).ok_or_else(|| format!("unknown split `{s}` (expected train, validation or test)"))
}

fn resolve(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.data {
        cfg.data = v.clone();
    }
    if let Some(v) = &cli.schema {
        cfg.schema = Some(v.clone());
    }
    if let Some(v) = &cli.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = cli.arch {
        cfg.model.arch = v;
    }
    if let Some(v) = cli.mode {
        cfg.model.mode = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = cli.batch {
        if v == 0 {
            return Err(PipelineError::Usage("--batch must be positive".into()));
        }
        cfg.batch_size = v;
    }
    if let Some(v) = cli.lr {
        if !(v.is_finite() && v > 0.0) {
            return Err(PipelineError::Usage("--lr must be a positive number".into()));
        }
        cfg.optimizer.learning_rate = v;
    }
    Ok(cfg)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn run(cli: Cli) -> Result<ExitCode, PipelineError> {
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::Prepare => {
            let s = cmd_prepare(&cfg)?;
            say!("records: {}", s.records);
            say!(
                "splits: train {} / validation {} / test {}",
                s.train,
                s.validation,
                s.test
            );
            say!("vocabulary: {} tokens", s.vocab_size);
            say!("dropped lines: {}", s.dropped);
            say!("artifacts written to {}", cfg.out_dir.display());
        }
        Command::Train => {
            let t = cmd_train(&cfg)?;
            say!("best epoch: {}", t.best_epoch);
            say!("final train loss: {}", t.final_train_loss);
            if let Some(r) = &t.best_validation {
                say!("best validation MAE: {}", r.mae);
            }
            say!("checkpoint: {}", t.checkpoint.display());
            say!("log: {}", t.log.display());
        }
        Command::Evaluate { split, checkpoint } => {
            let report = cmd_evaluate(&cfg, checkpoint.as_deref(), split)?;
            say!("{}", json(&report));
        }
        Command::Predict {
            input,
            checkpoint,
            output,
        } => {
            let p = cmd_predict(&cfg, checkpoint.as_deref(), &input, output.as_deref())?;
            say!(
                "{} predictions ({} null) written to {}",
                p.rows,
                p.nulls,
                p.output.display()
            );
        }
        Command::Gradcheck => {
            let started = Instant::now();
            let g = cmd_gradcheck(cfg.seed)?;
            for c in &g.layers {
                say!("layer {:<16} max_rel_error {:.3e}", c.layer, c.max_rel_error);
            }
            for m in &g.models {
                say!(
                    "model {}/{:<13} max_rel_error {:.3e}",
                    m.arch.name(),
                    m.mode.name(),
                    m.max_rel_error
                );
            }
            let verdict = if g.passed { "PASS" } else { "FAIL" };
            say!(
                "{verdict}: max relative error {:.3e} (tolerance {GRADCHECK_TOLERANCE:e})",
                g.max_rel_error
            );
            log::info!("gradcheck took {:.2?}", started.elapsed());
            if !g.passed {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Plot { n, checkpoint } => {
            let p = cmd_plot(&cfg, &checkpoint, n)?;
            say!("{} rows, columns: {}", p.rows, p.columns.join(", "));
            say!("csv: {}", p.csv.display());
            say!("svg: {}", p.svg.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
