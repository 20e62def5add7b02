use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use seqveritas::checkpoint;
use seqveritas::gradcheck::{self, GRADCHECK_TOLERANCE};
use seqveritas::ingest::{load_articles, merge_shuffle, split};
use seqveritas::layers::LayerError;
use seqveritas::model::ModelError;
use seqveritas::numerics::NumericsError;
use seqveritas::optim::{
    evaluate_dataset, fit_with, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_MIN_DELTA, DEFAULT_PATIENCE,
};
use seqveritas::textprep::{DEFAULT_MAXLEN, DEFAULT_MIN_FREQ, DEFAULT_VOCAB_SIZE};
use seqveritas::{
    Dataset, EncodedDataset, FitConfig, Label, Model, ModelConfig, OptimError, PrepConfig, Preset, TextPipeline,
    Vocabulary,
};

use crate::args::{EvalArgs, GradcheckArgs, PredictArgs, PrepareArgs, TrainArgs};
use crate::settings::{Failure, FileConfig, DEFAULT_TRAIN_FRACTION};

pub const TRAIN_CACHE: &str = "train.svec";
pub const VAL_CACHE: &str = "val.svec";
pub const VOCAB_FILE: &str = "vocab.json";

fn emit(doc: &impl Serialize) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out)?;
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn parse_preset(name: Option<&str>) -> Result<Preset, Failure> {
    Ok(name.unwrap_or(Preset::Baseline.name()).parse::<Preset>()?)
}

fn is_numerical(e: &OptimError) -> bool {
    let layer_non_finite = |l: &LayerError| matches!(l, LayerError::Numerics(NumericsError::NonFinite { .. }));
    match e {
        OptimError::NonFiniteGradient(_) => true,
        OptimError::Layer(l) => layer_non_finite(l),
        OptimError::Model(ModelError::Layer(l)) => layer_non_finite(l),
        _ => false,
    }
}

fn classify(e: OptimError) -> Failure {
    if is_numerical(&e) {
        Failure::Numerical(e.into())
    } else {
        Failure::Config(e.into())
    }
}

#[derive(Serialize)]
struct PrepareConfig {
    fake: String,
    #[serde(rename = "true")]
    true_: String,
    out: String,
    seed: u64,
    train_fraction: f64,
    maxlen: usize,
    vocab_size: usize,
    min_freq: usize,
    reference_mode: bool,
}

pub fn prepare(args: &PrepareArgs, file: &FileConfig, reference_mode: bool) -> Result<(), Failure> {
    let config = PrepareConfig {
        fake: display(&args.fake),
        true_: display(&args.true_),
        out: display(&args.out),
        seed: file.seed(args.seed)?,
        train_fraction: args.train_fraction.or(file.train_fraction).unwrap_or(DEFAULT_TRAIN_FRACTION),
        maxlen: args.maxlen.or(file.maxlen).unwrap_or(DEFAULT_MAXLEN),
        vocab_size: args.vocab_size.or(file.vocab_size).unwrap_or(DEFAULT_VOCAB_SIZE),
        min_freq: args.min_freq.or(file.min_freq).unwrap_or(DEFAULT_MIN_FREQ),
        reference_mode,
    };
    if config.maxlen == 0 {
        return Err(anyhow!("--maxlen must be at least 1").into());
    }
    let fake = Dataset::new(load_articles(&args.fake, Label::Fake)?);
    let real = Dataset::new(load_articles(&args.true_, Label::True)?);
    let merged = merge_shuffle(fake, real, config.seed);
    let counts = merged.label_counts();
    let (train, val) = split(&merged, config.train_fraction, config.seed)?;
    let prep = PrepConfig { maxlen: config.maxlen, vocab_size: config.vocab_size, min_freq: config.min_freq };
    eprintln!("preprocessing {} articles", merged.len());
    let (vocab, train_enc, val_enc) = TextPipeline::default().prepare_split(&train, &val, &prep);

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    train_enc.write(args.out.join(TRAIN_CACHE))?;
    val_enc.write(args.out.join(VAL_CACHE))?;
    std::fs::write(args.out.join(VOCAB_FILE), vocab.to_json())
        .with_context(|| format!("writing {}", args.out.join(VOCAB_FILE).display()))?;

    emit(&json!({
        "command": "prepare",
        "config": config,
        "counts": counts,
        "train": train.label_counts(),
        "validation": val.label_counts(),
        "degenerate": merged.records.iter().filter(|a| a.degenerate).count(),
        "vocabulary_size": vocab.len(),
    }))
}

fn read_prepared(dir: &Path) -> Result<(Vocabulary, EncodedDataset, EncodedDataset), Failure> {
    let vocab_path = dir.join(VOCAB_FILE);
    let text = std::fs::read_to_string(&vocab_path).with_context(|| format!("reading {}", vocab_path.display()))?;
    let vocab = Vocabulary::from_json(&text).with_context(|| format!("parsing {}", vocab_path.display()))?;
    let read = |name: &str| -> Result<EncodedDataset, Failure> {
        let path = dir.join(name);
        let data = EncodedDataset::read(&path).with_context(|| format!("reading {}", path.display()))?;
        if data.vocab_size != vocab.len() {
            return Err(anyhow!(
                "{} was encoded with {} tokens but {} has {}",
                path.display(),
                data.vocab_size,
                VOCAB_FILE,
                vocab.len()
            )
            .into());
        }
        Ok(data)
    };
    let train = read(TRAIN_CACHE)?;
    let val = read(VAL_CACHE)?;
    if train.maxlen != val.maxlen {
        return Err(anyhow!("train and validation caches disagree on maxlen").into());
    }
    Ok((vocab, train, val))
}

#[derive(Serialize)]
struct TrainConfig {
    data: String,
    preset: Preset,
    seed: u64,
    epochs: usize,
    batch_size: usize,
    patience: usize,
    min_delta: f64,
    checkpoint: String,
    history: String,
    track_train_accuracy: bool,
    reference_mode: bool,
    precision: &'static str,
    model: ModelConfig,
}

pub fn default_history_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("history.jsonl")
}

pub fn train(args: &TrainArgs, file: &FileConfig, reference_mode: bool) -> Result<(), Failure> {
    let preset = parse_preset(args.preset.as_deref().or(file.preset.as_deref()))?;
    let seed = file.seed(args.seed)?;
    let checkpoint_path = args.out_checkpoint.clone().unwrap_or_else(|| PathBuf::from("model.svchk"));
    let history_path = args.history.clone().unwrap_or_else(|| default_history_path(&checkpoint_path));
    let fit_config = FitConfig {
        epochs: args.epochs.or(file.epochs).unwrap_or(DEFAULT_EPOCHS),
        batch_size: args.batch_size.or(file.batch_size).unwrap_or(DEFAULT_BATCH_SIZE),
        seed,
        patience: args.patience.or(file.patience).unwrap_or(DEFAULT_PATIENCE),
        min_delta: args.min_delta.or(file.min_delta).unwrap_or(DEFAULT_MIN_DELTA),
        eval_train: args.track_train_accuracy,
    };
    if fit_config.batch_size == 0 {
        return Err(anyhow!("--batch must be at least 1").into());
    }
    let (vocab, train_data, val_data) = read_prepared(&args.data)?;
    let model_config = ModelConfig::preset(preset, vocab.len(), train_data.maxlen, seed);
    let config = TrainConfig {
        data: display(&args.data),
        preset,
        seed,
        epochs: fit_config.epochs,
        batch_size: fit_config.batch_size,
        patience: fit_config.patience,
        min_delta: fit_config.min_delta,
        checkpoint: display(&checkpoint_path),
        history: display(&history_path),
        track_train_accuracy: fit_config.eval_train,
        reference_mode,
        precision: "f64",
        model: model_config.clone(),
    };
    let mut model = Model::build(model_config, vocab)?;
    eprintln!(
        "training {preset}: {} parameters, {} train / {} validation",
        model.network.param_count(),
        train_data.len(),
        val_data.len()
    );
    let history = fit_with(&mut model, &train_data, &val_data, &fit_config, |r| {
        eprintln!(
            "epoch {}: train_loss {:.6} val_loss {:.6} val_accuracy {:.4}",
            r.epoch, r.train_loss, r.val_loss, r.val_accuracy
        );
    })
    .map_err(classify)?;

    checkpoint::save(&model, &checkpoint_path)?;
    let mut f = std::fs::File::create(&history_path).with_context(|| format!("creating {}", history_path.display()))?;
    history.write_json_lines(&mut f)?;

    let train_metrics = evaluate_dataset(&model.network, &train_data, fit_config.batch_size).map_err(classify)?;
    let val_metrics = evaluate_dataset(&model.network, &val_data, fit_config.batch_size).map_err(classify)?;
    emit(&json!({
        "command": "train",
        "config": config,
        "epochs_run": history.records.len(),
        "best_epoch": history.best_epoch,
        "stopped_early": history.stopped_early,
        "train": train_metrics,
        "validation": val_metrics,
    }))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display())).map_err(Failure::Config)
}

pub fn eval(args: &EvalArgs, file: &FileConfig, reference_mode: bool) -> Result<(), Failure> {
    let batch_size = args.batch_size.or(file.batch_size).unwrap_or(DEFAULT_BATCH_SIZE);
    if batch_size == 0 {
        return Err(anyhow!("--batch must be at least 1").into());
    }
    let model = load_model(&args.checkpoint)?;
    let data_path = if args.data.is_dir() { args.data.join(VAL_CACHE) } else { args.data.clone() };
    let data = EncodedDataset::read(&data_path).with_context(|| format!("reading {}", data_path.display()))?;
    if data.vocab_size != model.vocab.len() || data.maxlen != model.config.maxlen {
        return Err(anyhow!(
            "{} (vocabulary {}, maxlen {}) does not match the checkpoint (vocabulary {}, maxlen {})",
            data_path.display(),
            data.vocab_size,
            data.maxlen,
            model.vocab.len(),
            model.config.maxlen
        )
        .into());
    }
    let metrics = evaluate_dataset(&model.network, &data, batch_size).map_err(classify)?;
    emit(&json!({
        "command": "eval",
        "config": {
            "checkpoint": display(&args.checkpoint),
            "data": display(&data_path),
            "batch_size": batch_size,
            "preset": model.preset(),
            "reference_mode": reference_mode,
        },
        "metrics": metrics,
    }))
}

pub fn predict(args: &PredictArgs, reference_mode: bool) -> Result<(), Failure> {
    let model = load_model(&args.checkpoint)?;
    eprintln!(
        "predict: checkpoint {} preset {} maxlen {} reference_mode {}",
        args.checkpoint.display(),
        model.preset(),
        model.config.maxlen,
        reference_mode
    );
    let mut out = std::io::stdout().lock();
    let mut write = |text: &str| -> Result<(), Failure> {
        let p = model.predict(text)?;
        serde_json::to_writer(&mut out, &p)?;
        writeln!(out)?;
        Ok(())
    };
    match &args.text {
        Some(text) => write(text)?,
        None => {
            for line in std::io::stdin().lock().lines() {
                write(&line?)?;
            }
        }
    }
    Ok(())
}

pub fn gradcheck(args: &GradcheckArgs, file: &FileConfig, reference_mode: bool) -> Result<(), Failure> {
    let seed = file.seed(args.seed)?;
    let presets: Vec<Preset> = match args.preset.as_deref().or(file.preset.as_deref()) {
        Some(name) => vec![parse_preset(Some(name))?],
        None => Preset::ALL.to_vec(),
    };
    let run = || -> anyhow::Result<gradcheck::GradcheckReport> {
        let mut report = gradcheck::run_layers(seed)?;
        for &p in &presets {
            report.extend(gradcheck::check_preset(p, seed)?);
        }
        Ok(report)
    };
    let report = run().map_err(Failure::Numerical)?;
    let passed = report.passed();
    let worst = report.worst().cloned();
    emit(&json!({
        "command": "gradcheck",
        "config": {
            "seed": seed,
            "presets": presets,
            "miniature": {"vocab_size": 50, "embed_dim": 8, "lstm_units": 8, "maxlen": 6, "batch": gradcheck::GRADCHECK_BATCH},
            "tolerance": GRADCHECK_TOLERANCE,
            "reference_mode": reference_mode,
            "precision": "f64",
        },
        "passed": passed,
        "worst": worst,
        "resampled_points": report.resampled,
        "checks": report.checks,
    }))?;
    if passed {
        Ok(())
    } else {
        let w = worst.ok_or_else(|| anyhow!("no checks ran"))?;
        Err(Failure::Verification(format!(
            "gradient check failed: worst tensor {} in {} has relative error {:e} (tolerance {:e})",
            w.tensor, w.check, w.rel_error, GRADCHECK_TOLERANCE
        )))
    }
}
