//! Acceptance checks. Prints one PASS, FAIL or SKIP line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Criteria 7 and 8 need the news corpus: set `SEQVERITAS_CORPUS_DIR` to a
//! directory holding `Fake.csv` and `True.csv` for the subsampled run, and
//! additionally `SEQVERITAS_FULL_CORPUS=1` for the full three-preset runs.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use seqveritas::checkpoint;
use seqveritas::gradcheck::{self, GRADCHECK_BATCH, GRADCHECK_TOLERANCE};
use seqveritas::ingest::{load_articles, merge_shuffle, split};
use seqveritas::layers::{Lstm, ParamKind, ParamTensor};
use seqveritas::numerics::{Matrix, Prng};
use seqveritas::objective::{evaluate, DEFAULT_THRESHOLD};
use seqveritas::optim::{evaluate_dataset, fit, AdamState, FitConfig};
use seqveritas::{Dataset, Label, MetricsReport, Model, ModelConfig, PrepConfig, Preset, TextPipeline};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mini = ModelConfig::miniature(Preset::Baseline, 0);
    if (mini.vocab_size, mini.embed_dim, mini.lstm_units, mini.maxlen, GRADCHECK_BATCH) != (50, 8, 8, 6, 4) {
        return Fail(format!("miniature shape {mini:?}"));
    }
    let mut seeds = Prng::new(0xacce97);
    let mut worst = 0.0f64;
    let mut tensors = 0;
    for _ in 0..6 {
        let seed = seeds.next_u64();
        let report = match gradcheck::run_all(seed) {
            Ok(r) => r,
            Err(e) => return Fail(format!("seed {seed}: {e}")),
        };
        if let Some(w) = report.worst() {
            if !report.passed() {
                return Fail(format!("seed {seed}: {}/{} rel error {:e}", w.check, w.tensor, w.rel_error));
            }
            worst = worst.max(w.rel_error);
        }
        tensors += report.checks.len();
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < GRADCHECK_TOLERANCE && secs < 60.0,
        format!("{tensors} tensors over 6 seeds, worst rel error {worst:.2e}, {secs:.1} s"),
    )
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn oracles() -> Outcome {
    let mut rng = Prng::new(2024);
    let probs: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
    let labels: Vec<u8> = (0..1000).map(|_| rng.below(2) as u8).collect();
    let r = match evaluate(&probs, &labels, DEFAULT_THRESHOLD) {
        Ok(r) => r,
        Err(e) => return Fail(e.to_string()),
    };
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in probs.iter().zip(&labels) {
        match (p >= DEFAULT_THRESHOLD, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    let metrics_ok = (r.confusion.tp, r.confusion.fp, r.confusion.tn, r.confusion.fn_) == (tp, fp, tn, fn_)
        && r.accuracy == (tp + tn) as f64 / 1000.0
        && r.precision == precision
        && r.recall == recall
        && r.f1 == 2.0 * precision * recall / (precision + recall);
    if !metrics_ok {
        return Fail(format!("recount {tp}/{fp}/{tn}/{fn_} vs {:?}", r.confusion));
    }

    let w = [[0.1, -0.2, 0.3, 0.05, -0.4, 0.25, 0.15, -0.1], [-0.3, 0.2, 0.1, -0.15, 0.35, -0.05, 0.2, 0.3]];
    let u = [[0.05, 0.1, -0.2, 0.3, 0.15, -0.25, 0.1, 0.05], [-0.1, 0.2, 0.25, -0.05, -0.3, 0.1, 0.2, -0.15]];
    let b = [0.01, -0.02, 1.0, 1.0, 0.03, -0.01, 0.02, 0.0];
    let xs = [[0.5, -1.0], [1.5, 0.25]];
    let (mut h, mut c) = ([0.0f64; 2], [0.0f64; 2]);
    for x in xs {
        let z = |col: usize| x[0] * w[0][col] + x[1] * w[1][col] + h[0] * u[0][col] + h[1] * u[1][col] + b[col];
        let (i, f, g, o) =
            ([sig(z(0)), sig(z(1))], [sig(z(2)), sig(z(3))], [z(4).tanh(), z(5).tanh()], [sig(z(6)), sig(z(7))]);
        c = [f[0] * c[0] + i[0] * g[0], f[1] * c[1] + i[1] * g[1]];
        h = [o[0] * c[0].tanh(), o[1] * c[1].tanh()];
    }
    let lstm = Lstm::from_parts(Matrix::from_rows(&w).unwrap(), Matrix::from_rows(&u).unwrap(), Matrix::row_vector(&b))
        .unwrap();
    let seq: Vec<Matrix> = xs.iter().map(|x| Matrix::row_vector(x)).collect();
    let out = match lstm.infer(&seq) {
        Ok(o) => o,
        Err(e) => return Fail(e.to_string()),
    };
    let delta = (0..2).map(|j| (out.get(0, j) - h[j]).abs()).fold(0.0, f64::max);
    check(delta < 1e-12, format!("1000-pair recount exact, 2-step LSTM trace delta {delta:.1e}"))
}

fn adam_trace() -> Outcome {
    let (lr, b1, b2, eps): (f64, f64, f64, f64) = (1e-3, 0.9, 0.999, 1e-8);
    let mut want = Vec::new();
    let (mut w, mut m, mut v) = (0.5f64, 0.0f64, 0.0f64);
    for (t, g) in [1.0f64, -1.0, 1.0].into_iter().enumerate() {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1.powi(t as i32 + 1));
        let v_hat = v / (1.0 - b2.powi(t as i32 + 1));
        w -= lr * m_hat / (v_hat.sqrt() + eps);
        want.push(w);
    }
    let mut p = ParamTensor::new("w", ParamKind::Kernel, Matrix::row_vector(&[0.5]));
    let mut adam = AdamState::new(lr, b1, b2, eps).unwrap();
    let mut delta = 0.0f64;
    for (g, expected) in [1.0, -1.0, 1.0].into_iter().zip(&want) {
        p.grad = Matrix::row_vector(&[g]);
        if let Err(e) = adam.step(&mut [&mut p]) {
            return Fail(e.to_string());
        }
        delta = delta.max((p.value.get(0, 0) - expected).abs());
    }
    check(delta < 1e-12, format!("three steps, max delta {delta:.1e}"))
}

const TOY_PREP: PrepConfig = PrepConfig { maxlen: 16, vocab_size: 20_000, min_freq: 1 };

fn toy_model(preset: Preset, seed: u64) -> (Model, seqveritas::EncodedDataset) {
    let fake = load_articles(fixture("toy_fake.csv"), Label::Fake).unwrap();
    let real = load_articles(fixture("toy_true.csv"), Label::True).unwrap();
    let ds = merge_shuffle(Dataset::new(fake), Dataset::new(real), 42);
    let (vocab, enc, _) = TextPipeline::default().prepare_split(&ds, &ds, &TOY_PREP);
    let config = ModelConfig::preset(preset, vocab.len(), TOY_PREP.maxlen, seed);
    (Model::build(config, vocab).unwrap(), enc)
}

fn toy_overfit() -> Outcome {
    let start = Instant::now();
    let run = || {
        let (mut model, data) = toy_model(Preset::Baseline, 42);
        let cfg =
            FitConfig { epochs: 30, batch_size: 4, seed: 42, patience: 30, eval_train: true, ..FitConfig::default() };
        let history = fit(&mut model, &data, &data, &cfg).unwrap();
        let first = history.records.iter().find(|r| r.train_accuracy == Some(1.0)).map(|r| r.epoch);
        let final_acc = evaluate_dataset(&model.network, &data, 8).unwrap().accuracy;
        (first, final_acc, history)
    };
    let (first, final_acc, history) = run();
    let (_, _, again) = run();
    let secs = start.elapsed().as_secs_f64() / 2.0;
    let deterministic = history == again;
    check(
        first.is_some_and(|e| e <= 30) && final_acc == 1.0 && deterministic && secs < 30.0,
        format!("{} examples, first perfect epoch {first:?}, final accuracy {final_acc}, repeatable {deterministic}, {secs:.1} s", data_len()),
    )
}

fn data_len() -> usize {
    toy_model(Preset::Baseline, 42).1.len()
}

fn transcript(dir: &Path) -> Result<Vec<u8>, String> {
    let fake = fixture("toy_fake.csv");
    let real = fixture("toy_true.csv");
    let steps: [Vec<&str>; 3] = [
        vec![
            "prepare",
            "--fake",
            fake.to_str().unwrap(),
            "--true",
            real.to_str().unwrap(),
            "--out",
            "data",
            "--maxlen",
            "16",
            "--min-freq",
            "1",
        ],
        vec![
            "train",
            "--data",
            "data",
            "--epochs",
            "4",
            "--batch",
            "4",
            "--preset",
            "optimized",
            "--out-checkpoint",
            "m.svchk",
        ],
        vec!["eval", "--checkpoint", "m.svchk", "--data", "data"],
    ];
    let mut log = Vec::new();
    for step in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_seqveritas"))
            .arg("--reference-mode")
            .args(&step)
            .current_dir(dir)
            .env_remove("SEQVERITAS_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{} exited {:?}", step[0], out.status.code()));
        }
        log.extend(out.stdout);
        log.extend(out.stderr);
    }
    for f in ["data/train.svec", "data/val.svec", "data/vocab.json", "m.svchk", "m.history.jsonl"] {
        log.extend(std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?);
    }
    Ok(log)
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    match (transcript(a.path()), transcript(b.path())) {
        (Ok(x), Ok(y)) => check(x == y, format!("{} bytes of output and artifacts, identical {}", x.len(), x == y)),
        (Err(e), _) | (_, Err(e)) => Fail(e),
    }
}

fn round_trip() -> Outcome {
    const WORDS: &[&str] =
        &["shocking", "hoax", "official", "statement", "market", "city", "council", "Senate", "zebra", "42", "!!"];
    let mut rng = Prng::new(21);
    let texts: Vec<String> = (0..100)
        .map(|_| {
            let len = rng.below(30) as usize;
            (0..len).map(|_| WORDS[rng.below(WORDS.len() as u64) as usize]).collect::<Vec<_>>().join(" ")
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let mut max_delta = 0.0f64;
    for preset in Preset::ALL {
        let (mut model, data) = toy_model(preset, 12);
        fit(&mut model, &data, &data, &FitConfig { epochs: 2, batch_size: 4, seed: 12, ..FitConfig::default() })
            .unwrap();
        let path = dir.path().join(format!("{preset}.svchk"));
        checkpoint::save(&model, &path).unwrap();
        let loaded = match checkpoint::load(&path) {
            Ok(m) => m,
            Err(e) => return Fail(format!("{preset}: {e}")),
        };
        for t in &texts {
            let d = (model.predict(t).unwrap().probability - loaded.predict(t).unwrap().probability).abs();
            max_delta = max_delta.max(d);
        }
    }
    check(max_delta == 0.0, format!("100 inputs per preset, max delta {max_delta:e}"))
}

fn corpus() -> Option<(PathBuf, bool)> {
    let dir = PathBuf::from(std::env::var_os("SEQVERITAS_CORPUS_DIR")?);
    let full = std::env::var("SEQVERITAS_FULL_CORPUS").is_ok_and(|v| v == "1");
    Some((dir, full))
}

fn load_corpus(dir: &Path, take: Option<usize>) -> Result<Dataset, String> {
    let fake = load_articles(dir.join("Fake.csv"), Label::Fake).map_err(|e| e.to_string())?;
    let real = load_articles(dir.join("True.csv"), Label::True).map_err(|e| e.to_string())?;
    let merged = merge_shuffle(Dataset::new(fake), Dataset::new(real), 42);
    Ok(match take {
        Some(n) => Dataset::new(merged.records.into_iter().take(n).collect()),
        None => merged,
    })
}

fn train_preset(ds: &Dataset, preset: Preset, prep: &PrepConfig, fit_cfg: &FitConfig) -> Result<MetricsReport, String> {
    let (train, val) = split(ds, 0.8, 42).map_err(|e| e.to_string())?;
    let (vocab, train_enc, val_enc) = TextPipeline::default().prepare_split(&train, &val, prep);
    let config = ModelConfig::preset(preset, vocab.len(), prep.maxlen, 42);
    let mut model = Model::build(config, vocab).map_err(|e| e.to_string())?;
    fit(&mut model, &train_enc, &val_enc, fit_cfg).map_err(|e| e.to_string())?;
    evaluate_dataset(&model.network, &val_enc, 256).map_err(|e| e.to_string())
}

fn full_runs(dir: &Path) -> Result<Vec<MetricsReport>, String> {
    let ds = load_corpus(dir, None)?;
    Preset::ALL.iter().map(|&p| train_preset(&ds, p, &PrepConfig::default(), &FitConfig::default())).collect()
}

fn reproduction(full: Option<&Result<Vec<MetricsReport>, String>>) -> Outcome {
    let Some((dir, _)) = corpus() else {
        return Skip("SEQVERITAS_CORPUS_DIR not set".into());
    };
    let sub = load_corpus(&dir, Some(5_000)).and_then(|ds| {
        let prep = PrepConfig { maxlen: 200, ..PrepConfig::default() };
        train_preset(&ds, Preset::Baseline, &prep, &FitConfig { epochs: 5, ..FitConfig::default() })
    });
    let sub = match sub {
        Ok(r) => r,
        Err(e) => return Fail(e),
    };
    if sub.accuracy < 0.90 {
        return Fail(format!("subsampled baseline validation accuracy {:.4}", sub.accuracy));
    }
    let Some(full) = full else {
        return Pass(format!("subsampled baseline {:.4}; full runs need SEQVERITAS_FULL_CORPUS=1", sub.accuracy));
    };
    let reports = match full {
        Ok(r) => r,
        Err(e) => return Fail(e.clone()),
    };
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let within = acc.iter().zip([0.94, 0.97, 0.98]).all(|(a, t)| (a - t).abs() <= 0.03);
    let ordered = acc[2] >= acc[1] && acc[1] >= acc[0];
    check(
        within && ordered,
        format!("subsampled {:.4}; full {:.4} / {:.4} / {:.4}", sub.accuracy, acc[0], acc[1], acc[2]),
    )
}

fn table_check(full: Option<&Result<Vec<MetricsReport>, String>>) -> Outcome {
    let Some(full) = full else {
        return Skip("needs SEQVERITAS_CORPUS_DIR and SEQVERITAS_FULL_CORPUS=1".into());
    };
    let r = match full {
        Ok(r) => &r[2],
        Err(e) => return Fail(e.clone()),
    };
    let ok = [(r.precision, 0.97), (r.recall, 0.98), (r.f1, 0.98)].iter().all(|(v, t)| (v - t).abs() <= 0.03);
    check(ok, format!("optimized precision {:.4} recall {:.4} F1 {:.4}", r.precision, r.recall, r.f1))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Fail(format!("panicked: {}", msg.unwrap_or_default()))
    })
}

type Criterion<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

fn main() -> ExitCode {
    seqveritas::numerics::set_parallel(true);
    let full = corpus().filter(|(_, full)| *full).map(|(dir, _)| full_runs(&dir));
    let criteria: Vec<(&str, Criterion)> = vec![
        ("gradient correctness", Box::new(gradients)),
        ("oracle equivalence", Box::new(oracles)),
        ("optimizer trace", Box::new(adam_trace)),
        ("toy-corpus overfit", Box::new(toy_overfit)),
        ("determinism", Box::new(determinism)),
        ("checkpoint round-trip", Box::new(round_trip)),
        ("reference accuracy", Box::new(|| reproduction(full.as_ref()))),
        ("table precision/recall/F1", Box::new(|| table_check(full.as_ref()))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let (tag, detail) = match guarded(f) {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} {} {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
