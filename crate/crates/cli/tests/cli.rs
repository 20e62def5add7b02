use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_seqveritas")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).args(args).current_dir(dir).env_remove("SEQVERITAS_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn prepare(dir: &Path, extra: &[&str]) -> Output {
    let fake = fixture("toy_fake.csv");
    let real = fixture("toy_true.csv");
    let mut args = vec![
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
    ];
    args.extend(extra);
    run_in(dir, &args)
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["prepare", "--true", "x.csv", "--out", "d"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn unreadable_csv_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["prepare", "--fake", "nope.csv", "--true", "nope.csv", "--out", "d"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prepare_reports_counts_and_is_repeatable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out_a = prepare(a.path(), &[]);
    let out_b = prepare(b.path(), &[]);
    assert_eq!(out_a.status.code(), Some(0));
    let doc = json(&out_a);
    assert_eq!(doc["counts"]["fake"], 10);
    assert_eq!(doc["counts"]["true"], 10);
    assert_eq!(doc["counts"]["total"], 20);
    assert_eq!(doc["train"]["total"], 16);
    assert_eq!(doc["config"]["seed"], 42);
    assert_eq!(out_a.stdout, out_b.stdout);
    for f in ["train.svec", "val.svec", "vocab.json"] {
        let fa = std::fs::read(a.path().join("data").join(f)).unwrap();
        let fb = std::fs::read(b.path().join("data").join(f)).unwrap();
        assert_eq!(fa, fb, "{f}");
    }
}

#[test]
fn train_eval_predict_round() {
    let dir = tempfile::tempdir().unwrap();
    assert!(prepare(dir.path(), &[]).status.success());
    let out = run_in(
        dir.path(),
        &[
            "train",
            "--data",
            "data",
            "--epochs",
            "30",
            "--batch",
            "4",
            "--patience",
            "30",
            "--out-checkpoint",
            "toy.svchk",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trained = json(&out);
    assert_eq!(trained["config"]["preset"], "baseline");
    assert_eq!(trained["config"]["precision"], "f64");
    assert_eq!(trained["config"]["history"], "toy.history.jsonl");
    assert_eq!(trained["train"]["accuracy"], 1.0);

    let history = std::fs::read_to_string(dir.path().join("toy.history.jsonl")).unwrap();
    assert_eq!(history.lines().count() as u64, trained["epochs_run"].as_u64().unwrap());
    for line in history.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert!(rec["val_loss"].is_f64());
    }

    let out = run_in(dir.path(), &["eval", "--checkpoint", "toy.svchk", "--data", "data"]);
    assert_eq!(out.status.code(), Some(0));
    let evaluated = json(&out);
    assert_eq!(evaluated["metrics"], trained["validation"]);
    let out = run_in(dir.path(), &["eval", "--checkpoint", "toy.svchk", "--data", "data/train.svec"]);
    assert_eq!(json(&out)["metrics"], trained["train"]);

    let out = run_in(dir.path(), &["predict", "--checkpoint", "toy.svchk", "--text", ""]);
    assert_eq!(out.status.code(), Some(0));
    let p = json(&out);
    assert!(p["probability"].as_f64().is_some_and(|v| (0.0..=1.0).contains(&v)));
    assert!(p["label"] == "fake" || p["label"] == "true");
    assert_eq!(p.as_object().unwrap().len(), 2);

    let mut child = Command::new(bin())
        .args(["predict", "--checkpoint", "toy.svchk", "--stdin"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    {
        use std::io::Write;
        let mut stdin = child.stdin.take().unwrap();
        stdin.write_all(b"shocking hoax in the city\nofficial statement from council\n\n").unwrap();
    }
    let out = child.wait_with_output().unwrap();
    let lines: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["label"], "fake");
    assert_eq!(lines[1]["label"], "true");
}

#[test]
fn bad_preset_and_bad_checkpoint_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert!(prepare(dir.path(), &[]).status.success());
    let out = run_in(dir.path(), &["train", "--data", "data", "--preset", "fancy"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("baseline") && err.contains("regularized") && err.contains("optimized"), "{err}");
    let out = run_in(dir.path(), &["eval", "--checkpoint", "data/vocab.json", "--data", "data"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(dir.path(), &["predict", "--checkpoint", "missing.svchk", "--text", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_file_which_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    assert!(prepare(dir.path(), &[]).status.success());
    std::fs::write(dir.path().join("cfg.json"), r#"{"epochs": 1, "seed": 5, "batch_size": 8}"#).unwrap();
    let train = |extra: &[&str], env_seed: Option<&str>| {
        let mut cmd = Command::new(bin());
        cmd.args(["--config", "cfg.json", "train", "--data", "data", "--out-checkpoint", "m.svchk"])
            .args(extra)
            .current_dir(dir.path())
            .env_remove("SEQVERITAS_SEED");
        if let Some(s) = env_seed {
            cmd.env("SEQVERITAS_SEED", s);
        }
        json(&cmd.output().unwrap())
    };
    let doc = train(&["--epochs", "2"], Some("9"));
    assert_eq!(doc["config"]["epochs"], 2);
    assert_eq!(doc["config"]["batch_size"], 8);
    assert_eq!(doc["config"]["seed"], 5);
    std::fs::write(dir.path().join("cfg.json"), r#"{"epochs": 1}"#).unwrap();
    assert_eq!(train(&[], Some("9"))["config"]["seed"], 9);
    assert_eq!(train(&["--seed", "3"], Some("9"))["config"]["seed"], 3);
    assert_eq!(train(&[], None)["config"]["seed"], 42);

    std::fs::write(dir.path().join("cfg.json"), r#"{"epoch": 1}"#).unwrap();
    let out = run_in(dir.path(), &["--config", "cfg.json", "train", "--data", "data"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_passes_for_one_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gradcheck", "--preset", "optimized", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["config"]["presets"], serde_json::json!(["optimized"]));
    assert!(doc["worst"]["rel_error"].as_f64().unwrap() < 1e-4);
}
