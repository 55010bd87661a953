use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use medner_core::corpus::{parse_conll, validate_bio, BioMode};
use medner_core::model::{decode_checkpoint, AnyCheckpoint};

fn medner(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medner"))
        .args(args)
        .current_dir(dir)
        .env_remove("MEDNER_SEED")
        .output()
        .expect("spawn medner")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = medner(dir, args);
    assert!(
        out.status.success(),
        "medner {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str], code: i32) -> String {
    let out = medner(dir, args);
    assert_eq!(out.status.code(), Some(code), "medner {args:?}");
    String::from_utf8(out.stderr).unwrap()
}

const TINY_CONFIG: &str = "\
[run]
seed = 3

[data.synthetic]
n_records = 60
vocab_size = 40
max_len = 8

[model]
d_model = 8
n_heads = 2
n_layers = 1
d_ff = 16
max_len = 8

[train]
learning_rate = 1e-2
max_epochs = 3
";

fn tiny_run(dir: &Path, extra: &str) {
    fs::write(dir.join("run.toml"), format!("{TINY_CONFIG}{extra}")).unwrap();
    ok(dir, &["prepare", "--config", "run.toml"]);
}

fn corpus_text(n: usize) -> String {
    let mut s = String::new();
    for i in 0..n {
        let _ = write!(s, "# id: r{i}\nfever\tB-Disease\nnoted\tO\n\n");
    }
    s
}

#[test]
fn gen_synthetic_is_seeded_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen-synthetic",
            "--out",
            "a.conll",
            "--seed",
            "7",
            "--n-records",
            "50",
        ],
    );
    ok(
        d,
        &[
            "gen-synthetic",
            "--out",
            "b.conll",
            "--seed",
            "7",
            "--n-records",
            "50",
        ],
    );
    let a = fs::read_to_string(d.join("a.conll")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.conll")).unwrap());
    assert!(a.starts_with("# generated by medner gen-synthetic"));
    let corpus = parse_conll(&a).unwrap();
    assert_eq!(corpus.len(), 50);
    for r in corpus.records() {
        validate_bio(r.labels(), BioMode::Strict).unwrap();
    }
    let types: Vec<&str> = corpus
        .label_inventory()
        .iter()
        .map(String::as_str)
        .collect();
    assert_eq!(types, ["Disease", "Drug", "Symptom"]);

    ok(
        d,
        &[
            "gen-synthetic",
            "--out",
            "c.conll",
            "--entity-types",
            "Drug",
            "--n-records",
            "20",
        ],
    );
    let c = parse_conll(&fs::read_to_string(d.join("c.conll")).unwrap()).unwrap();
    assert_eq!(c.label_inventory().len(), 1);
    fails(
        d,
        &["gen-synthetic", "--out", "x.conll", "--n-records", "0"],
        2,
    );
}

#[test]
fn prepare_splits_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("raw.conll"), corpus_text(100)).unwrap();
    ok(d, &["prepare", "raw.conll", "--out", "p1", "--seed", "5"]);
    ok(d, &["prepare", "raw.conll", "--out", "p2", "--seed", "5"]);
    for (file, n) in [("train.conll", 70), ("val.conll", 15), ("test.conll", 15)] {
        let text = fs::read_to_string(d.join("p1").join(file)).unwrap();
        assert_eq!(parse_conll(&text).unwrap().len(), n, "{file}");
    }
    for file in [
        "train.conll",
        "val.conll",
        "test.conll",
        "vocab.txt",
        "manifest.toml",
    ] {
        assert_eq!(
            fs::read(d.join("p1").join(file)).unwrap(),
            fs::read(d.join("p2").join(file)).unwrap(),
            "{file}"
        );
    }
    let manifest = fs::read_to_string(d.join("p1/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 5"), "{manifest}");
}

#[test]
fn prepare_reports_bad_line_and_bio_violations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut lines: Vec<String> = corpus_text(10).lines().map(String::from).collect();
    lines[16] = "fever\tQ-Disease".into();
    fs::write(d.join("bad.conll"), lines.join("\n")).unwrap();
    let err = fails(d, &["prepare", "bad.conll", "--out", "p"], 3);
    assert!(err.contains("line 17"), "{err}");

    let bio = format!("# id: bad7\nfever\tI-Disease\n\n{}", corpus_text(4));
    fs::write(d.join("bio.conll"), bio).unwrap();
    let err = fails(d, &["prepare", "bio.conll", "--out", "p"], 3);
    assert!(err.contains("bad7"), "{err}");
    ok(d, &["prepare", "bio.conll", "--out", "p", "--repair"]);
    let all: String = ["train.conll", "val.conll", "test.conll"]
        .iter()
        .map(|f| fs::read_to_string(d.join("p").join(f)).unwrap())
        .collect();
    assert!(!all.contains("I-Disease"), "{all}");
}

#[test]
fn train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny_run(d, "");
    let progress = ok(d, &["train", "--config", "run.toml"]);
    assert_eq!(
        progress.lines().filter(|l| l.starts_with("epoch ")).count(),
        3
    );
    let log = fs::read_to_string(d.join("runs/trainlog.csv")).unwrap();
    assert_eq!(log.lines().count(), 4);
    for f in ["final.ckpt", "best.ckpt"] {
        let bytes = fs::read(d.join("runs").join(f)).unwrap();
        assert!(matches!(
            decode_checkpoint(&bytes).unwrap(),
            AnyCheckpoint::F32(_)
        ));
    }

    let summary = ok(d, &["eval", "--config", "run.toml"]);
    assert!(summary.starts_with("span micro P/R/F1 (%) = "), "{summary}");
    let report = fs::read_to_string(d.join("runs/report.txt")).unwrap();
    assert!(report.contains("[spans]") && report.contains("[tokens]"));

    let oracle = ok(
        d,
        &[
            "eval",
            "prepared/test.conll",
            "--gold-as-pred",
            "--out",
            "o",
        ],
    );
    assert!(oracle.contains("100.0/100.0/100.0"), "{oracle}");

    let test = fs::read_to_string(d.join("prepared/test.conll")).unwrap();
    let blocks: String = test
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{}\n", l.split('\t').next().unwrap()))
        .collect();
    fs::write(d.join("input.txt"), &blocks).unwrap();
    let a = ok(d, &["predict", "input.txt", "--config", "run.toml"]);
    let b = ok(
        d,
        &["predict", "input.txt", "--checkpoint", "runs/best.ckpt"],
    );
    assert_eq!(a, b);
    let token_lines = |s: &str| s.lines().filter(|l| !l.trim().is_empty()).count();
    assert_eq!(token_lines(&a), token_lines(&blocks));
    let parsed = parse_conll(&a).unwrap();
    assert_eq!(parsed.len(), parse_conll(&test).unwrap().len());
    for r in parsed.records() {
        validate_bio(r.labels(), BioMode::Strict).unwrap();
    }
    ok(
        d,
        &[
            "predict",
            "input.txt",
            "--config",
            "run.toml",
            "--out",
            "pred.conll",
        ],
    );
    assert_eq!(fs::read_to_string(d.join("pred.conll")).unwrap(), a);
}

#[test]
fn eval_rejects_unknown_entity_types() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny_run(d, "");
    ok(d, &["train", "--config", "run.toml"]);
    fs::write(d.join("other.conll"), "aspirin\tB-Medication\n").unwrap();
    let err = fails(
        d,
        &["eval", "other.conll", "--checkpoint", "runs/best.ckpt"],
        3,
    );
    assert!(err.contains("Medication"), "{err}");
    fs::write(d.join("corrupt.ckpt"), b"medner-checkpoint\nnonsense").unwrap();
    fails(
        d,
        &[
            "eval",
            "prepared/test.conll",
            "--checkpoint",
            "corrupt.ckpt",
        ],
        3,
    );
}

#[test]
fn train_needs_prepared_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.toml"), TINY_CONFIG).unwrap();
    let err = fails(d, &["train", "--config", "run.toml"], 3);
    assert!(err.contains("medner prepare"), "{err}");
}

#[test]
fn train_precision_and_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny_run(d, "");
    ok(
        d,
        &[
            "train",
            "--config",
            "run.toml",
            "--precision",
            "64",
            "--out",
            "r64",
        ],
    );
    let bytes = fs::read(d.join("r64/final.ckpt")).unwrap();
    assert!(matches!(
        decode_checkpoint(&bytes).unwrap(),
        AnyCheckpoint::F64(_)
    ));
    fails(
        d,
        &["train", "--config", "run.toml", "--precision", "16"],
        2,
    );

    ok(d, &["train", "--config", "run.toml", "--out", "a"]);
    ok(
        d,
        &["train", "--config", "run.toml", "--out", "b", "--seed", "3"],
    );
    ok(
        d,
        &["train", "--config", "run.toml", "--out", "c", "--seed", "4"],
    );
    let log = |r: &str| fs::read(d.join(r).join("trainlog.csv")).unwrap();
    assert_eq!(log("a"), log("b"));
    assert_ne!(log("a"), log("c"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("raw.conll"), corpus_text(20)).unwrap();
    let run = |out: &str, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_medner"));
        cmd.args(["prepare", "raw.conll", "--out", out])
            .current_dir(d);
        match env {
            Some(v) => cmd.env("MEDNER_SEED", v),
            None => cmd.env_remove("MEDNER_SEED"),
        };
        assert!(cmd.status().unwrap().success());
        fs::read_to_string(d.join(out).join("manifest.toml")).unwrap()
    };
    assert!(run("e", Some("17")).contains("seed = 17"));
    assert!(run("z", None).contains("seed = 0"));
}

#[test]
fn divergence_exits_numerical_and_keeps_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tiny_run(d, "");
    let cfg = fs::read_to_string(d.join("run.toml"))
        .unwrap()
        .replace("learning_rate = 1e-2", "learning_rate = 1e300");
    fs::write(d.join("run.toml"), cfg).unwrap();
    fails(d, &["train", "--config", "run.toml"], 4);
    let bytes = fs::read(d.join("runs/final.ckpt")).unwrap();
    let AnyCheckpoint::F32(ckpt) = decode_checkpoint(&bytes).unwrap() else {
        panic!("expected a 32-bit checkpoint");
    };
    assert!(ckpt.params.named().iter().all(|(_, t)| t.all_finite()));
}

#[test]
fn compare_renders_and_sorts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("r.csv"), "# results\nA,50,40\nB,60,70\n\nC,55,55\n").unwrap();
    let plain = ok(d, &["compare", "r.csv"]);
    let names: Vec<&str> = plain.lines().skip(2).map(|l| &l[..1]).collect();
    assert_eq!(names, ["A", "B", "C"]);
    let sorted = ok(d, &["compare", "r.csv", "--sort"]);
    assert_eq!(sorted.lines().nth(2), Some("B | 60.0 | 70.0"));

    fs::write(d.join("empty.csv"), "").unwrap();
    fails(d, &["compare", "empty.csv"], 3);
    fs::write(d.join("bad.csv"), "A,50,40\nB,sixty,70\n").unwrap();
    let err = fails(d, &["compare", "bad.csv"], 3);
    assert!(err.contains("line 2"), "{err}");
    fails(d, &["compare", "missing.csv"], 3);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fails(d, &["frobnicate"], 2);
    fails(d, &["train"], 2);
    fs::write(d.join("bad.toml"), "[model]\nwidth = 3\n").unwrap();
    fails(d, &["train", "--config", "bad.toml"], 2);
}
