use std::fs;
use std::path::Path;
use std::process::Command;

fn mixaug(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mixaug"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    mixaug(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "synth",
        "--classes",
        "3",
        "--per-class",
        "8",
        "--size",
        "16",
        "--seed",
        "1",
        "--out",
        p(dir),
    ];
    args.extend_from_slice(extra);
    assert_eq!(code(&args), 0);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["synth", "--classes", "1", "--out", out]), 2);
    assert_eq!(
        code(&[
            "synth",
            "--imbalance",
            "raf",
            "--classes",
            "3",
            "--out",
            out
        ]),
        2
    );
    assert_eq!(
        code(&["train", "--data", out, "--out", out, "--mode", "mixup"]),
        2
    );
    assert_eq!(
        code(&["train", "--data", out, "--out", out, "--mode", "sideways"]),
        2
    );
    assert_eq!(
        code(&["train", "--data", out, "--out", out, "--seeds", ""]),
        2
    );
    assert_eq!(code(&["augment-preview", "--data", out, "--out", out]), 2);
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&["train", "--data", p(&d.join("missing")), "--out", p(d)]),
        1
    );
    assert_eq!(code(&["report", p(&d.join("missing.csv"))]), 1);

    // a manifest naming an image that does not exist reports the record
    synth(d, &[]);
    fs::remove_file(d.join("images/train/00003.pgm")).unwrap();
    let o = mixaug(&[
        "train",
        "--data",
        p(d),
        "--out",
        p(&d.join("o")),
        "--epochs",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("00003.pgm"));
}

#[test]
fn train_eval_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, &[]);
    let out = d.join("runs");
    let args = [
        "train",
        "--data",
        p(d),
        "--out",
        p(&out),
        "--mode",
        "mixaugment",
        "--alpha",
        "8",
        "--epochs",
        "2",
        "--seeds",
        "1,2",
        "--batch-size",
        "8",
    ];
    let o = mixaug(&args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("underfitting"));
    let cell = out.join("mixaugment-a8-d0-f0");
    for seed in ["seed-1", "seed-2"] {
        for f in ["record.csv", "report.csv", "report.txt", "model.ckpt"] {
            assert!(cell.join(seed).join(f).is_file(), "{seed}/{f}");
        }
    }
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 2);
    assert!(agg.lines().nth(1).unwrap().ends_with(",1"));

    let ckpt = cell.join("seed-1/model.ckpt");
    let o = mixaug(&[
        "eval",
        "--checkpoint",
        p(&ckpt),
        "--data",
        p(&d.join("eval.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8_lossy(&o.stdout).to_string();
    for name in [
        "class0",
        "class2",
        "Precision",
        "Recall",
        "correct",
        "wrong",
        "median",
    ] {
        assert!(table.contains(name), "missing {name}");
    }

    // architecture mismatch
    let other = d.join("other");
    assert_eq!(
        code(&[
            "synth",
            "--classes",
            "4",
            "--per-class",
            "4",
            "--size",
            "16",
            "--out",
            p(&other)
        ]),
        0
    );
    assert_eq!(
        code(&[
            "eval",
            "--checkpoint",
            p(&ckpt),
            "--data",
            p(&other.join("eval.csv"))
        ]),
        1
    );

    let o = mixaug(&["report", p(&out.join("aggregate.csv"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("mode "));
}

#[test]
fn bare_flags_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, &[]);
    let cfg = d.join("exp.json");
    fs::write(
        &cfg,
        r#"{"mode": "mixup", "alpha": 0.2, "max_epochs": 1, "batch_size": 8, "seeds": [3]}"#,
    )
    .unwrap();
    let out = d.join("runs");
    assert_eq!(
        code(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(d),
            "--out",
            p(&out),
            "--dropout",
            "--flip-prob"
        ]),
        0
    );
    assert!(out.join("mixup-a0.2-d0.5-f0.5/seed-3/model.ckpt").is_file());

    fs::write(&cfg, r#"{"mode": "mixup", "learning_rat": 0.1}"#).unwrap();
    assert_eq!(
        code(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(d),
            "--out",
            p(&out)
        ]),
        2
    );
}

#[test]
fn synth_is_deterministic_and_imbalanced_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        synth(d, &["--with-landmarks"]);
    }
    for f in [
        "train.csv",
        "eval.csv",
        "images/train/00000.pgm",
        "images/eval/00005.pgm",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(fs::read_to_string(a.join("train.csv"))
        .unwrap()
        .contains("lx1"));

    let c = dir.path().join("c");
    let args = [
        "synth",
        "--classes",
        "7",
        "--per-class",
        "20",
        "--size",
        "16",
        "--imbalance",
        "raf",
        "--out",
        p(&c),
    ];
    assert_eq!(code(&args), 0);
    let text = fs::read_to_string(c.join("train.csv")).unwrap();
    let count = |k: usize| {
        text.lines()
            .filter(|l| l.ends_with(&format!(",{k}")))
            .count()
    };
    assert!(
        count(3) > 5 * count(1),
        "happiness {} vs fear {}",
        count(3),
        count(1)
    );
}

#[test]
fn augment_preview_writes_mixes_with_soft_labels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, &[]);
    let manifest = d.join("train.csv");
    let out = d.join("preview");
    let args = [
        "augment-preview",
        "--data",
        p(&manifest),
        "--lambda",
        "0.6",
        "--count",
        "4",
        "--seed",
        "2",
        "--out",
        p(&out),
    ];
    assert_eq!(code(&args), 0);
    for n in 0..4 {
        let side = fs::read_to_string(out.join(format!("mix-{n:03}.txt"))).unwrap();
        assert!(side.starts_with("lambda=0.6\n"));
        let total: f64 = side
            .lines()
            .skip(3)
            .map(|l| l.split('=').nth(1).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "{side}");
        assert!(out.join(format!("mix-{n:03}.pgm")).is_file());
    }

    // with lambda 1 every mix is byte-identical to its first source image
    let one = d.join("one");
    let args = [
        "augment-preview",
        "--data",
        p(&manifest),
        "--lambda",
        "1",
        "--count",
        "3",
        "--out",
        p(&one),
    ];
    assert_eq!(code(&args), 0);
    for n in 0..3 {
        let side = fs::read_to_string(one.join(format!("mix-{n:03}.txt"))).unwrap();
        let src: usize = side
            .lines()
            .nth(1)
            .unwrap()
            .trim_start_matches("source_i=")
            .parse()
            .unwrap();
        assert_eq!(
            fs::read(one.join(format!("mix-{n:03}.pgm"))).unwrap(),
            fs::read(d.join(format!("images/train/{src:05}.pgm"))).unwrap()
        );
    }
}

#[test]
fn train_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, &[]);
    let run = |name: &str| {
        let out = d.join(name);
        let args = [
            "train",
            "--data",
            p(d),
            "--out",
            p(&out),
            "--mode",
            "mixaugment",
            "--alpha",
            "0.1",
            "--dropout",
            "--flip-prob",
            "--epochs",
            "2",
            "--batch-size",
            "8",
            "--seed",
            "5",
        ];
        assert_eq!(code(&args), 0);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in [
        "aggregate.csv",
        "mixaugment-a0.1-d0.5-f0.5/summary.csv",
        "mixaugment-a0.1-d0.5-f0.5/seed-5/record.csv",
        "mixaugment-a0.1-d0.5-f0.5/seed-5/model.ckpt",
        "mixaugment-a0.1-d0.5-f0.5/seed-5/report.txt",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
