use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use comply::hasher::parse_dump_line;
use comply::model;

fn comply(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_comply"))
        .current_dir(dir)
        .env_remove("COMPLY_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.txt"), "1 2 3 4 5 6 7 8 9\n9 8 7 6 5 4 3 2 1\n").unwrap();
    let out = comply(
        dir.path(),
        &["build-vocab", "--corpus", "corpus.txt", "--out", "vocab.tsv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn train(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--corpus",
        "corpus.txt",
        "--vocab",
        "vocab.tsv",
        "--K",
        "4",
        "--batch-size",
        "2",
        "--optimizer",
        "sgd",
        "--lr",
        "1e-3",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    comply(dir, &args)
}

#[test]
fn build_vocab_reports_size_and_writes_manifest() {
    let dir = toy_dir();
    let out = comply(
        dir.path(),
        &[
            "build-vocab",
            "--corpus",
            "corpus.txt",
            "--out",
            "v2.tsv",
            "--max-size",
            "5",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "Nvoc=5 tokens=10");
    let manifest = fs::read_to_string(dir.path().join("v2.tsv.manifest")).unwrap();
    assert!(manifest.starts_with("subcommand=build-vocab\n"));
    assert!(manifest.contains("max_size=5\n"));
}

#[test]
fn build_vocab_errors_exit_two() {
    let dir = toy_dir();
    let missing = comply(dir.path(), &["build-vocab", "--corpus", "nope.txt", "--out", "v.tsv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.txt"));
    let zero = comply(
        dir.path(),
        &[
            "build-vocab",
            "--corpus",
            "corpus.txt",
            "--out",
            "v.tsv",
            "--max-size",
            "0",
        ],
    );
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn zero_epochs_checkpoint_equals_init() {
    let dir = toy_dir();
    assert!(train(dir.path(), "m.cply", &["--epochs", "0", "--seed", "3"])
        .status
        .success());
    let (w, meta) = model::load_model(dir.path().join("m.cply")).unwrap();
    let init: comply::ComplexWeights = model::init_weights(4, 9, comply::Mode::Complex, 3).unwrap();
    assert_eq!(w, init);
    assert_eq!(meta.trained_epochs, 0);
}

#[test]
fn train_writes_trace_and_manifest() {
    let dir = toy_dir();
    assert!(train(dir.path(), "m.cply", &["--epochs", "3"]).status.success());
    let trace = fs::read_to_string(dir.path().join("m.cply.trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);
    assert!(trace.starts_with("epoch,mean_energy,distinct_winners,seconds\n"));
    let manifest = fs::read_to_string(dir.path().join("m.cply.manifest")).unwrap();
    for key in [
        "subcommand=train",
        "mode=complex",
        "K=4",
        "seed=0",
        "optimizer=sgd",
        "epochs=3",
    ] {
        assert!(manifest.lines().any(|l| l == key), "missing {key} in\n{manifest}");
    }
}

#[test]
fn flyvec_without_window_is_a_usage_error() {
    let dir = toy_dir();
    let out = train(dir.path(), "f.cply", &["--mode", "flyvec"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(train(
        dir.path(),
        "f.cply",
        &["--mode", "flyvec", "--window", "3", "--epochs", "2"]
    )
    .status
    .success());
}

#[test]
fn numerical_abort_exits_three_and_saves_last_good() {
    let dir = toy_dir();
    let out = comply(
        dir.path(),
        &[
            "train",
            "--corpus",
            "corpus.txt",
            "--vocab",
            "vocab.tsv",
            "--K",
            "4",
            "--optimizer",
            "sgd",
            "--lr",
            "1e300",
            "--out",
            "n.cply",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n.cply.last-good"));
    let (w, _) = model::load_model(dir.path().join("n.cply.last-good")).unwrap();
    assert!(w.is_finite());
}

#[test]
fn resume_continues_the_schedule() {
    let dir = toy_dir();
    assert!(train(dir.path(), "full.cply", &["--epochs", "4"]).status.success());
    assert!(train(dir.path(), "half.cply", &["--epochs", "4", "--run-epochs", "2"])
        .status
        .success());
    assert!(
        train(dir.path(), "rest.cply", &["--epochs", "4", "--resume", "half.cply"])
            .status
            .success()
    );
    let full = fs::read(dir.path().join("full.cply")).unwrap();
    let rest = fs::read(dir.path().join("rest.cply")).unwrap();
    assert_eq!(full, rest);

    let wrong_mode = train(
        dir.path(),
        "x.cply",
        &["--epochs", "4", "--resume", "half.cply", "--mode", "flyvec"],
    );
    assert_eq!(wrong_mode.status.code(), Some(2));
}

#[test]
fn hash_emits_one_line_per_sentence() {
    let dir = toy_dir();
    assert!(train(dir.path(), "m.cply", &["--epochs", "50"]).status.success());
    fs::write(dir.path().join("in.txt"), "1 2 3\n3 2 1\n1 2 3\n").unwrap();
    let out = comply(
        dir.path(),
        &[
            "hash",
            "--model",
            "m.cply",
            "--vocab",
            "vocab.tsv",
            "--input",
            "in.txt",
            "--k",
            "2",
            "--out",
            "h.txt",
        ],
    );
    assert!(out.status.success());
    let dump = fs::read_to_string(dir.path().join("h.txt")).unwrap();
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines.len(), 3);
    for (i, l) in lines.iter().enumerate() {
        let (idx, code) = parse_dump_line(l, 4).unwrap();
        assert_eq!(idx, i);
        assert_eq!(code.popcount(), 2);
    }
    assert_eq!(lines[0].split('\t').nth(2), lines[2].split('\t').nth(2));
    assert!(dir.path().join("h.txt.manifest").exists());
}

#[test]
fn hash_rejects_bad_k_and_wrong_variant() {
    let dir = toy_dir();
    assert!(train(dir.path(), "m.cply", &["--epochs", "1"]).status.success());
    fs::write(dir.path().join("in.txt"), "1 2 3\n").unwrap();
    let base = ["hash", "--model", "m.cply", "--vocab", "vocab.tsv", "--input", "in.txt"];
    let too_long = comply(dir.path(), &[&base[..], &["--k", "5"]].concat());
    assert_eq!(too_long.status.code(), Some(2));
    let flyvec = comply(dir.path(), &[&base[..], &["--k", "1", "--variant", "flyvec"]].concat());
    assert_eq!(flyvec.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&flyvec.stderr).contains("mode mismatch"));
}

#[test]
fn eval_single_k_and_sweep() {
    let dir = toy_dir();
    assert!(train(dir.path(), "m.cply", &["--epochs", "2000"]).status.success());
    let rows: Vec<String> = (0..20)
        .map(|i| {
            let gold = if i % 2 == 0 { 5 } else { 0 };
            let b = if i % 2 == 0 {
                "1 2 3 4 5 6 7 8 9"
            } else {
                "9 8 7 6 5 4 3 2 1"
            };
            format!("1 2 3 4 5 6 7 8 9\t{b}\t{gold}")
        })
        .collect();
    fs::write(dir.path().join("sts.tsv"), rows.join("\n")).unwrap();
    let base = [
        "eval",
        "--model",
        "m.cply",
        "--vocab",
        "vocab.tsv",
        "--task",
        "sts",
        "--data",
        "sts.tsv",
    ];

    let single = comply(dir.path(), &[&base[..], &["--k", "2"]].concat());
    assert!(single.status.success(), "{}", String::from_utf8_lossy(&single.stderr));
    assert!(String::from_utf8_lossy(&single.stdout).starts_with("spearman=1 "));

    let sweep = comply(
        dir.path(),
        &[&base[..], &["--sweep", "2,3", "--folds", "2", "--out", "sweep.csv"]].concat(),
    );
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);

    let too_many = comply(dir.path(), &[&base[..], &["--sweep", "2,3", "--folds", "21"]].concat());
    assert_eq!(too_many.status.code(), Some(2));
    let neither = comply(dir.path(), &base);
    assert_eq!(neither.status.code(), Some(2));
}

#[test]
fn eval_checks_the_vocabulary() {
    let dir = toy_dir();
    assert!(train(dir.path(), "m.cply", &["--epochs", "1"]).status.success());
    fs::write(dir.path().join("other.txt"), "a b c\n").unwrap();
    assert!(comply(
        dir.path(),
        &["build-vocab", "--corpus", "other.txt", "--out", "other.tsv"]
    )
    .status
    .success());
    fs::write(dir.path().join("sts.tsv"), "a\tb\t1\na\tc\t0\n").unwrap();
    let out = comply(
        dir.path(),
        &[
            "eval",
            "--model",
            "m.cply",
            "--vocab",
            "other.tsv",
            "--task",
            "sts",
            "--data",
            "sts.tsv",
            "--k",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn toy_writes_dumps_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = comply(dir.path(), &["toy", "--out-dir", "toy"]);
    assert_eq!(out.status.code(), Some(0));
    let toy = dir.path().join("toy");
    for f in [
        "init_weights.csv",
        "final_weights.csv",
        "report.txt",
        "manifest.txt",
        "model.cply",
        "vocab.tsv",
    ] {
        assert!(toy.join(f).exists(), "{f}");
    }
    let init = fs::read_to_string(toy.join("init_weights.csv")).unwrap();
    assert!(init.starts_with("neuron,token,re,im\n"));
    assert_eq!(init.lines().count(), 1 + 4 * 10);
    assert!(fs::read_to_string(toy.join("report.txt"))
        .unwrap()
        .contains("overall: PASS"));
}

#[test]
fn toy_check_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    // no training at all: nothing is imprinted
    let out = comply(dir.path(), &["toy", "--out-dir", "toy", "--epochs", "0"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(fs::read_to_string(dir.path().join("toy/report.txt"))
        .unwrap()
        .contains("FAIL"));
}

#[test]
fn threads_flag_and_env_do_not_change_results() {
    let dir = toy_dir();
    assert!(train(dir.path(), "a.cply", &["--epochs", "20", "--threads", "1"])
        .status
        .success());
    let out = Command::new(env!("CARGO_BIN_EXE_comply"))
        .current_dir(dir.path())
        .env("COMPLY_THREADS", "3")
        .args([
            "train",
            "--corpus",
            "corpus.txt",
            "--vocab",
            "vocab.tsv",
            "--K",
            "4",
            "--batch-size",
            "2",
            "--optimizer",
            "sgd",
            "--lr",
            "1e-3",
            "--epochs",
            "20",
            "--out",
            "b.cply",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest = fs::read_to_string(dir.path().join("b.cply.manifest")).unwrap();
    assert!(manifest.contains("threads=3\n"));
    assert_eq!(
        fs::read(dir.path().join("a.cply")).unwrap(),
        fs::read(dir.path().join("b.cply")).unwrap()
    );
}
