//! End-to-end checks of the `hykge` binary: exit codes, produced files,
//! preset/config resolution, and the shipped-checkpoint golden value.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

use hykge::data::{self, Dataset};
use hykge::eval::{self, RankMode};
use hykge::models::init_model;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hykge"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn toy_data() -> PathBuf {
    fixtures().join("toy")
}

static DIR_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "hykge-cli-test-{}-{}",
        std::process::id(),
        DIR_COUNTER.fetch_add(1, Ordering::SeqCst)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn paramcount_matches_reference_values() {
    let out = bin()
        .args(["paramcount", "--model", "TE", "--dataset", "fb15k237"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("14778"), "{}", stdout_of(&out));

    let out = bin()
        .args(["paramcount", "--model", "3H-TH", "--dataset", "fb15k"])
        .output()
        .unwrap();
    assert!(stdout_of(&out).contains("17305"));

    let out = bin()
        .args([
            "paramcount",
            "--model",
            "3E-TE-3H-TH",
            "--entities",
            "14951",
            "--relations",
            "1345",
            "--dim",
            "1",
        ])
        .output()
        .unwrap();
    assert!(stdout_of(&out).contains("19659"));
}

#[test]
fn unknown_model_kind_is_usage_error() {
    let out = bin()
        .args(["paramcount", "--model", "4D", "--dataset", "fb15k"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown model kind"));
}

#[test]
fn missing_dataset_directory_is_io_error() {
    let out = bin()
        .args(["analyze", "--data-dir", "/nonexistent/hykge-data"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("error"));
}

#[test]
fn data_dir_falls_back_to_env_var() {
    let out = bin()
        .args(["analyze"])
        .env("HYKGE_DATA_DIR", toy_data())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("hierarchy"));
}

#[test]
fn help_lists_flags_and_presets() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("wn18rr-32-3hth"));
    assert!(text.contains("fb15k-32-3ete3hth"));
    let out = bin().args(["train", "--help"]).output().unwrap();
    let text = stdout_of(&out);
    for flag in [
        "--model",
        "--dim",
        "--lr",
        "--optimizer",
        "--batch-size",
        "--negatives",
        "--max-epochs",
        "--validate-every",
        "--patience",
        "--seed",
        "--reciprocal",
        "--preset",
        "--config",
        "--threads",
    ] {
        assert!(text.contains(flag), "train --help missing {flag}");
    }
}

#[test]
fn zero_epoch_training_checkpoints_the_initial_state() {
    let out_dir = temp_dir();
    let out = bin()
        .args([
            "train",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--model",
            "3H-TH",
            "--dim",
            "8",
            "--max-epochs",
            "0",
            "--seed",
            "11",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    for file in [
        "best.ckpt",
        "best.ckpt.bin",
        "final.ckpt",
        "final.ckpt.bin",
        "train.log",
    ] {
        assert!(out_dir.join(file).is_file(), "missing {file}");
    }
    assert_eq!(fs::read_to_string(out_dir.join("train.log")).unwrap(), "");

    let ckpt = data::load_checkpoint(&out_dir.join("final.ckpt")).unwrap();
    let dataset = Dataset::load_dir(&toy_data()).unwrap();
    let fresh = init_model(
        hykge::models::ModelKind::QuatTransH,
        dataset.n_entities(),
        dataset.n_relations(),
        8,
        11,
    )
    .unwrap();
    assert_eq!(ckpt.state, fresh);
    fs::remove_dir_all(out_dir).ok();
}

#[test]
fn training_is_reproducible_per_seed() {
    let run = |dir: &Path| {
        let out = bin()
            .args([
                "train",
                "--data-dir",
                toy_data().to_str().unwrap(),
                "--model",
                "2E-TE",
                "--dim",
                "4",
                "--max-epochs",
                "3",
                "--validate-every",
                "2",
                "--seed",
                "21",
                "--out",
                dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    };
    let (a, b) = (temp_dir(), temp_dir());
    run(&a);
    run(&b);
    let bytes_a = fs::read(a.join("final.ckpt.bin")).unwrap();
    let bytes_b = fs::read(b.join("final.ckpt.bin")).unwrap();
    assert_eq!(bytes_a, bytes_b, "same seed must give bitwise-equal states");
    assert_eq!(
        fs::read_to_string(a.join("train.log")).unwrap(),
        fs::read_to_string(b.join("train.log")).unwrap()
    );
    fs::remove_dir_all(a).ok();
    fs::remove_dir_all(b).ok();
}

#[test]
fn preset_and_config_file_resolve_with_flag_precedence() {
    let dir = temp_dir();
    // Config file sets TE at dim 4; the explicit flag bumps dim to 8.
    let config = dir.join("run.cfg");
    fs::write(
        &config,
        "model = TE\ndim = 4\nmax_epochs = 1\nvalidate_every = 0\n",
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = bin()
        .args([
            "train",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--dim",
            "8",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let manifest = fs::read_to_string(out_dir.join("final.ckpt")).unwrap();
    assert!(manifest.contains("kind = TE"));
    assert!(manifest.contains("dim = 8"));

    // A preset fills everything; training one epoch on the toy data works.
    let out_dir2 = dir.join("out2");
    let out = bin()
        .args([
            "train",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--preset",
            "wn18rr-32-3hth",
            "--max-epochs",
            "1",
            "--validate-every",
            "0",
            "--out",
            out_dir2.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let manifest = fs::read_to_string(out_dir2.join("final.ckpt")).unwrap();
    assert!(manifest.contains("kind = 3H-TH"));
    assert!(manifest.contains("dim = 32"));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn evaluate_shipped_checkpoint_reproduces_golden_mrr() {
    // Library-level golden check: bit-exact against the stored value.
    let dataset = Dataset::load_dir(&toy_data()).unwrap();
    let ckpt = data::load_checkpoint(&fixtures().join("toy.ckpt")).unwrap();
    ckpt.ensure_vocab(&dataset).unwrap();
    let metrics = eval::evaluate(&ckpt.state, &dataset, &dataset.test, RankMode::Filtered).unwrap();
    let golden = fs::read_to_string(fixtures().join("toy.golden")).unwrap();
    let bits_line = golden
        .lines()
        .find(|l| l.starts_with("mrr_bits"))
        .expect("golden file has mrr_bits");
    let bits = u64::from_str_radix(bits_line.split('=').nth(1).unwrap().trim(), 16).unwrap();
    assert_eq!(
        metrics.mrr.to_bits(),
        bits,
        "golden MRR drifted: got {}, stored {}",
        metrics.mrr,
        f64::from_bits(bits)
    );

    // CLI-level: evaluation prints the same number and writes CSV copies.
    let out_dir = temp_dir();
    let out = bin()
        .args([
            "evaluate",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--checkpoint",
            fixtures().join("toy.ckpt").to_str().unwrap(),
            "--slice",
            "per-relation",
            "--slice",
            "categories",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains(&format!("{:.4}", metrics.mrr)), "{text}");
    assert!(text.contains("per-relation"));
    assert!(out_dir.join("global.csv").is_file());
    assert!(out_dir.join("per-relation.csv").is_file());
    fs::remove_dir_all(out_dir).ok();
}

#[test]
fn evaluate_rejects_unknown_slice() {
    let out = bin()
        .args([
            "evaluate",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--checkpoint",
            fixtures().join("toy.ckpt").to_str().unwrap(),
            "--slice",
            "bogus",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown slice"));
}

#[test]
fn evaluate_rejects_vocab_mismatch_with_exit_3() {
    // A different dataset with the same file layout.
    let dir = temp_dir();
    let other = dir.join("other");
    fs::create_dir_all(&other).unwrap();
    fs::write(other.join("train.txt"), "x\tr\ty\ny\tr\tz\n").unwrap();
    fs::write(other.join("valid.txt"), "x\tr\tz\n").unwrap();
    fs::write(other.join("test.txt"), "z\tr\tx\n").unwrap();
    let out = bin()
        .args([
            "evaluate",
            "--data-dir",
            other.to_str().unwrap(),
            "--checkpoint",
            fixtures().join("toy.ckpt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("vocabulary mismatch"));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn gradcheck_subcommand_passes_for_one_kind() {
    let out = bin()
        .args([
            "gradcheck",
            "--model",
            "3H-TH",
            "--draws",
            "3",
            "--dim",
            "8",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("ok"), "{text}");
    assert!(text.contains("3H-TH"));
}

#[test]
fn analyze_writes_csv_reports() {
    let out_dir = temp_dir();
    let out = bin()
        .args([
            "analyze",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    for file in [
        "khs.csv",
        "multiplicity.csv",
        "frequency.csv",
        "categories.csv",
        "patterns.csv",
        "pattern_slices.csv",
    ] {
        assert!(out_dir.join(file).is_file(), "missing {file}");
    }
    // The toy KG's next/prev pair must be detected as an inversion.
    let text = stdout_of(&out);
    assert!(text.contains("with inversion partner: 2"), "{text}");
    fs::remove_dir_all(out_dir).ok();
}

#[test]
fn reciprocal_training_and_evaluation_roundtrip() {
    let out_dir = temp_dir();
    let out = bin()
        .args([
            "train",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--model",
            "TE",
            "--dim",
            "4",
            "--max-epochs",
            "2",
            "--validate-every",
            "0",
            "--reciprocal",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let out = bin()
        .args([
            "evaluate",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--checkpoint",
            out_dir.join("best.ckpt").to_str().unwrap(),
            "--reciprocal",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    // Without the flag the vocabulary hash differs: consistency error.
    let out = bin()
        .args([
            "evaluate",
            "--data-dir",
            toy_data().to_str().unwrap(),
            "--checkpoint",
            out_dir.join("best.ckpt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    fs::remove_dir_all(out_dir).ok();
}
