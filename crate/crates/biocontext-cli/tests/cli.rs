//! End-to-end checks of the installed binary: every subcommand, artifact
//! layout, and the replay guarantee of the persisted run configuration.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biocontext"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawning the binary");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
    String::from_utf8(output.stdout).expect("stdout is utf-8")
}

fn run_err(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawning the binary");
    assert!(!output.status.success(), "command unexpectedly succeeded");
    output
}

fn prepare_synth(dir: &Path) {
    run_ok(bin().args([
        "prepare",
        "--synth",
        "12",
        "--dev",
        "2",
        "--seed",
        "7",
        "--out",
    ])
    .arg(dir));
}

/// Flags that make the optimizer converge on the tiny synthetic corpus.
fn cv_args(corpus: &Path, out: &Path, function: &str) -> Command {
    let mut cmd = bin();
    cmd.arg("crossvalidate")
        .arg("--corpus")
        .arg(corpus)
        .arg("--out")
        .arg(out)
        .args([
            "--function",
            function,
            "--sentinel-word",
            "ctxpos",
            "--fold-size",
            "5",
            "--learning-rate",
            "0.05",
            "--max-epochs",
            "30",
            "--patience",
            "6",
            "--seed",
            "3",
        ]);
    cmd
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).expect("reading json artifact");
    serde_json::from_str(&text).expect("parsing json artifact")
}

#[test]
fn prepare_then_stats_round_trips() {
    let tmp = tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    prepare_synth(&corpus);

    let stats_dir = tmp.path().join("stats");
    let stdout = run_ok(bin()
        .args(["stats", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&stats_dir));
    assert!(stdout.contains("cross-validation"));
    assert!(stdout.contains("candidate pairs:"));
    assert!(stats_dir.join("corpus_stats.txt").exists());
    let json = read_json(&stats_dir.join("corpus_stats.json"));
    assert_eq!(json.pointer("/summary/total/documents"), Some(&Value::from(12)));
}

#[test]
fn stats_fails_on_a_missing_corpus() {
    let tmp = tempdir().unwrap();
    let output = run_err(bin().args(["stats", "--corpus"]).arg(tmp.path().join("nowhere")));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("manifest"), "stderr: {stderr}");
}

#[test]
fn prepare_normalizes_but_refuses_to_overwrite_the_source() {
    let tmp = tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    prepare_synth(&corpus);

    let copy = tmp.path().join("copy");
    run_ok(bin()
        .args(["prepare", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&copy));
    run_ok(bin().args(["stats", "--corpus"]).arg(&copy));

    let output = run_err(bin()
        .args(["prepare", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&corpus));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("refusing"), "stderr: {stderr}");
}

#[test]
fn crossvalidate_recovers_the_planted_signal_and_replays() {
    let tmp = tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    prepare_synth(&corpus);

    let out = tmp.path().join("cv");
    run_ok(&mut cv_args(&corpus, &out, "majority"));
    for artifact in [
        "run_config.toml",
        "cv_report.txt",
        "cv_report.json",
        "fold_0.model.json",
        "fold_1.model.json",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let report = read_json(&out.join("cv_report.json"));
    let pooled_f1 = report.pointer("/pooled/f1").and_then(Value::as_f64).unwrap();
    assert!(pooled_f1 >= 0.9, "pooled F1 {pooled_f1}");

    // Same seed, fresh output directory: the report body must not change.
    let replay = tmp.path().join("cv_replay");
    run_ok(bin()
        .args(["crossvalidate", "--config"])
        .arg(out.join("run_config.toml"))
        .arg("--out")
        .arg(&replay));
    let first = std::fs::read(out.join("cv_report.json")).unwrap();
    let second = std::fs::read(replay.join("cv_report.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn sweep_writes_one_record_per_budget() {
    let tmp = tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    prepare_synth(&corpus);

    let out = tmp.path().join("sweep");
    run_ok(bin()
        .args(["sweep", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&out)
        .args([
            "--function",
            "average",
            "--sentinel-word",
            "ctxpos",
            "--fold-size",
            "5",
            "--learning-rate",
            "0.05",
            "--max-epochs",
            "30",
            "--patience",
            "6",
            "--ks",
            "3-5",
        ]));
    let json = read_json(&out.join("k_sweep.json"));
    let records = json["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(
        records.iter().map(|r| r["k"].as_u64().unwrap()).collect::<Vec<_>>(),
        vec![3, 4, 5],
    );
    for record in records {
        for field in ["precision", "recall", "f1"] {
            assert!(record[field].is_number(), "missing {field}");
        }
    }
}

#[test]
fn sweep_rejects_budgets_outside_the_supported_range() {
    let tmp = tempdir().unwrap();
    let output = run_err(bin()
        .args(["sweep", "--corpus"])
        .arg(tmp.path().join("unused"))
        .arg("--out")
        .arg(tmp.path().join("out"))
        .args(["--ks", "8-11"]));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("1-10"), "stderr: {stderr}");
}

#[test]
fn report_ranks_runs_and_attaches_p_values() {
    let tmp = tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    prepare_synth(&corpus);

    let majority = tmp.path().join("cv_majority");
    let one_hit = tmp.path().join("cv_onehit");
    run_ok(&mut cv_args(&corpus, &majority, "majority"));
    run_ok(&mut cv_args(&corpus, &one_hit, "one_hit"));

    let report_dir = tmp.path().join("comparison");
    let stdout = run_ok(bin()
        .arg("report")
        .arg(&majority)
        .arg(&one_hit)
        .arg("--out")
        .arg(&report_dir)
        .args(["--resamples", "500"]));
    assert!(stdout.contains("p vs best"));
    assert!(stdout.contains("majority k=3"));
    assert!(stdout.contains("one_hit k=3"));
    assert!(report_dir.join("comparison.txt").exists());
}

#[test]
fn flags_override_the_config_file_in_the_persisted_run() {
    let tmp = tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    prepare_synth(&corpus);

    let file = tmp.path().join("base.toml");
    std::fs::write(
        &file,
        format!(
            "corpus = {:?}\nfunction = \"average\"\nk = 4\nseed = 9\n\
             sentinel_word = \"ctxpos\"\nfold_size = 5\nlearning_rate = 0.05\n\
             max_epochs = 30\npatience = 6\n",
            corpus.display(),
        ),
    )
    .unwrap();

    let out = tmp.path().join("train");
    run_ok(bin()
        .args(["train", "--config"])
        .arg(&file)
        .arg("--out")
        .arg(&out)
        .args(["--k", "2"]));
    assert!(out.join("model.json").exists());
    assert!(out.join("history.txt").exists());

    let persisted = std::fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(persisted.contains("function = \"average\""));
    assert!(persisted.contains("k = 2"), "flag must beat the file");
    assert!(persisted.contains("seed = 9"), "file must beat the default");
}
