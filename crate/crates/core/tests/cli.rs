mod common;

use std::path::Path;
use std::process::{Command, Output};

use approx_mlp::model_file::export_model;

use common::{mnist_dir, trained};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_approx-mlp"))
        .args(args)
        .output()
        .expect("spawn approx-mlp")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn metrics_writes_thirty_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("metrics.csv");
    let o = cli(&["metrics", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 33);
    assert!(rows[32].starts_with("31,") && rows[32].contains(",3842,"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(cli(&[]).status.code(), Some(1));
    assert_eq!(cli(&["bogus"]).status.code(), Some(1));
    assert_eq!(cli(&["metrics"]).status.code(), Some(1));
    let o = cli(&["eval", "--model", "m", "--mnist-dir", "d", "--config", "32"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.amlp");
    assert_eq!(cli(&["info", "--model", s(&missing)]).status.code(), Some(2));

    let garbage = dir.path().join("garbage.amlp");
    std::fs::write(&garbage, b"not a model").unwrap();
    let o = cli(&["info", "--model", s(&garbage)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn info_and_eval_on_trained_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.amlp");
    export_model(&trained().quantized, &model).unwrap();

    let o = cli(&["info", "--model", s(&model)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("62-30-10") && text.contains("2344 bytes"));

    let mnist = mnist_dir();
    let o = cli(&["eval", "--model", s(&model), "--mnist-dir", s(&mnist), "--config", "31"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("/10000)") && text.contains("220 per image"));
}

#[test]
fn sweep_csv_is_reproducible_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.amlp");
    export_model(&trained().quantized, &model).unwrap();
    let mnist = mnist_dir();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (out, extra) in [(&a, None), (&b, Some("--sequential"))] {
        let mut args = vec!["sweep", "--model", s(&model), "--mnist-dir", s(&mnist), "--out", s(out), "--no-timestamp"];
        args.extend(extra);
        let o = cli(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains("unix time"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 33);
}

#[test]
fn train_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("quick.amlp");
    let mnist = mnist_dir();
    let o = cli(&["train", "--mnist-dir", s(&mnist), "--out", s(&model), "--epochs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::metadata(&model).unwrap().len(), 2344);
    assert!(cli(&["info", "--model", s(&model)]).status.success());
}
