mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::random_bundle;
use layersep::bundle::LabelRecord;
use layersep::Split;

fn layersep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layersep")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_spec(dir: &Path, level: &str) -> String {
    let spec = format!(
        r#"{{
  "level": "{level}",
  "dim": 6,
  "separations": [0.5, 4.0, 1.0],
  "lemmas": [
    {{"lemma": "give_up", "class": "phrasal", "split": "train", "count": 20}},
    {{"lemma": "look_at", "class": "prepositional", "split": "train", "count": 20}},
    {{"lemma": "take_up", "class": "phrasal", "split": "test", "count": 8}},
    {{"lemma": "deal_with", "class": "prepositional", "split": "test", "count": 8}}
  ]
}}"#
    );
    let path = dir.join(format!("{level}.json"));
    std::fs::write(&path, spec).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn synth_validate_analyze_gdv() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let bundle = root.join("tok");
    let spec = write_spec(root, "token");
    let out = layersep(&["synth", "--spec", &spec, "--seed", "3", "--out", bundle.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = layersep(&["validate", "--bundle", bundle.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok"));

    let out = layersep(&["gdv", "--bundle", bundle.to_str().unwrap(), "--layer", "1"]);
    assert_eq!(code(&out), 0);
    let breakdown: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(breakdown["gdv"].as_f64().unwrap() < -0.1);

    let report_dir = root.join("out");
    let out = layersep(&[
        "analyze",
        "--token-bundle",
        bundle.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
        "--figures",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["report.json", "report.csv", "accuracy.svg", "gdv.svg", "correlation.svg"] {
        assert!(report_dir.join(name).is_file(), "{name} missing");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("token lr vs gdv"));

    let csv_only = root.join("csv");
    let out = layersep(&[
        "analyze",
        "--token-bundle",
        bundle.to_str().unwrap(),
        "--out",
        csv_only.to_str().unwrap(),
        "--format",
        "csv",
        "--p-method",
        "mc",
        "--permutations",
        "999",
    ]);
    assert_eq!(code(&out), 0);
    assert!(csv_only.join("report.csv").is_file());
    assert!(!csv_only.join("report.json").exists());
}

#[test]
fn validation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    random_bundle(2, 3, 8, 1).write(&dir).unwrap();
    std::fs::write(dir.join("layer_00.f32"), [0u8; 10]).unwrap();
    let out = layersep(&["validate", "--bundle", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("layer_00.f32"));

    let out = layersep(&["gdv", "--bundle", dir.to_str().unwrap(), "--layer", "0"]);
    assert_eq!(code(&out), 2);

    let ok = tmp.path().join("ok");
    random_bundle(2, 3, 8, 1).write(&ok).unwrap();
    let out = layersep(&["gdv", "--bundle", ok.to_str().unwrap(), "--layer", "7"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn degenerate_data_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    let mut bundle = random_bundle(1, 3, 8, 1);
    for (i, label) in bundle.labels.iter_mut().enumerate() {
        *label = LabelRecord::new(label.class, if i % 2 == 0 { "give_up" } else { "look_at" }, Split::Train);
    }
    bundle.write(&dir).unwrap();
    let out = layersep(&[
        "analyze",
        "--token-bundle",
        dir.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn io_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    random_bundle(1, 3, 8, 1).write(&dir).unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = layersep(&[
        "analyze",
        "--token-bundle",
        dir.to_str().unwrap(),
        "--out",
        blocker.join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));

    let out = layersep(&["synth", "--spec", tmp.path().join("absent.json").to_str().unwrap(), "--out", "x"]);
    assert_eq!(code(&out), 4);
}
