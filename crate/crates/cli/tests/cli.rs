use std::path::Path;
use std::process::{Command, Output};

fn fairglvq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairglvq")).args(args).output().unwrap()
}

fn small_config(dir: &Path, extra_method: &str) -> String {
    let path = dir.join("xor.json");
    let text = format!(
        r#"{{
            "name": "xor",
            "dataset": {{"kind": "xor", "n": 300}},
            "folds": 3,
            "methods": [
                {{"method": "constant"}},
                {{"method": "glvq", "train": {{"epochs": 15, "batch_size": 40}}}},
                {{"method": "fairglvq", "train": {{"epochs": 15, "batch_size": 40, "c": 1.0}}}}
                {extra_method}
            ],
            "sweep": {{"c": [0.5, 1.0], "inp_iterations": [1, 3]}}
        }}"#
    );
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_the_result_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("table.csv");
    let folds = dir.path().join("folds.csv");
    let res = fairglvq(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--folds-out", folds.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "dataset,method,reg,acc_mean,acc_std,sp_mean,sp_std,eo_mean,eo_std");
    let methods: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(methods, ["constant", "glvq", "fairglvq"]);
    let fold_text = std::fs::read_to_string(&folds).unwrap();
    assert!(fold_text.starts_with("method,regularization,fold,acc,sp,eo\n"));
    assert_eq!(fold_text.lines().count(), 1 + 3 * 3);
}

#[test]
fn output_is_byte_identical_across_runs_and_seed_flag_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let a = fairglvq(&["run", "--config", &cfg]);
    let b = fairglvq(&["run", "--config", &cfg]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = fairglvq(&["run", "--config", &cfg, "--seed", "17"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sweep_fails_rows_individually_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    // INP with 3 iterations on 2-D data is invalid; iterations 1 is fine
    let cfg = small_config(dir.path(), r#", {"method": "inp", "train": {"epochs": 15, "batch_size": 40}}"#);
    let res = fairglvq(&["sweep", "--config", &cfg, "--format", "json"]);
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("1 row(s) failed"), "{stderr}");
    assert!(stderr.contains("inp reg=3"), "{stderr}");
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&res.stdout).unwrap();
    let methods: Vec<&str> = rows.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["constant", "glvq", "fairglvq", "fairglvq", "inp"]);
    assert_eq!(rows[4]["reg"], 1.0);
}

#[test]
fn generate_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("local.csv");
    let res = fairglvq(&["generate", "--kind", "local", "--n", "40", "--seed", "3", "--out", data.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("f0,f1,label,protected\n"));
    assert_eq!(text.lines().count(), 41);

    // predict the true label everywhere
    let preds = dir.path().join("preds.csv");
    let mut out = String::from("label,prediction,protected\n");
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        out += &format!("{},{},{}\n", cols[2], cols[2], cols[3]);
    }
    std::fs::write(&preds, out).unwrap();
    let res = fairglvq(&["eval", "--input", preds.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    let row: Vec<&str> = stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], ["preds", "predictions", "0", "1"]);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let res = fairglvq(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("reading config"));

    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.csv");
    std::fs::write(&preds, "label,prediction\n1,1\n").unwrap();
    let res = fairglvq(&["eval", "--input", preds.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}
