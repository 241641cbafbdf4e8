//! End-to-end CLI behavior.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tucker_ra::hosvd;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tucker")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn make_tensor(dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(name);
    let out = run(&[
        "synth",
        "noisy-lowrank",
        "--shape",
        "10,9,8",
        "--rank",
        "3,2,3",
        "--delta",
        "1e-2",
        "--seed",
        "7",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn info_reports_shape_and_rank() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    let out = run(&["info", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("shape: 10x9x8"), "{text}");
    assert!(text.contains("entries: 720"), "{text}");
    assert!(text.contains("multilinear rank"), "{text}");
}

#[test]
fn info_rejects_garbage_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.tnsr");
    std::fs::write(&path, b"not a tensor at all").unwrap();
    let out = run(&["info", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn decompose_meeting_tolerance_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    let out = run(&[
        "decompose",
        path.to_str().unwrap(),
        "-a",
        "ra-hooi",
        "--tol",
        "0.1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"].as_u64(), Some(1));
    assert_eq!(v["algorithm"].as_str(), Some("ra-hooi"));
    assert!(v["rel_error"].as_f64().unwrap() <= 0.1);
    assert!(v["rank_history"].is_array());
}

#[test]
fn decompose_missing_tolerance_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    let out = run(&["decompose", path.to_str().unwrap(), "-a", "ra-hooi"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tol"));
}

#[test]
fn decompose_unreachable_tolerance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    // Below the floating-point reconstruction floor even full rank misses it.
    let out = run(&[
        "decompose",
        path.to_str().unwrap(),
        "-a",
        "t-hosvd",
        "--tol",
        "1e-16",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["rel_error"].as_f64().unwrap() > 1e-16);
}

#[test]
fn decompose_saves_readable_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    let model_path = dir.path().join("m.tmod");
    let out = run(&[
        "decompose",
        path.to_str().unwrap(),
        "-a",
        "st-hosvd",
        "--tol",
        "0.1",
        "--save-model",
        model_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let a = tucker_ra::io::read_tensor(&path).unwrap();
    let model = tucker_ra::io::read_model(&model_path).unwrap();
    let err = hosvd::rel_error(&a, &model).unwrap();
    let reported = v["rel_error"].as_f64().unwrap();
    assert!((err - reported).abs() <= 1e-13 * reported.max(1e-300));
}

#[test]
fn decompose_rejects_rank_and_tol_together() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    let out = run(&[
        "decompose",
        path.to_str().unwrap(),
        "-a",
        "hooi",
        "--rank",
        "2,2,2",
        "--tol",
        "0.1",
    ]);
    assert!(!out.status.success());
}

#[test]
fn fixed_rank_algorithms_report_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    for alg in ["hooi", "als", "t-hosvd", "st-hosvd"] {
        let out = run(&[
            "decompose",
            path.to_str().unwrap(),
            "-a",
            alg,
            "--rank",
            "3,2,3",
        ]);
        assert!(out.status.success(), "{alg}: {}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let ranks: Vec<u64> = v["truncation"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_u64().unwrap())
            .collect();
        assert_eq!(ranks, vec![3, 2, 3], "{alg}");
        assert!(v["rel_error"].as_f64().unwrap() < 0.05, "{alg}");
    }
}

#[test]
fn bench_emits_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    std::fs::write(
        &config,
        r#"{
            "dataset": {"kind": "noisy-lowrank", "shape": [10, 9, 8], "rank": [3, 2, 3], "delta": 1e-2, "seed": 4},
            "algorithms": ["t-hosvd", "st-hosvd", "greedy-td", "ra-hooi", "ra-hooi-random"],
            "tolerances": [0.2, 0.05],
            "seeds": [1, 2]
        }"#,
    )
    .unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = run(&["bench", config.to_str().unwrap(), "-o", csv_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "schema_version,algorithm,tolerance,rel_error,truncation,num_params,compression_rate,sweeps,wall_time_s,seed"
    );
    assert_eq!(lines.len(), 1 + 5 * 2 * 2);
    let cols = lines[0].split(',').count();
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), cols, "{line}");
    }
    // Rerun and compare everything except the wall-time column.
    let strip = |text: &str| -> Vec<String> {
        text.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f[8] = "";
                f.join(",")
            })
            .collect()
    };
    let out2 = run(&["bench", config.to_str().unwrap()]);
    assert!(out2.status.success());
    assert_eq!(strip(&csv), strip(&String::from_utf8(out2.stdout).unwrap()));
}

#[test]
fn thread_cap_env_var_validated() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_tensor(dir.path(), "a.tnsr");
    let ok = Command::new(bin())
        .env("TUCKER_RA_THREADS", "2")
        .args(["info", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let bad = Command::new(bin())
        .env("TUCKER_RA_THREADS", "zero")
        .args(["info", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("TUCKER_RA_THREADS"));
}
