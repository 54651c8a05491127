//! End-to-end tests of the installed binary: exit codes, stdout contracts,
//! artifact emission.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn evonas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evonas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn demo_config() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/quick_demo.json"
    ))
}

#[test]
fn spaces_prints_the_four_presets() {
    let out = evonas(&["spaces"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "mobilenetv3\nproxylessnas\nresnet50d\ntiny-fixture\n"
    );
}

#[test]
fn search_emits_json_and_respects_the_target() {
    let tmp = tempfile::tempdir().unwrap();
    let out_file = tmp.path().join("outcome.json");
    let out = evonas(&[
        "search",
        "--space",
        "tiny-fixture",
        "--target",
        "8.0",
        "--seed",
        "1",
        "--iterations",
        "30",
        "--population",
        "8",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["best"]["latency_ms"].as_f64().unwrap() <= 8.0);
    // the file holds the same document
    let file: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(file, v);
}

#[test]
fn infeasible_target_exits_3_and_names_the_floor() {
    let out = evonas(&["search", "--space", "tiny-fixture", "--target", "1.0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).is_empty());
    assert!(stderr(&out).contains("4.0"), "stderr: {}", stderr(&out));
}

#[test]
fn usage_errors_exit_2() {
    let out = evonas(&["search", "--space", "tiny-fixture", "--target", "8.0", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = evonas(&["multi", "--space", "tiny-fixture", "--targets", "5,8", "--strategy", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_failures_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let broken = tmp.path().join("broken.json");
    fs::write(&broken, "{ not json").unwrap();
    let out = evonas(&[
        "multi", "--space", "tiny-fixture", "--config", broken.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    let missing = tmp.path().join("absent.json");
    let out = evonas(&[
        "multi", "--space", "tiny-fixture", "--config", missing.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
}

#[test]
fn multi_table_reports_stages_in_processing_order() {
    let out = evonas(&[
        "multi", "--space", "tiny-fixture", "--targets", "60,45,30,15",
        "--strategy", "top-down", "--n-first", "10", "--n-rest", "5",
        "--population", "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "target_ms,accuracy,latency_ms,evaluations,rejections,iterations"
    );
    let first: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(first, ["60", "45", "30", "15"]);

    let out = evonas(&[
        "multi", "--space", "tiny-fixture", "--targets", "60,45,30,15",
        "--strategy", "bottom-up", "--n-first", "10", "--n-rest", "5",
        "--population", "8",
    ]);
    let text = stdout(&out);
    let first: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(first, ["15", "30", "45", "60"]);
}

#[test]
fn oracle_returns_the_minimal_config_at_the_floor() {
    let out = evonas(&["oracle", "--space", "tiny-fixture", "--target", "4.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["best_latency_ms"].as_f64().unwrap(), 4.0);
    assert_eq!(v["feasible_count"].as_u64().unwrap(), 1);
    assert_eq!(v["best"]["depths"], serde_json::json!([1, 1]));
}

#[test]
fn bench_campaign_writes_artifacts_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for dir in [&dir_a, &dir_b] {
        let out = evonas(&[
            "bench",
            "--config",
            demo_config().to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(summary["spaces"][0]["violations"].as_u64().unwrap(), 0);
    }
    for sweep in ["accuracy", "k_sweep", "profile"] {
        let rel = |name: &str| format!("tiny-fixture/{sweep}/{name}");
        for name in ["report.csv", "report.json", "raw_runs.jsonl"] {
            let a = fs::read(dir_a.join(rel(name))).unwrap();
            let b = fs::read(dir_b.join(rel(name))).unwrap();
            if name == "report.json" {
                // report.json holds wall-time stats, so only require both parse
                assert!(serde_json::from_slice::<serde_json::Value>(&a).is_ok());
                assert!(serde_json::from_slice::<serde_json::Value>(&b).is_ok());
            } else {
                assert_eq!(a, b, "{sweep}/{name} differs between reruns");
            }
        }
        let svg = fs::read_dir(dir_a.join(format!("tiny-fixture/{sweep}")))
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "svg"))
            .count();
        assert_eq!(svg, 1, "expected exactly one plot per sweep");
    }
}

#[test]
fn bench_honors_the_output_env_var() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_evonas"))
        .args([
            "bench",
            "--config",
            demo_config().to_str().unwrap(),
            "--repetitions",
            "1",
        ])
        .env("EVONAS_OUT", tmp.path())
        .output()
        .expect("binary runs");
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(tmp.path().join("summary.json").exists());
    assert!(tmp.path().join("tiny-fixture/accuracy/report.csv").exists());
}
