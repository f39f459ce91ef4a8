use std::f64::consts::FRAC_PI_2;
use std::process::{Command, Output};

use serde_json::Value;

fn bangoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bangoff"))
        .args(args)
        .env_remove("BANGOFF_SEED")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn optimize_reports_the_pn_halves() {
    let out = bangoff(&[
        "--starts", "20", "optimize", "--objective", "fidelity", "--T", "0.2", "--ns", "1",
    ]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["type"], "PN");
    assert_eq!(report["flip_partner"]["type"], "PN");
    for d in report["durations"].as_array().unwrap() {
        assert!((d.as_f64().unwrap() - 0.1).abs() < 1e-7);
    }
    assert_eq!(report["seed"], 0);
    assert_eq!(report["converged"], true);
}

#[test]
fn negative_duration_is_rejected() {
    let out = bangoff(&["optimize", "--objective", "fidelity", "--T", "-1", "--ns", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--T"));
}

#[test]
fn empty_grid_is_rejected() {
    let out = bangoff(&[
        "sweep", "--objective", "fidelity", "--t-min", "1", "--t-max", "0.5", "--t-step", "0.1",
        "--ns-max", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_with_gaps_writes_the_extra_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = bangoff(&[
        "--starts", "4", "sweep", "--objective", "concurrence", "--t-min", "0.3", "--t-max",
        "0.5", "--t-step", "0.2", "--ns-max", "1", "--gaps", "--out", path.to_str().unwrap(),
    ]);
    stdout(&out);
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["T", "ns", "cost", "best_type", "durations_json", "wall_time_s", "delta_cost"]
    );
    assert_eq!(reader.records().count(), 4);
}

#[test]
fn optimizer_output_feeds_the_trajectory_command() {
    let dir = tempfile::tempdir().unwrap();
    let control = dir.path().join("control.json");
    let out = bangoff(&[
        "--starts", "20", "optimize", "--objective", "fidelity", "--T", "0.8", "--ns", "2",
        "--out", control.to_str().unwrap(),
    ]);
    stdout(&out);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&control).unwrap()).unwrap();
    let text = stdout(&bangoff(&[
        "trajectory", "--control", control.to_str().unwrap(), "--initial", "prep", "--step", "0.1",
    ]));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let last = rows.last().unwrap();
    assert!((last[0].parse::<f64>().unwrap() - 0.8).abs() < 1e-12);
    let cost = report["cost"].as_f64().unwrap();
    assert!(cost > 0.0 && cost < 1.0);
    let norm: f64 = (1..9).map(|k| last[k].parse::<f64>().unwrap().powi(2)).sum();
    assert!((norm - 1.0).abs() < 1e-10);
}

#[test]
fn off_control_stays_normalized_at_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    let control = dir.path().join("off.json");
    let record = serde_json::json!({"type": "0", "durations": [FRAC_PI_2], "total_duration": FRAC_PI_2});
    std::fs::write(&control, record.to_string()).unwrap();
    let text = stdout(&bangoff(&[
        "trajectory", "--control", control.to_str().unwrap(), "--initial", "prep", "--step", "0.5",
    ]));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let times: Vec<f64> = reader.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(times.len(), 5);
    assert_eq!(times[0], 0.0);
    assert!((times[4] - FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn malformed_control_file_reports_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let control = dir.path().join("bad.json");
    std::fs::write(&control, "{\n  \"type\": \"PN\",\n  \"durations\": [0.1,\n}\n").unwrap();
    let out = bangoff(&[
        "trajectory", "--control", control.to_str().unwrap(), "--initial", "00", "--step", "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn bracket_failure_is_reported() {
    let out = bangoff(&[
        "--starts", "8", "critical", "--which", "tc", "--bracket", "0.5", "0.6", "--precision",
        "1e-2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bracket"), "{err}");
}

#[test]
fn seed_comes_from_the_environment() {
    let args = [
        "--starts", "3", "optimize", "--objective", "concurrence", "--T", "1.2", "--ns", "2",
    ];
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_bangoff"))
            .args(args)
            .env("BANGOFF_SEED", seed)
            .output()
            .unwrap();
        serde_json::from_str::<Value>(&stdout(&out)).unwrap()
    };
    let a = run("17");
    let b = run("17");
    assert_eq!(a["seed"], 17);
    assert_eq!(a, b);
}
