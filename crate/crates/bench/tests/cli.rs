//! The `rwhil` binary: exit codes, output files and the distributed runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rwhil_bench::RunLog;
use serde_json::Value;

fn rwhil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwhil")).args(args).output().expect("rwhil starts")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn hil_c_text() -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/hil-c.toml")).unwrap()
}

/// The HIL-c scenario cut to `duration` seconds, with or without its `[expect]` table.
fn short_scenario(dir: &Path, duration: f64, keep_expect: bool) -> PathBuf {
    let mut text = hil_c_text().replace("duration = 4000.0", &format!("duration = {duration:?}"));
    if !keep_expect {
        text.truncate(text.find("[expect]").unwrap());
    }
    let p = dir.join(format!("short-{duration}.toml"));
    fs::write(&p, text).unwrap();
    p
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rwhil(&["run", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_config_contents_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown key", hil_c_text().replace("[sim]\n", "[sim]\nintegration_stepp = 0.01\n")),
        ("non-unit axis", hil_c_text().replace("[0.5774, 0.5774, 0.5774],", "[0.9, 0.5774, 0.5774],")),
        ("wheel out of range", hil_c_text().replace("wheel = 3", "wheel = 5")),
        ("not toml", "name = ".into()),
    ];
    for (what, text) in cases {
        let p = dir.path().join("bad.toml");
        fs::write(&p, text).unwrap();
        let o = rwhil(&["run", p.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{what}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn bad_arguments_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_scenario(dir.path(), 1.0, false);
    assert_eq!(code(&rwhil(&["run", cfg.to_str().unwrap(), "--mode", "sil"])), 1);
    assert_eq!(code(&rwhil(&["run", cfg.to_str().unwrap(), "--seed", "-3"])), 1);
    assert_eq!(code(&rwhil(&["launch"])), 1);
    assert_eq!(code(&rwhil(&["--help"])), 0);
}

#[test]
fn completed_run_writes_log_summary_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_scenario(dir.path(), 60.0, false);
    let out = dir.path().join("out");
    let o = rwhil(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--emit-plots", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let s = summary(&out);
    assert_eq!(s["status"], "completed");
    assert_eq!(s["seed"], 3);
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["passed"], true);
    assert_eq!(s["last_tick"], 1200);

    let log = RunLog::read_csv(&out.join("run.csv")).unwrap();
    // duration / control period + 1
    assert_eq!(log.len(), 601);
    for key in ["error_mrp", "body_rate", "health", "wheel_speed"] {
        let p = RunLog::read_csv(&out.join(format!("plot_{key}.csv"))).unwrap();
        assert_eq!(p.len(), 601, "{key}");
        assert_eq!(p.header[0], "t");
    }
    let health = RunLog::read_csv(&out.join("plot_health.csv")).unwrap();
    assert_eq!(health.header.len(), 4 + 2);
}

#[test]
fn failed_expectations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // 60 s is too short for the first slew to settle
    let cfg = short_scenario(dir.path(), 60.0, true);
    let out = dir.path().join("out");
    let o = rwhil(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL attitude_error"), "{stdout}");
    let s = summary(&out);
    assert_eq!(s["status"], "completed");
    assert_eq!(s["passed"], false);
}

#[test]
fn distributed_run_matches_mil_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_scenario(dir.path(), 200.0, false);
    let (mil, dist) = (dir.path().join("mil"), dir.path().join("dist"));
    assert_eq!(code(&rwhil(&["run", cfg.to_str().unwrap(), "--out", mil.to_str().unwrap()])), 0);
    let o = rwhil(&["run", cfg.to_str().unwrap(), "--mode", "dist", "--accel", "--out", dist.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (a, b) = (summary(&mil), summary(&dist));
    assert_eq!(b["mode"], "distributed");
    assert_eq!(a["run_csv_sha256"], b["run_csv_sha256"]);
    assert_eq!(b["link"]["broker_crc_errors"], 0);
    assert_eq!(b["link"]["gap_ratio"], 0.0);
    for role in ["sim", "ctl", "rw"] {
        assert!(dist.join("nodes").join(format!("{role}.csv")).exists(), "{role} log");
    }
}

#[test]
fn killed_node_halts_the_run_with_a_node_down_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_scenario(dir.path(), 300.0, false);
    let out = dir.path().join("out");
    let o = rwhil(&["run", cfg.to_str().unwrap(), "--mode", "dist", "--accel", "--kill", "rw@100", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["status"], "failed");
    let failure = s["failure"].as_str().unwrap();
    assert!(failure.contains("node-down") && failure.contains("rw"), "{failure}");
    // everything up to the crash is kept
    let log = RunLog::read_csv(&out.join("run.csv")).unwrap();
    let t = log.column("t").unwrap();
    assert!((99.0..=100.0).contains(t.last().unwrap()), "last logged t = {:?}", t.last());
}

#[test]
fn real_time_run_keeps_pace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_scenario(dir.path(), 3.0, false);
    let out = dir.path().join("out");
    let o = rwhil(&["run", cfg.to_str().unwrap(), "--mode", "dist", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let wall = s["wall_seconds"].as_f64().unwrap();
    assert!((2.9..6.0).contains(&wall), "wall {wall} s");
    assert_eq!(s["link"]["rate_overruns"], 0);
}
