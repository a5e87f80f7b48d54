use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use simplexflow::dynamics::FlowTrace;
use simplexflow::verify::IsodiametricReport;
use simplexflow::{DiscreteMeasure, MinimizerReport};

fn simplexflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simplexflow"))
        .args(args)
        .env_remove("SIMPLEXFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn metric_of_a_measure_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", r#"{"dim":2,"points":[[0,0],[1,0],[0,1]],"weights":[0.5,0.25,0.25]}"#);
    let v = json_of(&simplexflow(&["metric", "--p", "inf", "--a", &a, "--b", &a]));
    assert_eq!(v["command"], "metric");
    assert_eq!(v["result"]["distance"].as_f64(), Some(0.0));
    assert_eq!(v["config"]["p"], "inf");
}

#[test]
fn energy_of_uniform_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let h = 3f64.sqrt() / 2.0;
    let m = write(dir.path(), "m.json", &format!(r#"{{"dim":2,"points":[[0,0],[1,0],[0.5,{h}]]}}"#));
    let v = json_of(&simplexflow(&["energy", "--measure", &m, "--alpha", "4", "--beta", "2"]));
    let e = v["result"]["energy"].as_f64().unwrap();
    assert!((e + 1.0 / 6.0).abs() < 1e-12, "{e}");
}

#[test]
fn minimizer_report_round_trips() {
    let out = simplexflow(&[
        "minimize", "--n", "2", "--alpha", "10", "--beta", "2", "--atoms", "30", "--restarts", "2", "--seed", "7",
    ]);
    let v = json_of(&out);
    assert_eq!(v["seed"].as_u64(), Some(7));
    assert_eq!(v["config"]["atoms"].as_u64(), Some(30));
    let report: MinimizerReport = serde_json::from_value(v["result"].clone()).unwrap();
    assert!(report.is_unit_simplex);
    let again = simplexflow::json::to_string(&report).unwrap();
    let back: MinimizerReport = serde_json::from_str(&again).unwrap();
    assert_eq!(back, report);
}

#[test]
fn flow_trace_round_trips_and_exports_csv() {
    let args = ["flow", "--n", "2", "--atoms", "10", "--alpha", "4", "--beta", "2", "--seed", "1", "--t-max", "5"];
    let v = json_of(&simplexflow(&args));
    let trace: FlowTrace = serde_json::from_value(v["result"].clone()).unwrap();
    assert_eq!(trace.configs[0].measure.len(), 10);
    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let csv = simplexflow(&csv_args);
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("t,E"));
    assert_eq!(text.lines().count(), trace.times.len() + 1);
}

#[test]
fn variance_report_matches_bound() {
    let v = json_of(&simplexflow(&["verify", "variance", "--n", "2", "--clouds", "200", "--seed", "1"]));
    let report: IsodiametricReport = serde_json::from_value(v["result"].clone()).unwrap();
    assert!(report.max_value <= 1.0 / 3.0 + 1e-9);
    assert!(report.passed);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"n": 3, "alpha": 8, "beta": 2}"#);
    let v = json_of(&simplexflow(&["--config", &cfg, "candidates", "--n", "2"]));
    assert_eq!(v["config"]["n"].as_u64(), Some(2));
    assert_eq!(v["config"]["sphere_atoms"].as_u64(), Some(720));
    let simplex = v["result"]["table"]["simplex"].as_f64().unwrap();
    assert!((simplex - 2.0 / 3.0 * (1.0 / 8.0 - 0.5)).abs() < 1e-15);
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let status = simplexflow(&["candidates", "--alpha", "inf", "--beta", "2", "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["alpha"], "inf");
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.json", r#"{"alpha": 4, "beta": 2, "bogus": 1}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["energy", "--alpha", "4"],
        vec!["--config", &unknown, "candidates"],
        vec!["candidates", "--alpha", "2", "--beta", "4"],
        vec!["candidates", "--alpha", "x", "--beta", "2"],
        vec!["metric", "--p", "2", "--a", "/nonexistent.json", "--b", "/nonexistent.json"],
        vec!["verify", "variance", "--format", "csv"],
        vec!["nonsense"],
    ];
    for args in cases {
        let out = simplexflow(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn failed_flow_step_exits_with_two_after_writing_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"dim":1,"points":[[0],[0.3]]}"#);
    let out = dir.path().join("trace.json");
    let run = simplexflow(&[
        "flow", "--measure", &m, "--alpha", "4", "--beta", "2", "--dt-init", "50", "--adapt", "false", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2), "{}", String::from_utf8_lossy(&run.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["terminated_by"], "step_failure");
}

#[test]
fn help_and_version_exit_with_zero() {
    assert_eq!(simplexflow(&["--help"]).status.code(), Some(0));
    assert_eq!(simplexflow(&["--version"]).status.code(), Some(0));
}

#[test]
fn thread_count_does_not_change_the_result() {
    let args = ["verify", "variance", "--n", "3", "--clouds", "60", "--seed", "9"];
    let serial = simplexflow(&[&args[..], &["--threads", "1"]].concat());
    let wide = simplexflow(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(serial.stdout, wide.stdout);
}

#[test]
fn measures_in_outputs_reload() {
    let v = json_of(&simplexflow(&["minimize", "--n", "1", "--alpha", "6", "--beta", "2", "--atoms", "12", "--restarts", "1"]));
    let best: DiscreteMeasure = serde_json::from_value(v["result"]["best"].clone()).unwrap();
    assert!((best.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
