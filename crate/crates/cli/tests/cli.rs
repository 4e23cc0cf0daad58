use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mihpo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mihpo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).expect("machine-readable error")
}

const TIRE_CONFIG: &str = r#"{
    "params": [
        {"name": "B", "mean": 10, "std": 4, "min": 1, "max": 30},
        {"name": "C", "mean": 1.5, "std": 0.3, "min": 0.5, "max": 2.5},
        {"name": "D", "mean": 5000, "std": 1500, "min": 500, "max": 12000},
        {"name": "S_x", "mean": 0, "std": 0.01, "min": -0.05, "max": 0.05},
        {"name": "S_y", "mean": 0, "std": 200, "min": -1000, "max": 1000}
    ],
    "R": 125, "eta": 5, "seed": 2,
    "gbo": {"learning_rate": 1e-10},
    "pso": {"n_particles": 20}
}"#;

fn tire_setup(dir: &Path) {
    fs::write(dir.join("cfg.json"), TIRE_CONFIG).unwrap();
    let o = mihpo(dir, &["generate", "--model", "tire", "--n-samples", "300", "--out", "tire.csv", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fit_writes_three_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    tire_setup(dir.path());
    let o = mihpo(dir.path(), &["fit", "--config", "cfg.json", "--data", "tire.csv", "--model", "tire", "--out", "fit"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("fit");
    let params: Value = serde_json::from_str(&fs::read_to_string(out.join("params.json")).unwrap()).unwrap();
    assert_eq!(params["model"], "tire");
    assert!(params["params"]["D"].as_f64().unwrap() > 0.0);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "mihpo");
    let curve = fs::read_to_string(out.join("loss_curve.csv")).unwrap();
    assert!(curve.starts_with("evaluations,best_loss\n"));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seed"], 2);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert!(manifest["started_at"].is_string() && manifest["finished_at"].is_string());
    // no temp files left behind
    let names: BTreeSet<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 4, "{names:?}");
}

#[test]
fn repeated_seed_gives_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    tire_setup(dir.path());
    for (out, jobs) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let args = [
            "fit", "--config", "cfg.json", "--data", "tire.csv", "--model", "tire", "--out", out, "--seed", "7", "--jobs", jobs,
        ];
        assert_eq!(code(&mihpo(dir.path(), &args)), 0);
    }
    for f in ["params.json", "report.json", "loss_curve.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
        assert_eq!(a, fs::read(dir.path().join("c").join(f)).unwrap(), "{f} with jobs");
    }
}

#[test]
fn missing_dataset_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), TIRE_CONFIG).unwrap();
    let o = mihpo(dir.path(), &["fit", "--config", "cfg.json", "--data", "nope.csv", "--model", "tire", "--out", "fit"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"]["kind"], "io");
    assert!(!dir.path().join("fit").exists());
}

#[test]
fn bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    tire_setup(dir.path());
    fs::write(dir.path().join("cfg.json"), TIRE_CONFIG.replace("\"eta\": 5", "\"eta\": 1")).unwrap();
    let o = mihpo(dir.path(), &["fit", "--config", "cfg.json", "--data", "tire.csv", "--model", "tire", "--out", "fit"]);
    assert_eq!(code(&o), 2);
    let o = mihpo(dir.path(), &["fit", "--config", "cfg.json", "--data", "tire.csv", "--model", "engine", "--out", "fit"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let o = mihpo(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&mihpo(dir.path(), &["fit"])), 64);
    assert_eq!(code(&mihpo(dir.path(), &["--help"])), 0);
}

#[test]
fn compare_emits_one_group_per_method_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    tire_setup(dir.path());
    let o = mihpo(
        dir.path(),
        &["compare", "--config", "cfg.json", "--data", "tire.csv", "--model", "tire", "--methods", "mihpo,gbo", "--seeds", "3", "--out", "cmp.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,seed,evaluations,best_loss"));
    let mut last: BTreeMap<(String, u64), u64> = BTreeMap::new();
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let e = last.entry((f[0].to_string(), f[1].parse().unwrap())).or_default();
        *e = (*e).max(f[2].parse().unwrap());
    }
    assert_eq!(last.len(), 6);
    // R = 125, eta = 5: brackets spend 500 + 445 + 500 + 500
    let budget = 1945;
    assert!(last.values().all(|&e| e <= budget), "{last:?}");
    assert_eq!(last[&("mihpo".to_string(), 2)], budget);
    assert!(last.keys().any(|(m, s)| m == "gbo" && *s == 4));
}

#[test]
fn plan_speeds_rise_with_tire_factor() {
    let dir = tempfile::tempdir().unwrap();
    let o = mihpo(dir.path(), &["plan", "--mu", "0.5,0.7,0.9,1.0", "--out", "plan.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    let mut by_mu: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for l in text.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        by_mu.entry(f[0].to_string()).or_default().push(f[3].parse().unwrap());
    }
    let profiles: Vec<&Vec<f64>> = ["0.5", "0.7", "0.9", "1"].iter().map(|m| &by_mu[*m]).collect();
    for w in profiles.windows(2) {
        assert!(w[0].iter().zip(w[1]).all(|(a, b)| a <= b));
        assert!(w[0].iter().zip(w[1]).any(|(a, b)| a < b));
    }
    assert!(dir.path().join("plan.csv.manifest.json").exists());
}

#[test]
fn map_gains_and_sim_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = mihpo(d, &["generate", "--model", "engine", "--n-samples", "200", "--noise-std", "1", "--out", "eng.csv"]);
    assert_eq!(code(&o), 0);
    let cfg = r#"{"params": [
        {"name": "p0", "mean": 50, "std": 30, "min": -100, "max": 300},
        {"name": "p1", "mean": 200, "std": 200, "min": -1000, "max": 1500},
        {"name": "p2", "mean": -100, "std": 200, "min": -1500, "max": 1000},
        {"name": "p3", "mean": 0, "std": 100, "min": -500, "max": 500}],
        "R": 625, "eta": 5}"#;
    fs::write(d.join("eng.json"), cfg).unwrap();
    let o = mihpo(d, &["fit", "--config", "eng.json", "--data", "eng.csv", "--model", "engine", "--throttle", "15", "--out", "fit"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = mihpo(d, &["build-engine-map", "--fitted", "fit/params.json", "--out", "map.csv", "--mask", "mask.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(d.join("mask.csv")).unwrap().contains('F'));
    let o = mihpo(d, &["lqr-gains", "--out", "gains.json"]);
    assert_eq!(code(&o), 0);
    let gains: Value = serde_json::from_str(&fs::read_to_string(d.join("gains.json")).unwrap()).unwrap();
    assert_eq!(gains["gains"][0].as_array().unwrap().len(), 4);
    let o = mihpo(d, &["sim", "--gains", "gains.json", "--out", "trace.csv", "--summary", "summary.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(d.join("summary.json")).unwrap()).unwrap();
    assert!(summary["max_abs_e_y"].as_f64().unwrap() < 1.0);
    assert!(fs::read_to_string(d.join("trace.csv")).unwrap().lines().count() > 1000);
}

#[test]
fn leaving_the_corridor_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{"dt": 0.01, "n_laps": 1, "k_v": 3000, "lookahead_time": 1.0, "a_brake": 6,
        "corridor_half_width": 0.001, "brake_gain": 100, "shift_fraction": 0.9}"#;
    fs::write(d.join("sim.json"), cfg).unwrap();
    let o = mihpo(d, &["sim", "--sim-config", "sim.json", "--out", "trace.csv"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_json(&o)["error"]["kind"], "numeric");
    // the partial trace is kept for diagnosis
    assert!(d.join("trace.csv").exists());
}
