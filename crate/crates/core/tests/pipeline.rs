//! Drive log to torque map, through files on disk.

use std::fmt::Write as _;
use std::fs;

use mihpo_core::fixtures;
use mihpo_core::models::{
    derive_engine_samples, fit_engine_curve, forward_longitudinal_accel, least_squares_cubic, load_drive_log,
    EngineCurveParams, FitOptions, FittedParams,
};
use mihpo_core::objective::{load_csv, mse_objective, Dataset};
use mihpo_core::optimizer::OptimizerConfig;
use mihpo_core::planning::{build_engine_map, inverse_throttle, Provenance};

fn write_drive_log(path: &std::path::Path) {
    let vp = fixtures::vehicle();
    let mut text = String::from("v_x,a_x,engine_rpm,gear,throttle_pct\n");
    // logged throttle wanders around the curve labels
    let jitter = [-1.2, 0.4, 1.7, -0.3];
    let mut k = 0;
    for &label in &fixtures::FITTED_THROTTLES {
        for gear in 1..=vp.gear_ratios.len() as u32 {
            for i in 1..=40 {
                let v = 1.5 * i as f64;
                let rpm = vp.engine_rpm(v, gear).unwrap();
                if rpm > vp.max_engine_rpm {
                    continue;
                }
                let torque = fixtures::engine_reference(rpm / vp.max_engine_rpm, label);
                let a = forward_longitudinal_accel(torque, v, gear, &vp).unwrap();
                writeln!(text, "{v},{a},{rpm},{gear},{}", label + jitter[k % 4]).unwrap();
                k += 1;
            }
        }
    }
    // far from every label, must be dropped
    writeln!(text, "20,0.5,3000,3,60").unwrap();
    fs::write(path, text).unwrap();
}

#[test]
fn drive_log_to_map_and_back() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("log.csv");
    write_drive_log(&log_path);
    let vp = fixtures::vehicle();
    let log = load_drive_log(&log_path).unwrap();
    let sets = derive_engine_samples(&log, &vp, &fixtures::FITTED_THROTTLES).unwrap();
    assert_eq!(sets.len(), 3);
    assert_eq!(sets.iter().map(|s| s.data.len()).sum::<usize>(), log.len() - 1);

    let mut curves = Vec::new();
    for set in &sets {
        // the dataset survives a CSV round trip
        let csv = dir.path().join(format!("engine_{}.csv", set.throttle));
        set.data.write_csv(&csv).unwrap();
        let (data, stats) = load_csv(&csv, &["engine_speed_norm"], "torque_nm").unwrap();
        assert_eq!(stats.rows_rejected, 0);
        assert_eq!(data.outputs(), set.data.outputs());

        let space = EngineCurveParams::default_space(&data).unwrap();
        let opts = FitOptions { seed: 3, ..FitOptions::engine() };
        let (p, report) = fit_engine_curve(&data, &space, set.throttle, &opts).unwrap();
        let ls = least_squares_cubic(&data).unwrap();
        let ls_loss = mse_objective(&mihpo_core::models::EngineCurveModel, &ls, &data);
        // the reference is quadratic in speed, so the family contains it
        assert!(report.best_loss() < 1.0, "throttle {}: {}", set.throttle, report.best_loss());
        assert!(report.best_loss() >= ls_loss - 1e-9);

        let saved = dir.path().join(format!("fit_{}.json", set.throttle));
        fs::write(&saved, FittedParams::engine(&p, report.best_loss()).to_json().unwrap()).unwrap();
        curves.push(FittedParams::load(&saved).unwrap().to_engine().unwrap());
    }

    let map = build_engine_map(&curves, Some(&fixtures::dyno()), &vp).unwrap();
    let torque_csv = dir.path().join("map.csv");
    let mask_csv = dir.path().join("mask.csv");
    map.write_csv(&torque_csv, &mask_csv).unwrap();
    let map = mihpo_core::planning::EngineTorqueMap::read_csv(&torque_csv, &mask_csv).unwrap();
    let row = |thr: f64| map.throttle_grid.iter().position(|&t| t == thr).unwrap();
    assert!(map.provenance[row(15.0)].iter().all(|&p| p == Provenance::Fitted));
    assert!(map.provenance[row(50.0)].iter().all(|&p| p == Provenance::Dyno));

    for &rpm in &[1000.0, 3500.0, 6200.0] {
        for &thr in &[15.0, 45.0, 85.0] {
            let t = map.torque_at(rpm, thr).unwrap();
            let back = inverse_throttle(&map, rpm, t).unwrap();
            assert!((back - thr).abs() < 1e-6, "rpm {rpm} thr {thr}: {back}");
        }
    }
}

#[test]
fn optimizer_config_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(
        &path,
        r#"{"method": "gbo",
            "params": [{"name": "a", "mean": 0, "std": 1, "min": -5, "max": 5}],
            "R": 27, "eta": 3, "seed": 11,
            "gbo": {"learning_rate": 0.1}}"#,
    )
    .unwrap();
    let cfg = OptimizerConfig::load(&path).unwrap();
    let budget = cfg.evaluation_budget().unwrap();
    let objective = |p: &[f64]| (p[0] - 1.5).powi(2);
    let report = mihpo_core::baselines::run_gbo(&cfg.params, &objective, &cfg.gbo_settings(budget).unwrap(), cfg.seed).unwrap();
    assert!(report.total_evaluations <= budget);
    assert!(report.best_loss() < 1e-8);
    assert!(OptimizerConfig::load(&dir.path().join("missing.json")).is_err());
}

#[test]
fn dataset_csv_rejects_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tire.csv");
    fs::write(&path, "alpha_rad,fy_n\n0.01,100\nx,2\n0.02,nan\n-0.01,-90\n").unwrap();
    let (data, stats) = load_csv(&path, &["alpha_rad"], "fy_n").unwrap();
    assert_eq!(data.len(), 2);
    assert_eq!(stats.rows_rejected, 2);
    let expected = Dataset::from_columns("tire", vec![vec![0.01, -0.01]], vec![100.0, -90.0]).unwrap();
    assert_eq!(data.outputs(), expected.outputs());
}
