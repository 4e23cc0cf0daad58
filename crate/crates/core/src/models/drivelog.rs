//! Turns longitudinal drive logs into per-throttle engine torque datasets.
//!
//! From `m a_x = F_x - C_d v_x^2 - C_r` and `F_x = T_e eta_t i_g i_0 / R_w`, the
//! engine torque behind each logged sample is
//! `T_e = (m a_x + C_d v_x^2 + C_r) R_w / (eta_t i_g i_0)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::VehicleParams;
use crate::error::{Error, Result};
use crate::objective::Dataset;

/// Samples whose throttle is farther than this from every curve label are dropped.
const THROTTLE_BIN_TOLERANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveLogSample {
    pub v_x: f64,
    pub a_x: f64,
    #[serde(rename = "engine_rpm")]
    pub engine_rpm: f64,
    pub gear: u32,
    #[serde(rename = "throttle_pct")]
    pub throttle: f64,
}

/// Reads a `v_x,a_x,engine_rpm,gear,throttle_pct` CSV.
pub fn load_drive_log(path: &Path) -> Result<Vec<DriveLogSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let s: DriveLogSample = rec.map_err(|e| Error::csv(path, e))?;
        out.push(s);
    }
    Ok(out)
}

/// Forward model: longitudinal acceleration produced by engine torque `torque`.
pub fn forward_longitudinal_accel(torque: f64, v_x: f64, gear: u32, vp: &VehicleParams) -> Result<f64> {
    let traction = torque * vp.driveline_gain(gear)?;
    Ok((traction - vp.resistance(v_x)) / vp.mass)
}

fn sample_torque(s: &DriveLogSample, vp: &VehicleParams) -> Result<f64> {
    let traction = vp.mass * s.a_x + vp.resistance(s.v_x);
    Ok(traction / vp.driveline_gain(s.gear)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThrottleDataset {
    pub throttle: f64,
    pub data: Dataset,
}

/// Groups the log into one `engine_speed_norm,torque_nm` dataset per throttle
/// label. Returned in ascending label order; labels with no samples are omitted.
pub fn derive_engine_samples(
    log: &[DriveLogSample],
    vp: &VehicleParams,
    labels: &[f64],
) -> Result<Vec<ThrottleDataset>> {
    if log.is_empty() {
        return Err(Error::data("drive log is empty"));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no throttle labels given"));
    }
    let mut labels: Vec<f64> = labels.to_vec();
    labels.sort_by(f64::total_cmp);
    labels.dedup();

    let mut groups: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); labels.len()];
    let mut dropped = 0usize;
    for s in log {
        if s.v_x < 0.0 {
            return Err(Error::data(format!("negative velocity {} in drive log", s.v_x)));
        }
        let torque = sample_torque(s, vp)?;
        let nearest = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (i, (l - s.throttle).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("labels non-empty");
        if nearest.1 > THROTTLE_BIN_TOLERANCE {
            dropped += 1;
            continue;
        }
        let w = s.engine_rpm / vp.max_engine_rpm;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::data(format!(
                "engine speed {} rpm outside [0, {}]",
                s.engine_rpm, vp.max_engine_rpm
            )));
        }
        groups[nearest.0].0.push(w);
        groups[nearest.0].1.push(torque);
    }
    if dropped > 0 {
        log::info!("dropped {dropped} drive-log samples not near any throttle label");
    }

    labels
        .into_iter()
        .zip(groups)
        .filter(|(_, (w, _))| !w.is_empty())
        .map(|(label, (w, t))| {
            let data = Dataset::from_columns(format!("engine-{label}pct"), vec![w], t)?
                .with_column_names(&["engine_speed_norm"], "torque_nm")?;
            Ok(ThrottleDataset { throttle: label, data })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn toy_vehicle() -> VehicleParams {
        VehicleParams {
            mass: 750.0,
            drag_coeff: 1.2,
            rolling_resistance: 100.0,
            wheel_radius: 0.3,
            transmission_efficiency: 0.95,
            final_drive: 3.0,
            gear_ratios: vec![2.0],
            ..fixtures::vehicle()
        }
    }

    fn sample(v_x: f64, a_x: f64, throttle: f64) -> DriveLogSample {
        DriveLogSample {
            v_x,
            a_x,
            engine_rpm: 3000.0,
            gear: 1,
            throttle,
        }
    }

    #[test]
    fn statics() {
        let vp = toy_vehicle();
        let out = derive_engine_samples(&[sample(0.0, 0.0, 15.0)], &vp, &[15.0]).unwrap();
        let expected = 100.0 * 0.3 / (0.95 * 2.0 * 3.0);
        assert!((out[0].data.outputs()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn hand_arithmetic() {
        // F = 750*2 + 1.2*400 + 100 = 2080 N; T = 2080*0.3/(0.95*6) = 109.4737 N m
        let vp = toy_vehicle();
        let out = derive_engine_samples(&[sample(20.0, 2.0, 15.0)], &vp, &[15.0]).unwrap();
        assert!((out[0].data.outputs()[0] - 2080.0 * 0.3 / 5.7).abs() < 1e-9);
        assert!((out[0].data.outputs()[0] - 109.47).abs() < 0.01);
        assert_eq!(out[0].data.input(0), &[3000.0 / vp.max_engine_rpm]);
    }

    #[test]
    fn binning_and_dropping() {
        let vp = toy_vehicle();
        let log = vec![
            sample(10.0, 1.0, 4.0),
            sample(10.0, 1.0, 6.5),
            sample(10.0, 1.0, 10.0),
            sample(10.0, 1.0, 19.0),
            sample(10.0, 1.0, 21.9),
        ];
        let out = derive_engine_samples(&log, &vp, &[20.0, 5.0, 15.0]).unwrap();
        let labels: Vec<f64> = out.iter().map(|g| g.throttle).collect();
        assert_eq!(labels, vec![5.0, 20.0]);
        assert_eq!(out[0].data.len(), 2);
        assert_eq!(out[1].data.len(), 2);
    }

    #[test]
    fn errors() {
        let vp = toy_vehicle();
        let mut bad_gear = sample(10.0, 1.0, 5.0);
        bad_gear.gear = 4;
        assert!(derive_engine_samples(&[bad_gear], &vp, &[5.0]).is_err());
        assert!(derive_engine_samples(&[], &vp, &[5.0]).is_err());
        let mut fast = sample(10.0, 1.0, 5.0);
        fast.engine_rpm = vp.max_engine_rpm * 1.1;
        assert!(derive_engine_samples(&[fast], &vp, &[5.0]).is_err());
    }

    #[test]
    fn loads_csv_log() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        std::fs::write(&p, "v_x,a_x,engine_rpm,gear,throttle_pct\n10,0.5,3000,2,15\n20,1.0,4000,3,5\n").unwrap();
        let log = load_drive_log(&p).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log[1].gear, 3);
        assert_eq!(log[0].throttle, 15.0);
    }

    proptest! {
        #[test]
        fn inverts_forward_model(torque in -50.0f64..600.0, v in 0.0f64..80.0, gear in 1u32..=6) {
            let vp = fixtures::vehicle();
            let a_x = forward_longitudinal_accel(torque, v, gear, &vp).unwrap();
            let log = [DriveLogSample { v_x: v, a_x, engine_rpm: 4000.0, gear, throttle: 15.0 }];
            let out = derive_engine_samples(&log, &vp, &[15.0]).unwrap();
            let back = out[0].data.outputs()[0];
            prop_assert!((back - torque).abs() <= 1e-9 * torque.abs().max(1.0));
        }
    }
}
