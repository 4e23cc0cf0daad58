//! Placeholder vehicle, tire, engine and controller values.
//!
//! None of these describe a real car. They are self-consistent stand-ins so the
//! pipeline and its tests have something to run on.

use crate::models::{least_squares_cubic, ChassisGeometry, EngineCurveParams, TireParams, VehicleParams};
use crate::objective::Dataset;
use crate::planning::{build_engine_map, cornering_stiffness, lqr_gain_table, EngineTorqueMap, LqrDesign, LqrGainTable, PlannerParams};
use crate::sim::AxleTires;

const G: f64 = 9.81;

pub fn geometry() -> ChassisGeometry {
    ChassisGeometry {
        l_f: 1.7,
        l_r: 1.3,
        yaw_inertia: 1000.0,
    }
}

pub fn vehicle() -> VehicleParams {
    let mass = 750.0;
    let g = geometry();
    let front_axle = mass * G * g.l_r / g.wheelbase();
    let rear_axle = mass * G * g.l_f / g.wheelbase();
    VehicleParams {
        mass,
        sprung_mass: 680.0,
        drag_coeff: 0.45,
        rolling_resistance: 150.0,
        roll_height: 0.25,
        wheel_radius: 0.3,
        transmission_efficiency: 0.9,
        final_drive: 3.0,
        gear_ratios: vec![2.9, 2.1, 1.65, 1.35, 1.15, 1.0],
        max_engine_rpm: 7500.0,
        track_width: 1.6,
        nominal_wheel_load: [front_axle / 2.0, rear_axle / 2.0],
    }
}

/// Ground truth for synthetic tire-recovery runs.
pub fn tire_truth() -> TireParams {
    TireParams::new(9.5, 1.4, 5200.0, 0.008, -150.0)
}

/// Axle-summed lateral curves for the simulator.
pub fn axle_tires() -> AxleTires {
    AxleTires {
        front: TireParams::new(10.0, 1.4, 6000.0, 0.0, 0.0),
        rear: TireParams::new(11.0, 1.45, 8200.0, 0.0, 0.0),
    }
}

/// Slip-angle window scanned for tire peaks, rad.
pub const PEAK_SCAN: (f64, f64) = (-0.4, 0.4);

pub fn planner(mu: f64) -> PlannerParams {
    let vp = vehicle();
    let tires = axle_tires();
    PlannerParams {
        mu,
        peak_force: [
            crate::planning::tire_peak_force(&tires.front, PEAK_SCAN).expect("valid range"),
            crate::planning::tire_peak_force(&tires.rear, PEAK_SCAN).expect("valid range"),
        ],
        nominal_load: [2.0 * vp.nominal_wheel_load[0], 2.0 * vp.nominal_wheel_load[1]],
        v_cap: 65.0,
    }
}

/// Reference engine, N m, at normalized speed `w` and throttle percent.
pub fn engine_reference(w: f64, throttle: f64) -> f64 {
    (throttle / 100.0).powf(0.7) * (150.0 + 700.0 * w - 500.0 * w * w)
}

pub const FITTED_THROTTLES: [f64; 3] = [5.0, 15.0, 20.0];
pub const DYNO_THROTTLES: [f64; 10] = [0.0, 10.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

/// Cubic curves fitted by least squares to the reference engine at the
/// low-throttle labels.
pub fn engine_curves() -> Vec<EngineCurveParams> {
    FITTED_THROTTLES
        .iter()
        .map(|&thr| {
            let w: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
            let y = w.iter().map(|&w| engine_reference(w, thr)).collect();
            let d = Dataset::from_columns("ref", vec![w], y).expect("matching lengths");
            EngineCurveParams::new(least_squares_cubic(&d).expect("well posed"), thr).expect("valid")
        })
        .collect()
}

/// Dyno grid: `(engine_rpm, throttle_pct) -> torque_nm` every 500 rpm.
pub fn dyno() -> Dataset {
    let vp = vehicle();
    let mut rpm = Vec::new();
    let mut thr = Vec::new();
    let mut torque = Vec::new();
    for i in 0..=15 {
        let r = 500.0 * i as f64;
        for &t in &DYNO_THROTTLES {
            rpm.push(r);
            thr.push(t);
            torque.push(engine_reference(r / vp.max_engine_rpm, t));
        }
    }
    Dataset::from_columns("dyno", vec![rpm, thr], torque)
        .and_then(|d| d.with_column_names(&["engine_rpm", "throttle_pct"], "torque_nm"))
        .expect("consistent columns")
}

pub fn engine_map() -> EngineTorqueMap {
    build_engine_map(&engine_curves(), Some(&dyno()), &vehicle()).expect("fixture map builds")
}

pub fn lqr_design() -> LqrDesign {
    let t = axle_tires();
    LqrDesign {
        // axle curves cover two tires each
        c_af: cornering_stiffness(&t.front) / 2.0,
        c_ar: cornering_stiffness(&t.rear) / 2.0,
        q: [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0]],
        r: 10.0,
        velocity_breakpoints: (1..=14).map(|i| 5.0 * i as f64).collect(),
        steering_limit: 0.3,
    }
}

pub fn gain_table() -> LqrGainTable {
    lqr_gain_table(&lqr_design(), &vehicle(), &geometry()).expect("fixture design is stabilizable")
}
