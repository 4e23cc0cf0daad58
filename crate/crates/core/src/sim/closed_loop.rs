use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dynamics::{derivatives, step, AxleTires, VehicleState};
use super::track::{wrap_angle, TrackPath};
use crate::error::{Error, Result};
use crate::models::{brake_force_to_pedal, pedal_to_brake_force, ChassisGeometry, VehicleParams};
use crate::planning::{
    inverse_throttle, plan_velocity_profile, steering_command, EngineTorqueMap, LateralErrorState, LqrGainTable,
    PlannerParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_laps: u32,
    /// Proportional speed gain, N per m/s.
    pub k_v: f64,
    /// The speed target is the lowest planned speed within this many seconds
    /// of travel ahead.
    pub lookahead_time: f64,
    /// Deceleration assumed when planning braking ahead of corners, m/s^2.
    pub a_brake: f64,
    /// Largest allowed `|e_y|` before the run is aborted, m.
    pub corridor_half_width: f64,
    /// Brake force per pedal unit, N.
    pub brake_gain: f64,
    /// Upshift once engine speed would exceed this fraction of the maximum.
    pub shift_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            n_laps: 1,
            k_v: 3000.0,
            lookahead_time: 1.0,
            a_brake: 6.0,
            corridor_half_width: 5.0,
            brake_gain: 100.0,
            shift_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub psi_dot: f64,
    pub delta: f64,
    pub throttle: f64,
    pub brake: f64,
    pub v_des: f64,
    pub a_y: f64,
    pub e_y: f64,
    pub e_psi: f64,
    pub s: f64,
    pub kappa: f64,
    pub gear: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub dt: f64,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn duration(&self) -> f64 {
        self.rows.len() as f64 * self.dt
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        if self.rows.is_empty() {
            w.write_record([
                "t", "x", "y", "psi", "v_x", "v_y", "psi_dot", "delta", "throttle", "brake", "v_des", "a_y", "e_y",
                "e_psi", "s", "kappa", "gear",
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimFailureKind {
    Invalid(String),
    LeftCorridor { t: f64, e_y: f64 },
    NonFinite { t: f64 },
    Stalled { t: f64 },
}

/// A failed run, carrying everything recorded up to the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFailure {
    pub kind: SimFailureKind,
    pub trace: SimTrace,
}

impl fmt::Display for SimFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SimFailureKind::Invalid(m) => write!(f, "invalid simulation setup: {m}"),
            SimFailureKind::LeftCorridor { t, e_y } => write!(f, "left the track corridor at t={t:.2} s (e_y={e_y:.3} m)"),
            SimFailureKind::NonFinite { t } => write!(f, "state became non-finite at t={t:.2} s"),
            SimFailureKind::Stalled { t } => write!(f, "lap not finished by t={t:.2} s"),
        }
    }
}

impl std::error::Error for SimFailure {}

impl From<SimFailure> for Error {
    fn from(f: SimFailure) -> Self {
        match f.kind {
            SimFailureKind::Invalid(m) => Error::invalid(m),
            _ => Error::numeric(f.to_string()),
        }
    }
}

/// Everything `run_lap` drives.
pub struct SimSetup<'a> {
    pub track: &'a TrackPath,
    pub planner: &'a PlannerParams,
    pub gains: &'a LqrGainTable,
    pub engine: &'a EngineTorqueMap,
    pub tires: &'a AxleTires,
    pub vehicle: &'a VehicleParams,
    pub geometry: &'a ChassisGeometry,
}

fn select_gear(v_x: f64, vp: &VehicleParams, shift_fraction: f64) -> Result<(u32, f64)> {
    let top = vp.gear_ratios.len() as u32;
    for g in 1..=top {
        let rpm = vp.engine_rpm(v_x, g)?;
        if rpm <= shift_fraction * vp.max_engine_rpm || g == top {
            return Ok((g, rpm));
        }
    }
    unreachable!()
}

/// Drives `n_laps` laps from the start line, beginning on the centerline at the
/// planned speed.
pub fn run_lap(setup: &SimSetup<'_>, cfg: &SimConfig) -> std::result::Result<SimTrace, SimFailure> {
    let mut trace = SimTrace { dt: cfg.dt, rows: Vec::new() };
    let fail = |kind, trace: SimTrace| SimFailure { kind, trace };
    let invalid = |e: Error| fail(SimFailureKind::Invalid(e.to_string()), SimTrace { dt: cfg.dt, rows: Vec::new() });

    if !(cfg.dt > 0.0 && cfg.dt <= 0.02) {
        return Err(invalid(Error::invalid("dt must be in (0, 0.02]")));
    }
    if !(cfg.k_v > 0.0 && cfg.lookahead_time >= 0.0 && cfg.corridor_half_width > 0.0 && cfg.brake_gain > 0.0) {
        return Err(invalid(Error::invalid("controller gains and corridor must be positive")));
    }
    setup.planner.validate().map_err(invalid)?;
    setup.vehicle.validate().map_err(invalid)?;
    if cfg.n_laps == 0 {
        return Ok(trace);
    }

    let (track, vp) = (setup.track, setup.vehicle);
    let a_y_max = setup.planner.a_y_max(vp);
    let kappa: Vec<f64> = track.samples()[..track.len()].iter().map(|s| s.kappa).collect();
    let profile = plan_velocity_profile(&kappa, track.spacing(), a_y_max, setup.planner.v_cap, cfg.a_brake)
        .map_err(invalid)?;
    let v_min = profile.iter().cloned().fold(f64::INFINITY, f64::min);
    let target = cfg.n_laps as f64 * track.length();
    let t_max = 3.0 * target / v_min.max(1.0) + 60.0;

    let start = track.samples()[0];
    let mut state = VehicleState {
        x: start.x,
        y: start.y,
        psi: start.heading,
        v_x: profile[0],
        ..Default::default()
    };
    let mut segment = 0usize;
    let mut prev_s = start.s;
    let mut travelled = 0.0;
    let mut t = 0.0;

    while travelled < target {
        if t > t_max {
            return Err(fail(SimFailureKind::Stalled { t }, trace));
        }
        let proj = track.project(state.x, state.y, Some(segment));
        segment = proj.segment;
        let ds = proj.s - prev_s;
        travelled += ds - track.length() * (ds / track.length()).round();
        prev_s = proj.s;

        let e_psi = wrap_angle(state.psi - proj.heading);
        if proj.e_y.abs() > cfg.corridor_half_width {
            return Err(fail(SimFailureKind::LeftCorridor { t, e_y: proj.e_y }, trace));
        }
        let xi = LateralErrorState {
            e_y: proj.e_y,
            e_y_dot: state.v_y * e_psi.cos() + state.v_x * e_psi.sin(),
            e_psi,
            e_psi_dot: state.psi_dot - proj.kappa * state.v_x,
        };
        let delta = steering_command(&xi, state.v_x, setup.gains);

        let i0 = track.index_at(proj.s);
        let ahead = ((state.v_x * cfg.lookahead_time) / track.spacing()).ceil() as usize;
        let v_des = (0..=ahead)
            .map(|k| profile[(i0 + k) % profile.len()])
            .fold(f64::INFINITY, f64::min);
        let f_des = cfg.k_v * (v_des - state.v_x);

        let (gear, rpm) = select_gear(state.v_x, vp, cfg.shift_fraction).map_err(invalid)?;
        let grid = &setup.engine.speed_grid;
        let rpm = rpm.clamp(grid[0], grid[grid.len() - 1]);
        let gain = vp.driveline_gain(gear).map_err(invalid)?;
        let (throttle, pedal) = if f_des >= 0.0 {
            (inverse_throttle(setup.engine, rpm, f_des / gain).map_err(invalid)?, 0.0)
        } else {
            (0.0, brake_force_to_pedal(-f_des, cfg.brake_gain))
        };
        let torque = setup.engine.torque_at(rpm, throttle).map_err(invalid)?;
        let brake = if state.v_x > 0.0 { pedal_to_brake_force(pedal, cfg.brake_gain) } else { 0.0 };
        let f_x = torque * gain - brake;

        let a_y = derivatives(&state, delta, f_x, setup.tires, vp, setup.geometry).1;
        trace.rows.push(TraceRow {
            t,
            x: state.x,
            y: state.y,
            psi: state.psi,
            v_x: state.v_x,
            v_y: state.v_y,
            psi_dot: state.psi_dot,
            delta,
            throttle,
            brake: pedal,
            v_des,
            a_y,
            e_y: proj.e_y,
            e_psi,
            s: proj.s,
            kappa: proj.kappa,
            gear,
        });

        state = match step(&state, delta, f_x, cfg.dt, setup.tires, vp, setup.geometry) {
            Ok(s) => s,
            Err(_) => return Err(fail(SimFailureKind::NonFinite { t }, trace)),
        };
        t = trace.rows.len() as f64 * cfg.dt;
    }
    Ok(trace)
}

/// Headline numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapSummary {
    pub duration: f64,
    pub max_abs_e_y: f64,
    pub max_abs_e_psi: f64,
    /// Largest `|a_y|` over the middle half of each corner.
    pub steady_corner_max_a_y: f64,
    /// Mean speed over the middle half of each corner.
    pub steady_corner_speed: f64,
    pub max_speed: f64,
    pub planner_a_y_max: f64,
}

/// Marks track samples lying in the middle half of a constant-curvature arc.
fn steady_corner_mask(track: &TrackPath) -> Vec<bool> {
    let k: Vec<f64> = track.samples()[..track.len()].iter().map(|s| s.kappa).collect();
    let n = k.len();
    let mut mask = vec![false; n];
    let Some(start) = (0..n).find(|&i| k[i] != k[(i + n - 1) % n]) else {
        return mask;
    };
    let mut i = start;
    loop {
        let mut j = i;
        let mut len = 0;
        while k[j % n] == k[i % n] && len < n {
            j += 1;
            len += 1;
        }
        if k[i % n] != 0.0 {
            for m in (i + len / 4)..(i + len - len / 4) {
                mask[m % n] = true;
            }
        }
        i = j;
        if (i - start) >= n {
            break;
        }
    }
    mask
}

pub fn summarize(trace: &SimTrace, track: &TrackPath, planner_a_y_max: f64) -> LapSummary {
    let mask = steady_corner_mask(track);
    let steady: Vec<&TraceRow> = trace.rows.iter().filter(|r| mask[track.index_at(r.s)]).collect();
    let max_abs = |f: &dyn Fn(&TraceRow) -> f64, rows: &mut dyn Iterator<Item = &TraceRow>| {
        rows.map(|r| f(r).abs()).fold(0.0, f64::max)
    };
    LapSummary {
        duration: trace.duration(),
        max_abs_e_y: max_abs(&|r| r.e_y, &mut trace.rows.iter()),
        max_abs_e_psi: max_abs(&|r| r.e_psi, &mut trace.rows.iter()),
        steady_corner_max_a_y: max_abs(&|r| r.a_y, &mut steady.iter().copied()),
        steady_corner_speed: if steady.is_empty() {
            0.0
        } else {
            steady.iter().map(|r| r.v_x).sum::<f64>() / steady.len() as f64
        },
        max_speed: max_abs(&|r| r.v_x, &mut trace.rows.iter()),
        planner_a_y_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sim::make_oval;

    struct Owned {
        track: TrackPath,
        planner: PlannerParams,
        gains: LqrGainTable,
        engine: EngineTorqueMap,
        tires: AxleTires,
        vehicle: VehicleParams,
        geometry: ChassisGeometry,
    }

    impl Owned {
        fn new(track: TrackPath, mu: f64) -> Self {
            Owned {
                track,
                planner: fixtures::planner(mu),
                gains: fixtures::gain_table(),
                engine: fixtures::engine_map(),
                tires: fixtures::axle_tires(),
                vehicle: fixtures::vehicle(),
                geometry: fixtures::geometry(),
            }
        }

        fn setup(&self) -> SimSetup<'_> {
            SimSetup {
                track: &self.track,
                planner: &self.planner,
                gains: &self.gains,
                engine: &self.engine,
                tires: &self.tires,
                vehicle: &self.vehicle,
                geometry: &self.geometry,
            }
        }
    }

    #[test]
    fn zero_laps_is_empty() {
        let o = Owned::new(make_oval(100.0, 50.0, 1.0).unwrap(), 0.7);
        let cfg = SimConfig { n_laps: 0, ..Default::default() };
        assert!(run_lap(&o.setup(), &cfg).unwrap().rows.is_empty());
    }

    #[test]
    fn two_laps_take_twice_as_long() {
        let o = Owned::new(make_oval(150.0, 60.0, 1.0).unwrap(), 0.7);
        let one = run_lap(&o.setup(), &SimConfig::default()).unwrap();
        let two = run_lap(&o.setup(), &SimConfig { n_laps: 2, ..Default::default() }).unwrap();
        let ratio = two.duration() / one.duration();
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
        assert!(one.rows.windows(2).all(|w| (w[1].t - w[0].t - 0.01).abs() < 1e-9));
    }

    #[test]
    fn tiny_corridor_fails_with_trace() {
        let o = Owned::new(make_oval(150.0, 60.0, 1.0).unwrap(), 0.7);
        let cfg = SimConfig { corridor_half_width: 1e-4, ..Default::default() };
        let err = run_lap(&o.setup(), &cfg).unwrap_err();
        assert!(matches!(err.kind, SimFailureKind::LeftCorridor { .. }));
        assert!(!err.trace.rows.is_empty());
    }

    #[test]
    fn corner_mask_covers_middle_half() {
        let t = make_oval(100.0, 100.0 / std::f64::consts::PI, 1.0).unwrap();
        let m = steady_corner_mask(&t);
        let n = m.iter().filter(|b| **b).count();
        assert!((n as i64 - 100).abs() <= 4, "{n}");
        assert!(!m[50]);
        assert!(m[150]);
    }

    #[test]
    fn trace_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        SimTrace { dt: 0.01, rows: vec![] }.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,x,y,psi,v_x,v_y,psi_dot,delta,throttle,brake,v_des,a_y,e_y,e_psi,s,kappa,gear"));
    }
}
