use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ChassisGeometry, TireParams, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub psi_dot: f64,
}

/// Axle-level lateral tire curves: each gives the summed force of both tires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxleTires {
    pub front: TireParams,
    pub rear: TireParams,
}

/// Below this speed the lateral states follow kinematic steering.
const KINEMATIC_SPEED: f64 = 1.0;

impl VehicleState {
    fn to_array(self) -> [f64; 6] {
        [self.x, self.y, self.psi, self.v_x, self.v_y, self.psi_dot]
    }

    fn from_array(a: [f64; 6]) -> Self {
        VehicleState {
            x: a[0],
            y: a[1],
            psi: a[2],
            v_x: a[3],
            v_y: a[4],
            psi_dot: a[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Axle lateral forces `(F_yf, F_yr)` at the current state.
pub fn axle_forces(s: &VehicleState, delta: f64, tires: &AxleTires, geom: &ChassisGeometry) -> (f64, f64) {
    let alpha_f = delta - (s.v_y + geom.l_f * s.psi_dot).atan2(s.v_x);
    let alpha_r = -(s.v_y - geom.l_r * s.psi_dot).atan2(s.v_x);
    (tires.front.lateral_force(alpha_f), tires.rear.lateral_force(alpha_r))
}

/// State derivative and lateral acceleration for steering `delta` and
/// longitudinal force `f_x` at the wheels.
pub fn derivatives(
    s: &VehicleState,
    delta: f64,
    f_x: f64,
    tires: &AxleTires,
    vp: &VehicleParams,
    geom: &ChassisGeometry,
) -> ([f64; 6], f64) {
    let (fyf, fyr) = axle_forces(s, delta, tires, geom);
    let m = vp.mass;
    let a_y = (fyr + fyf * delta.cos()) / m;
    let resist = if s.v_x > 0.0 { vp.resistance(s.v_x) } else { 0.0 };
    let d = [
        s.v_x * s.psi.cos() - s.v_y * s.psi.sin(),
        s.v_x * s.psi.sin() + s.v_y * s.psi.cos(),
        s.psi_dot,
        (f_x - fyf * delta.sin() - resist) / m + s.v_y * s.psi_dot,
        a_y - s.v_x * s.psi_dot,
        (geom.l_f * fyf * delta.cos() - geom.l_r * fyr) / geom.yaw_inertia,
    ];
    (d, a_y)
}

/// One fourth-order Runge–Kutta step with inputs held over the step.
pub fn step(
    s: &VehicleState,
    delta: f64,
    f_x: f64,
    dt: f64,
    tires: &AxleTires,
    vp: &VehicleParams,
    geom: &ChassisGeometry,
) -> Result<VehicleState> {
    if !(dt > 0.0 && dt <= 0.02) {
        return Err(Error::invalid(format!("time step {dt} outside (0, 0.02]")));
    }
    let f = |st: &[f64; 6]| derivatives(&VehicleState::from_array(*st), delta, f_x, tires, vp, geom).0;
    let y0 = s.to_array();
    let add = |a: &[f64; 6], k: &[f64; 6], h: f64| std::array::from_fn::<f64, 6, _>(|i| a[i] + h * k[i]);
    let k1 = f(&y0);
    let k2 = f(&add(&y0, &k1, dt / 2.0));
    let k3 = f(&add(&y0, &k2, dt / 2.0));
    let k4 = f(&add(&y0, &k3, dt));
    let y1: [f64; 6] = std::array::from_fn(|i| y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    let mut next = VehicleState::from_array(y1);
    next.v_x = next.v_x.max(0.0);
    if next.v_x < KINEMATIC_SPEED {
        let l = geom.wheelbase();
        next.psi_dot = next.v_x * delta.tan() / l;
        next.v_y = next.v_x * geom.l_r / l * delta.tan();
    }
    if !next.is_finite() {
        return Err(Error::numeric(format!("simulation state became non-finite: {next:?}")));
    }
    Ok(next)
}
