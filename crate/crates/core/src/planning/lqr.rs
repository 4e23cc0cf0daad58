//! Velocity-scheduled LQR for the 4-state lateral error model.

use nalgebra::{Matrix4, SMatrix, SVector, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ChassisGeometry, TireParams, VehicleParams};

/// `B * C * D`, the slope of the tire curve at its shifted origin.
pub fn cornering_stiffness(p: &TireParams) -> f64 {
    p.b * p.c * p.d
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LateralErrorState {
    pub e_y: f64,
    pub e_y_dot: f64,
    pub e_psi: f64,
    pub e_psi_dot: f64,
}

impl LateralErrorState {
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.e_y, self.e_y_dot, self.e_psi, self.e_psi_dot)
    }
}

/// Error-state matrices at speed `v_x`. `c_af`, `c_ar` are per-tire cornering
/// stiffnesses; each axle contributes two tires.
pub fn error_state_matrices(
    c_af: f64,
    c_ar: f64,
    mass: f64,
    geom: &ChassisGeometry,
    v_x: f64,
) -> (Matrix4<f64>, Vector4<f64>) {
    let (lf, lr, iz) = (geom.l_f, geom.l_r, geom.yaw_inertia);
    let (cf, cr) = (2.0 * c_af, 2.0 * c_ar);
    let a = Matrix4::new(
        0.0, 1.0, 0.0, 0.0,
        0.0, -(cf + cr) / (mass * v_x), (cf + cr) / mass, (-cf * lf + cr * lr) / (mass * v_x),
        0.0, 0.0, 0.0, 1.0,
        0.0, (-cf * lf + cr * lr) / (iz * v_x), (cf * lf - cr * lr) / iz, -(cf * lf * lf + cr * lr * lr) / (iz * v_x),
    );
    let b = Vector4::new(0.0, cf / mass, 0.0, cf * lf / iz);
    (a, b)
}

/// `A^T P + P A - P B R^-1 B^T P + Q`, and its Frobenius norm relative to the
/// sum of the norms of its terms.
pub fn care_residual(a: &Matrix4<f64>, b: &Vector4<f64>, q: &Matrix4<f64>, r: f64, p: &Matrix4<f64>) -> (Matrix4<f64>, f64) {
    let atp = a.transpose() * p;
    let pa = p * a;
    let pbbp = p * b * b.transpose() * p / r;
    let res = atp + pa - pbbp + q;
    let scale = atp.norm() + pa.norm() + pbbp.norm() + q.norm();
    let rel = if scale > 0.0 { res.norm() / scale } else { res.norm() };
    (res, rel)
}

fn is_hurwitz(m: &Matrix4<f64>) -> bool {
    m.complex_eigenvalues().iter().all(|e| e.re < 0.0)
}

/// Ackermann pole placement for a single-input system.
fn place_poles(a: &Matrix4<f64>, b: &Vector4<f64>, poles: [f64; 4]) -> Result<Vector4<f64>> {
    let ctrb = Matrix4::from_columns(&[*b, a * b, a * a * b, a * a * a * b]);
    let inv = ctrb
        .try_inverse()
        .ok_or_else(|| Error::numeric("error-state model is not controllable"))?;
    let id = Matrix4::identity();
    let mut phi = id;
    for p in poles {
        phi *= a - id * p;
    }
    let last = inv.row(3);
    Ok((last * phi).transpose())
}

/// Solves `A_c^T P + P A_c + W = 0` through its 16x16 Kronecker form.
fn lyapunov(ac: &Matrix4<f64>, w: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let mut m = SMatrix::<f64, 16, 16>::zeros();
    let at = ac.transpose();
    // column-major vec: vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    for j in 0..4 {
        for i in 0..4 {
            let row = j * 4 + i;
            for k in 0..4 {
                m[(row, j * 4 + k)] += at[(i, k)];
                m[(row, k * 4 + i)] += ac[(k, j)];
            }
        }
    }
    let rhs = SVector::<f64, 16>::from_iterator(w.iter().map(|x| -x));
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numeric("Lyapunov system is singular"))?;
    let p = Matrix4::from_iterator(x.iter().copied());
    Ok((p + p.transpose()) / 2.0)
}

const RESIDUAL_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 60;

/// Continuous-time LQR gain by Newton–Kleinman iteration. Returns `(K, P)` with
/// `u = -K x`.
pub fn lqr_gain(a: &Matrix4<f64>, b: &Vector4<f64>, q: &Matrix4<f64>, r: f64) -> Result<(Vector4<f64>, Matrix4<f64>)> {
    if !(r > 0.0) {
        return Err(Error::invalid("control weight R must be positive"));
    }
    // start from a gain that places the closed loop near the open-loop scale
    let scale = a.norm().max(1.0);
    let mut k = place_poles(a, b, [-0.5 * scale, -0.6 * scale, -0.7 * scale, -0.8 * scale])?;
    if !is_hurwitz(&(a - b * k.transpose())) {
        return Err(Error::numeric("pole placement did not stabilize the error model"));
    }
    let mut best: Option<(f64, Vector4<f64>, Matrix4<f64>)> = None;
    for _ in 0..MAX_NEWTON {
        let ac = a - b * k.transpose();
        let p = lyapunov(&ac, &(q + k * k.transpose() * r))?;
        k = (b.transpose() * p).transpose() / r;
        let (_, rel) = care_residual(a, b, q, r, &p);
        if best.as_ref().is_none_or(|(b_rel, _, _)| rel < *b_rel) {
            best = Some((rel, k, p));
        }
        if rel <= RESIDUAL_TOL * 1e-3 {
            break;
        }
    }
    let (rel, k, p) = best.expect("at least one iteration");
    if !(rel <= RESIDUAL_TOL) {
        return Err(Error::numeric(format!("Riccati iteration stalled at relative residual {rel:e}")));
    }
    if !is_hurwitz(&(a - b * k.transpose())) {
        return Err(Error::numeric("LQR closed loop is not Hurwitz"));
    }
    Ok((k, p))
}

/// Inputs to [`lqr_gain_table`] besides the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqrDesign {
    /// Per-tire cornering stiffness, N/rad.
    pub c_af: f64,
    pub c_ar: f64,
    /// Row-major 4x4 state weight.
    pub q: [[f64; 4]; 4],
    pub r: f64,
    /// Ascending interval breakpoints, m/s.
    pub velocity_breakpoints: Vec<f64>,
    pub steering_limit: f64,
}

impl LqrDesign {
    pub fn q_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.q[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqrGainTable {
    pub velocity_intervals: Vec<f64>,
    /// One `[k1, k2, k3, k4]` row per interval.
    pub gains: Vec<[f64; 4]>,
    pub q: [[f64; 4]; 4],
    pub r: f64,
    pub steering_limit: f64,
}

impl LqrGainTable {
    /// Midpoint speed of interval `i`.
    pub fn representative_velocity(&self, i: usize) -> f64 {
        0.5 * (self.velocity_intervals[i] + self.velocity_intervals[i + 1])
    }

    /// Gain of the interval holding `v_x`; speeds outside the table use the end
    /// intervals.
    pub fn gain_at(&self, v_x: f64) -> [f64; 4] {
        let last = self.gains.len() - 1;
        let i = self.velocity_intervals[1..self.velocity_intervals.len() - 1].partition_point(|b| *b <= v_x);
        self.gains[i.min(last)]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds one gain per velocity interval at the interval midpoint.
pub fn lqr_gain_table(design: &LqrDesign, vp: &VehicleParams, geom: &ChassisGeometry) -> Result<LqrGainTable> {
    geom.validate()?;
    let bp = &design.velocity_breakpoints;
    if bp.len() < 2 || bp.windows(2).any(|w| !(w[0] < w[1])) || !(bp[0] > 0.0) {
        return Err(Error::invalid("velocity breakpoints must be positive, ascending, at least two"));
    }
    if !(design.c_af > 0.0 && design.c_ar > 0.0) {
        return Err(Error::invalid("cornering stiffnesses must be positive"));
    }
    if !(design.steering_limit > 0.0) {
        return Err(Error::invalid("steering limit must be positive"));
    }
    let q = design.q_matrix();
    if (q - q.transpose()).norm() > 1e-12 * q.norm() || q.symmetric_eigenvalues().iter().any(|e| *e < -1e-12 * q.norm()) {
        return Err(Error::invalid("Q must be symmetric positive semidefinite"));
    }
    let gains = bp
        .windows(2)
        .map(|w| {
            let v = 0.5 * (w[0] + w[1]);
            let (a, b) = error_state_matrices(design.c_af, design.c_ar, vp.mass, geom, v);
            lqr_gain(&a, &b, &q, design.r)
                .map(|(k, _)| [k[0], k[1], k[2], k[3]])
                .map_err(|e| Error::numeric(format!("interval [{}, {}] m/s: {e}", w[0], w[1])))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LqrGainTable {
        velocity_intervals: bp.clone(),
        gains,
        q: design.q,
        r: design.r,
        steering_limit: design.steering_limit,
    })
}

/// `delta = -K(v_x) xi`, saturated to the table's steering limit.
pub fn steering_command(xi: &LateralErrorState, v_x: f64, table: &LqrGainTable) -> f64 {
    let k = Vector4::from(table.gain_at(v_x));
    let delta = -k.dot(&xi.as_vector());
    delta.clamp(-table.steering_limit, table.steering_limit)
}
