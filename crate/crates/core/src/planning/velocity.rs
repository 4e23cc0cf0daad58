use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{TireParams, VehicleParams};

/// Lateral load moved from the inner to the outer wheels, N.
///
/// The roll couple `m_s * a_y * h_a` divided by the track width.
pub fn lateral_load_transfer(a_y: f64, vp: &VehicleParams) -> f64 {
    vp.sprung_mass * a_y * vp.roll_height / vp.track_width
}

const PEAK_GRID: usize = 2001;

/// Largest `|F_y|` over `alpha_range`: a dense grid scan followed by golden
/// section refinement around the best node.
pub fn tire_peak_force(p: &TireParams, alpha_range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = alpha_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("empty slip-angle range [{lo}, {hi}]")));
    }
    let f = |a: f64| p.lateral_force(a).abs();
    let step = (hi - lo) / (PEAK_GRID - 1) as f64;
    let (best_i, mut best) = (0..PEAK_GRID)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    best = best.max(fc).max(fd);
    Ok(best)
}

/// Load-scaled usable lateral force of one tire or axle.
pub fn max_lateral_force(peak: f64, load: f64, nominal_load: f64, mu: f64) -> f64 {
    mu * load / nominal_load * peak
}

/// Lateral acceleration limit from the axle force limits.
pub fn max_lateral_accel(f_max_front: f64, f_max_rear: f64, delta: f64, v_x: f64, psi_dot: f64, mass: f64) -> f64 {
    (f_max_rear + f_max_front * delta.cos() - mass * v_x * psi_dot) / mass
}

/// `sqrt(a_y_max / |kappa|)` capped at `v_cap`; straights get `v_cap`.
pub fn plan_velocity(kappa: f64, a_y_max: f64, v_cap: f64) -> Result<f64> {
    if !(a_y_max >= 0.0) {
        return Err(Error::invalid(format!("lateral acceleration limit must be >= 0, got {a_y_max}")));
    }
    if kappa == 0.0 {
        return Ok(v_cap);
    }
    Ok((a_y_max / kappa.abs()).sqrt().min(v_cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Tire performance factor in `(0, 1]`.
    pub mu: f64,
    /// Peak lateral force of the front and rear axle, N.
    pub peak_force: [f64; 2],
    /// Nominal vertical load of the front and rear axle, N.
    pub nominal_load: [f64; 2],
    pub v_cap: f64,
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::invalid(format!("mu must be in (0, 1], got {}", self.mu)));
        }
        if self.peak_force.iter().chain(&self.nominal_load).any(|f| !(*f > 0.0)) {
            return Err(Error::invalid("axle peak forces and nominal loads must be positive"));
        }
        if !(self.v_cap > 0.0 && self.v_cap.is_finite()) {
            return Err(Error::invalid("v_cap must be positive"));
        }
        Ok(())
    }

    /// Usable force of each axle at lateral acceleration `a_y`.
    ///
    /// Each wheel carries half the axle's nominal load and half its peak force;
    /// the load transfer is added to the outer wheel and taken from the inner
    /// one, which cannot go below zero load.
    pub fn axle_max_forces(&self, a_y: f64, vp: &VehicleParams) -> [f64; 2] {
        let dw = lateral_load_transfer(a_y, vp).abs();
        std::array::from_fn(|i| {
            let nominal = self.nominal_load[i] / 2.0;
            let peak = self.peak_force[i] / 2.0;
            let outer = max_lateral_force(peak, nominal + dw, nominal, self.mu);
            let inner = max_lateral_force(peak, (nominal - dw).max(0.0), nominal, self.mu);
            outer + inner
        })
    }

    /// Quasi-static lateral limit (`delta = 0`, `psi_dot = 0`), solved as a
    /// fixed point since the load transfer depends on the acceleration.
    pub fn a_y_max(&self, vp: &VehicleParams) -> f64 {
        let mut a = 0.0;
        for _ in 0..50 {
            let [f, r] = self.axle_max_forces(a, vp);
            let next = max_lateral_accel(f, r, 0.0, 0.0, 0.0, vp.mass);
            if (next - a).abs() <= 1e-12 * next.abs() {
                return next;
            }
            a = next;
        }
        a
    }
}

/// Speed target at each centerline sample of a closed path.
///
/// Starts from `plan_velocity` at every sample, then sweeps backward (twice
/// around, so the wrap is covered) limiting each sample so the next one is
/// reachable with deceleration `a_brake`.
pub fn plan_velocity_profile(kappa: &[f64], spacing: f64, a_y_max: f64, v_cap: f64, a_brake: f64) -> Result<Vec<f64>> {
    if !(spacing > 0.0 && a_brake > 0.0) {
        return Err(Error::invalid("spacing and braking deceleration must be positive"));
    }
    let mut v = kappa
        .iter()
        .map(|&k| plan_velocity(k, a_y_max, v_cap))
        .collect::<Result<Vec<_>>>()?;
    let n = v.len();
    for step in (0..2 * n).rev() {
        let i = step % n;
        let next = v[(i + 1) % n];
        v[i] = v[i].min((next * next + 2.0 * a_brake * spacing).sqrt());
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn load_transfer_examples() {
        let vp = VehicleParams {
            sprung_mass: 700.0,
            roll_height: 0.3,
            track_width: 1.6,
            ..fixtures::vehicle()
        };
        assert_eq!(lateral_load_transfer(0.0, &vp), 0.0);
        assert!((lateral_load_transfer(9.0, &vp) - 1181.25).abs() < 1e-9);
        assert!((lateral_load_transfer(-4.5, &vp) * 2.0 + 1181.25).abs() < 1e-9);
    }

    #[test]
    fn peak_approaches_d_for_wide_range() {
        let p = TireParams::new(10.0, 1.5, 5000.0, 0.0, 0.0);
        let peak = tire_peak_force(&p, (-2.5, 2.5)).unwrap();
        assert!((peak - 5000.0).abs() / 5000.0 < 0.01);
        let p2 = TireParams { d: 10000.0, ..p };
        let peak2 = tire_peak_force(&p2, (-2.5, 2.5)).unwrap();
        assert!((peak2 - 2.0 * peak).abs() < 1e-6 * peak);
        assert!(tire_peak_force(&p, (0.1, 0.1)).is_err());
    }

    #[test]
    fn peak_matches_brute_force() {
        let p = TireParams::new(9.5, 1.4, 5200.0, 0.008, -150.0);
        let brute = (0..=400_000)
            .map(|i| p.lateral_force(-0.3 + 0.6 * i as f64 / 400_000.0).abs())
            .fold(0.0, f64::max);
        let peak = tire_peak_force(&p, (-0.3, 0.3)).unwrap();
        assert!((peak - brute).abs() <= 1e-3 * brute);
        assert!(peak >= brute - 1e-9);
    }

    #[test]
    fn lateral_accel_examples() {
        assert_eq!(max_lateral_accel(3000.0, 4500.0, 0.0, 30.0, 0.0, 750.0), 10.0);
        assert_eq!(max_lateral_accel(0.0, 0.0, 0.0, 50.0, 0.1, 750.0), -5.0);
        let expected = (5000.0 + 4000.0 * 0.05f64.cos() - 750.0 * 8.0) / 750.0;
        assert_eq!(max_lateral_accel(4000.0, 5000.0, 0.05, 40.0, 0.2, 750.0), expected);
    }

    #[test]
    fn plan_velocity_examples() {
        assert!((plan_velocity(0.01, 4.0, 100.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(plan_velocity(0.0, 4.0, 70.0).unwrap(), 70.0);
        assert!((plan_velocity(-0.01, 16.0, 100.0).unwrap() - 40.0).abs() < 1e-12);
        assert_eq!(plan_velocity(0.01, 1e6, 70.0).unwrap(), 70.0);
        assert!(plan_velocity(0.01, -1.0, 70.0).is_err());
    }

    #[test]
    fn symmetric_axles_cancel_load_transfer() {
        let vp = fixtures::vehicle();
        let pp = fixtures::planner(0.7);
        let [f0, r0] = pp.axle_max_forces(0.0, &vp);
        let [f1, r1] = pp.axle_max_forces(5.0, &vp);
        assert!((f0 - f1).abs() < 1e-9 && (r0 - r1).abs() < 1e-9);
        assert!((f0 - 0.7 * pp.peak_force[0]).abs() < 1e-9);
        let a = pp.a_y_max(&vp);
        assert!((a - 0.7 * (pp.peak_force[0] + pp.peak_force[1]) / vp.mass).abs() < 1e-9);
    }

    #[test]
    fn profile_respects_braking() {
        let mut kappa = vec![0.0; 200];
        for k in kappa.iter_mut().skip(100).take(50) {
            *k = 0.01;
        }
        let v = plan_velocity_profile(&kappa, 1.0, 4.0, 60.0, 5.0).unwrap();
        assert!((v[120] - 20.0).abs() < 1e-12);
        for i in 0..v.len() {
            let next = v[(i + 1) % v.len()];
            assert!(v[i] * v[i] <= next * next + 2.0 * 5.0 + 1e-9);
        }
        assert!(v[99] < 60.0);
    }

    proptest! {
        #[test]
        fn eq10_linear_in_mu_and_load(peak in 1.0f64..1e4, load in 0.0f64..1e4, nom in 1.0f64..1e4, mu in 0.01f64..1.0) {
            let base = max_lateral_force(peak, load, nom, mu);
            prop_assert!((max_lateral_force(peak, load, nom, mu / 2.0) * 2.0 - base).abs() <= 1e-9 * base.max(1.0));
            prop_assert!((max_lateral_force(peak, 2.0 * load, nom, mu) - 2.0 * base).abs() <= 1e-9 * base.max(1.0));
        }

        #[test]
        fn plan_velocity_monotone(k1 in 1e-4f64..1.0, k2 in 1e-4f64..1.0, a1 in 0.0f64..30.0, a2 in 0.0f64..30.0) {
            let (klo, khi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
            let (alo, ahi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            prop_assert!(plan_velocity(khi, a1, 80.0).unwrap() <= plan_velocity(klo, a1, 80.0).unwrap());
            prop_assert!(plan_velocity(k1, alo, 80.0).unwrap() <= plan_velocity(k1, ahi, 80.0).unwrap());
        }
    }
}
