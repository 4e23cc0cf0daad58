use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longitudinal and roll constants of the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Total mass, kg.
    pub mass: f64,
    /// Sprung mass, kg.
    pub sprung_mass: f64,
    /// Aerodynamic drag coefficient, N s^2 / m^2.
    pub drag_coeff: f64,
    /// Rolling resistance, N.
    pub rolling_resistance: f64,
    /// Roll center to center-of-mass height, m.
    pub roll_height: f64,
    pub wheel_radius: f64,
    /// Driveline efficiency in `(0, 1]`.
    pub transmission_efficiency: f64,
    pub final_drive: f64,
    /// Gear ratios; gear `g` (1-based) uses `gear_ratios[g - 1]`.
    pub gear_ratios: Vec<f64>,
    /// Engine speed used to normalize curve inputs, rpm.
    pub max_engine_rpm: f64,
    pub track_width: f64,
    /// Nominal vertical load of one front and one rear wheel, N.
    pub nominal_wheel_load: [f64; 2],
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("sprung_mass", self.sprung_mass),
            ("drag_coeff", self.drag_coeff),
            ("rolling_resistance", self.rolling_resistance),
            ("roll_height", self.roll_height),
            ("wheel_radius", self.wheel_radius),
            ("final_drive", self.final_drive),
            ("max_engine_rpm", self.max_engine_rpm),
            ("track_width", self.track_width),
            ("nominal_wheel_load[front]", self.nominal_wheel_load[0]),
            ("nominal_wheel_load[rear]", self.nominal_wheel_load[1]),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("vehicle `{name}` must be positive, got {v}")));
            }
        }
        if !(self.transmission_efficiency > 0.0 && self.transmission_efficiency <= 1.0) {
            return Err(Error::invalid("transmission efficiency must be in (0, 1]"));
        }
        if self.gear_ratios.is_empty() || self.gear_ratios.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::invalid("gear ratios must be non-empty and positive"));
        }
        if self.sprung_mass > self.mass {
            return Err(Error::invalid("sprung mass exceeds total mass"));
        }
        Ok(())
    }

    pub fn gear_ratio(&self, gear: u32) -> Result<f64> {
        gear.checked_sub(1)
            .and_then(|i| self.gear_ratios.get(i as usize))
            .copied()
            .ok_or_else(|| {
                Error::data(format!(
                    "gear {gear} outside 1..={}",
                    self.gear_ratios.len()
                ))
            })
    }

    /// Wheel force per unit engine torque in `gear`, 1/m.
    pub fn driveline_gain(&self, gear: u32) -> Result<f64> {
        Ok(self.transmission_efficiency * self.gear_ratio(gear)? * self.final_drive / self.wheel_radius)
    }

    /// Engine speed in rpm at road speed `v_x` in `gear`.
    pub fn engine_rpm(&self, v_x: f64, gear: u32) -> Result<f64> {
        let wheel = v_x / self.wheel_radius;
        Ok(wheel * self.gear_ratio(gear)? * self.final_drive * 60.0 / std::f64::consts::TAU)
    }

    pub fn resistance(&self, v_x: f64) -> f64 {
        self.drag_coeff * v_x * v_x + self.rolling_resistance
    }
}

/// Planar chassis geometry for the bicycle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChassisGeometry {
    /// Center of mass to front axle, m.
    pub l_f: f64,
    /// Center of mass to rear axle, m.
    pub l_r: f64,
    /// Yaw moment of inertia, kg m^2.
    pub yaw_inertia: f64,
}

impl ChassisGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_f > 0.0 && self.l_r > 0.0 && self.yaw_inertia > 0.0) {
            return Err(Error::invalid("chassis geometry must be positive"));
        }
        Ok(())
    }

    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }
}
