//! Magic-formula lateral tire model with horizontal and vertical offsets:
//!
//! `F_y = D sin(C atan(B (alpha + S_x))) + S_y`

use serde::{Deserialize, Serialize};

use super::ParametricModel;
use crate::error::{Error, Result};
use crate::optimizer::{ParamSpace, ParamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TireParams {
    /// Stiffness factor.
    #[serde(rename = "B")]
    pub b: f64,
    /// Shape factor.
    #[serde(rename = "C")]
    pub c: f64,
    /// Peak factor, N.
    #[serde(rename = "D")]
    pub d: f64,
    /// Horizontal shift, rad.
    #[serde(rename = "S_x")]
    pub s_x: f64,
    /// Vertical shift, N.
    #[serde(rename = "S_y")]
    pub s_y: f64,
}

impl TireParams {
    pub const NAMES: [&'static str; 5] = ["B", "C", "D", "S_x", "S_y"];

    pub const fn new(b: f64, c: f64, d: f64, s_x: f64, s_y: f64) -> Self {
        TireParams { b, c, d, s_x, s_y }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v {
            &[b, c, d, s_x, s_y] => {
                let p = TireParams { b, c, d, s_x, s_y };
                p.validate()?;
                Ok(p)
            }
            _ => Err(Error::invalid(format!("tire model takes 5 parameters, got {}", v.len()))),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.b, self.c, self.d, self.s_x, self.s_y]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.c > 0.0 && self.d > 0.0) {
            return Err(Error::invalid(format!(
                "tire factors B, C, D must be positive, got {}, {}, {}",
                self.b, self.c, self.d
            )));
        }
        if !(self.s_x.is_finite() && self.s_y.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()) {
            return Err(Error::invalid("tire parameters must be finite"));
        }
        Ok(())
    }

    pub fn lateral_force(&self, alpha: f64) -> f64 {
        self.d * (self.c * (self.b * (alpha + self.s_x)).atan()).sin() + self.s_y
    }

    /// Analytic `dF_y / d alpha`.
    pub fn slope(&self, alpha: f64) -> f64 {
        let u = self.b * (alpha + self.s_x);
        self.d * (self.c * u.atan()).cos() * self.c * self.b / (1.0 + u * u)
    }

    /// A broad prior for fitting: positive factors, small offsets.
    pub fn default_space() -> ParamSpace {
        ParamSpace::new(vec![
            ParamSpec::new("B", 10.0, 4.0, 1.0, 30.0),
            ParamSpec::new("C", 1.5, 0.4, 0.5, 2.5),
            ParamSpec::new("D", 5000.0, 2000.0, 500.0, 12_000.0),
            ParamSpec::new("S_x", 0.0, 0.02, -0.05, 0.05),
            ParamSpec::new("S_y", 0.0, 300.0, -1000.0, 1000.0),
        ])
        .expect("static space is valid")
    }
}

pub fn tire_lateral_force(alpha: f64, p: &TireParams) -> f64 {
    p.lateral_force(alpha)
}

/// Input: slip angle (rad). Parameters: `[B, C, D, S_x, S_y]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TireModel;

impl ParametricModel for TireModel {
    fn name(&self) -> &str {
        "tire"
    }

    fn param_names(&self) -> &[&'static str] {
        &TireParams::NAMES
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn input_names(&self) -> &[&'static str] {
        &["alpha_rad"]
    }

    fn output_name(&self) -> &'static str {
        "fy_n"
    }

    #[inline]
    fn predict(&self, x: &[f64], p: &[f64]) -> f64 {
        p[2] * (p[1] * (p[0] * (x[0] + p[3])).atan()).sin() + p[4]
    }
}
