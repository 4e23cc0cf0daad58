//! Cubic engine torque curve per throttle command, over engine speed normalized
//! to `[0, 1]` by the maximum engine speed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ParametricModel;
use crate::error::{Error, Result};
use crate::objective::Dataset;
use crate::optimizer::{ParamSpace, ParamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineCurveParams {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    /// Throttle command this curve belongs to, percent in `(0, 100]`.
    pub throttle: f64,
}

impl EngineCurveParams {
    pub const NAMES: [&'static str; 4] = ["p0", "p1", "p2", "p3"];

    pub fn new(coeffs: [f64; 4], throttle: f64) -> Result<Self> {
        let p = EngineCurveParams {
            p0: coeffs[0],
            p1: coeffs[1],
            p2: coeffs[2],
            p3: coeffs[3],
            throttle,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn coeffs(&self) -> [f64; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs().iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("engine curve coefficients must be finite"));
        }
        if !(self.throttle > 0.0 && self.throttle <= 100.0) {
            return Err(Error::invalid(format!(
                "throttle label must be in (0, 100], got {}",
                self.throttle
            )));
        }
        Ok(())
    }

    /// Polynomial value without the domain check.
    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        horner(&self.coeffs(), w)
    }

    /// Prior centered on a flat curve at the data's mean torque, with spreads
    /// scaled to the data's torque range.
    pub fn default_space(data: &Dataset) -> Result<ParamSpace> {
        let ys = data.outputs();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let (lo, hi) = ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        let scale = (hi - lo).max(mean.abs()).max(1.0);
        ParamSpace::new(vec![
            ParamSpec::new("p0", mean, scale, mean - 4.0 * scale, mean + 4.0 * scale),
            ParamSpec::new("p1", 0.0, 2.0 * scale, -16.0 * scale, 16.0 * scale),
            ParamSpec::new("p2", 0.0, 2.0 * scale, -16.0 * scale, 16.0 * scale),
            ParamSpec::new("p3", 0.0, 2.0 * scale, -16.0 * scale, 16.0 * scale),
        ])
    }
}

#[inline]
fn horner(c: &[f64], w: f64) -> f64 {
    ((c[3] * w + c[2]) * w + c[1]) * w + c[0]
}

/// Torque at normalized engine speed `w_norm`, which must lie in `[0, 1]`.
pub fn engine_torque(w_norm: f64, p: &EngineCurveParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&w_norm) {
        return Err(Error::invalid(format!(
            "normalized engine speed {w_norm} outside [0, 1]"
        )));
    }
    Ok(p.eval(w_norm))
}

/// Input: normalized engine speed. Parameters: `[p0, p1, p2, p3]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EngineCurveModel;

impl ParametricModel for EngineCurveModel {
    fn name(&self) -> &str {
        "engine_curve"
    }

    fn param_names(&self) -> &[&'static str] {
        &EngineCurveParams::NAMES
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn input_names(&self) -> &[&'static str] {
        &["engine_speed_norm"]
    }

    fn output_name(&self) -> &'static str {
        "torque_nm"
    }

    #[inline]
    fn predict(&self, x: &[f64], p: &[f64]) -> f64 {
        horner(p, x[0])
    }
}

/// Closed-form least-squares cubic `[p0, p1, p2, p3]` via SVD of the Vandermonde
/// matrix. Used as the reference a search-based fit is judged against.
pub fn least_squares_cubic(data: &Dataset) -> Result<[f64; 4]> {
    if data.input_dim() != 1 {
        return Err(Error::invalid("cubic fit needs one input column"));
    }
    let n = data.len();
    let design = DMatrix::from_fn(n, 4, |i, j| data.input(i)[0].powi(j as i32));
    let rhs = DVector::from_column_slice(data.outputs());
    let svd = design.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::numeric(format!("least-squares solve failed: {e}")))?;
    Ok([sol[0], sol[1], sol[2], sol[3]])
}
