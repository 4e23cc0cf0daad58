//! Parametric model families and the data preparation that feeds them.

mod brake;
mod drivelog;
mod engine;
mod fit;
mod tire;
mod vehicle;

pub use brake::{brake_force_to_pedal, pedal_to_brake_force, BrakeModel};
pub use drivelog::{derive_engine_samples, forward_longitudinal_accel, load_drive_log, DriveLogSample, ThrottleDataset};
pub use engine::{engine_torque, least_squares_cubic, EngineCurveModel, EngineCurveParams};
pub use fit::{fit_engine_curve, fit_tire, FitOptions, FittedModel, FittedParams};
pub use tire::{tire_lateral_force, TireModel, TireParams};
pub use vehicle::{ChassisGeometry, VehicleParams};

/// A model family `y = f(x; p)` with a fixed number of inputs and parameters.
pub trait ParametricModel: Sync {
    fn name(&self) -> &str;
    fn param_names(&self) -> &[&'static str];
    fn input_dim(&self) -> usize;
    fn input_names(&self) -> &[&'static str];
    fn output_name(&self) -> &'static str;
    fn predict(&self, x: &[f64], params: &[f64]) -> f64;
}
