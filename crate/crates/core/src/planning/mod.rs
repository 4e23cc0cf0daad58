//! Velocity planning, engine-map inversion and scheduled lateral control.

mod engine_map;
mod lqr;
mod velocity;

pub use engine_map::{build_engine_map, inverse_throttle, EngineTorqueMap, Provenance};
pub use lqr::{
    care_residual, cornering_stiffness, error_state_matrices, lqr_gain, lqr_gain_table, steering_command,
    LateralErrorState, LqrDesign, LqrGainTable,
};
pub use velocity::{
    lateral_load_transfer, max_lateral_accel, max_lateral_force, plan_velocity, plan_velocity_profile,
    tire_peak_force, PlannerParams,
};
