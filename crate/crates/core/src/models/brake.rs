//! Affine brake placeholder: brake force is proportional to pedal travel.

use super::ParametricModel;

/// Pedal command in `[0, 100]` producing `force` with gain `gain` (N per pedal
/// unit). Saturates at both ends.
pub fn brake_force_to_pedal(force: f64, gain: f64) -> f64 {
    (force / gain).clamp(0.0, 100.0)
}

pub fn pedal_to_brake_force(pedal: f64, gain: f64) -> f64 {
    pedal.clamp(0.0, 100.0) * gain
}

/// Input: pedal command. Parameter: `[gain]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrakeModel;

impl ParametricModel for BrakeModel {
    fn name(&self) -> &str {
        "brake"
    }

    fn param_names(&self) -> &[&'static str] {
        &["k_b"]
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn input_names(&self) -> &[&'static str] {
        &["pedal"]
    }

    fn output_name(&self) -> &'static str {
        "brake_force_n"
    }

    fn predict(&self, x: &[f64], p: &[f64]) -> f64 {
        pedal_to_brake_force(x[0], p[0])
    }
}
