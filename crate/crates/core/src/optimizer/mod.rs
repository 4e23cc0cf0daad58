//! Hyperband-style model identification with Gaussian-mutation evaluation.

mod config;
mod hyperband;
mod mutation;
pub(crate) mod report;
mod schedule;
mod space;

pub use config::{GboSection, Method, OptimizerConfig, PsoSection};
pub use hyperband::{run_mihpo, select_top_k, MihpoSettings};
pub use mutation::{eval_with_mutation, MutationOutcome, MutationPolicy};
pub use report::{BracketTrace, CurvePoint, OptimizationReport, Termination};
pub use schedule::{Bracket, HyperbandSchedule, Rung};
pub use space::{sample_configs, ParamConfig, ParamSpace, ParamSpec};

/// A black-box loss over a parameter vector.
///
/// Implementations must be deterministic for fixed inputs. A non-finite return
/// value marks a failed evaluation; optimizers treat it as `+inf`.
pub trait Objective: Sync {
    fn evaluate(&self, params: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, params: &[f64]) -> f64 {
        self(params)
    }
}

/// Maps NaN and infinities to `+inf` so they lose every comparison.
#[inline]
pub(crate) fn sanitize_loss(loss: f64) -> f64 {
    if loss.is_finite() {
        loss
    } else {
        f64::INFINITY
    }
}
