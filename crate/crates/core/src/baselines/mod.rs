//! Reference optimizers sharing the black-box objective interface.

mod gbo;
mod pso;

pub use gbo::{run_gbo, run_gbo_from, GboSettings};
pub use pso::{run_pso, run_pso_from, PsoSettings};
