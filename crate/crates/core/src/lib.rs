//! Model parameter identification for vehicle dynamics models.
//!
//! The centerpiece is [`optimizer::run_mihpo`], a Hyperband-style search in which
//! every resource unit spent on a configuration is a Gaussian-mutation hill-climbing
//! step. Around it sit the objective and data plumbing, the parametric model zoo
//! (offset magic-formula tire, cubic engine torque curves, affine brake), two
//! reference optimizers for comparison, the planning and control computations that
//! consume fitted parameters, and a small closed-loop simulator.

pub mod baselines;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod models;
pub mod objective;
pub mod optimizer;
pub mod planning;
pub(crate) mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;
