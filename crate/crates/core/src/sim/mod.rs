//! Closed-loop simulation of the planner and controllers on a bicycle model.

mod closed_loop;
mod dynamics;
mod track;

pub use closed_loop::{run_lap, summarize, LapSummary, SimConfig, SimFailure, SimFailureKind, SimSetup, SimTrace, TraceRow};
pub use dynamics::{derivatives, step, AxleTires, VehicleState};
pub use track::{make_oval, Projection, TrackPath, TrackSample};
