use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::space::ParamConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub evaluations: u64,
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketTrace {
    pub s: u32,
    /// Best loss among the configs of each rung, after their evaluation.
    pub rung_best: Vec<f64>,
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// Every bracket and rung ran.
    Completed,
    /// The evaluation budget was spent.
    BudgetExhausted,
    /// The iterate's loss went above its starting loss.
    Diverged { iteration: u64, loss: f64 },
    /// A finite-difference gradient came back non-finite.
    NonFiniteGradient { iteration: u64 },
}

/// Outcome of one optimizer run.
///
/// Wall time is kept out of the serialized form so reports from two runs with
/// the same seed compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub method: String,
    pub best_config: ParamConfig,
    /// Best-so-far loss at every improvement, closed with a point at
    /// `total_evaluations`.
    pub loss_curve: Vec<CurvePoint>,
    #[serde(skip)]
    pub wall_time_seconds: f64,
    pub total_evaluations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bracket_traces: Vec<BracketTrace>,
    pub termination: Termination,
}

impl OptimizationReport {
    pub fn best_loss(&self) -> f64 {
        self.best_config.loss.unwrap_or(f64::INFINITY)
    }

    /// First evaluation count at which the best-so-far loss was at or below
    /// `threshold`.
    pub fn evaluations_to_reach(&self, threshold: f64) -> Option<u64> {
        self.loss_curve
            .iter()
            .find(|p| p.best_loss <= threshold)
            .map(|p| p.evaluations)
    }

    /// Best-so-far loss after `evaluations` objective calls.
    pub fn best_loss_at(&self, evaluations: u64) -> f64 {
        self.loss_curve
            .iter()
            .take_while(|p| p.evaluations <= evaluations)
            .last()
            .map_or(f64::INFINITY, |p| p.best_loss)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the loss curve as `evaluations,best_loss`.
    pub fn write_curve_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = String::from("evaluations,best_loss\n");
        for p in &self.loss_curve {
            out.push_str(&format!("{},{}\n", p.evaluations, p.best_loss));
        }
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Builds a best-so-far curve incrementally in evaluation order.
#[derive(Debug, Default)]
pub(crate) struct CurveBuilder {
    points: Vec<CurvePoint>,
    best: Option<f64>,
}

impl CurveBuilder {
    /// Offers a loss observed at cumulative evaluation `at`. Returns true when it
    /// improved on everything seen before.
    pub(crate) fn offer(&mut self, at: u64, loss: f64) -> bool {
        let better = self.best.is_none_or(|b| loss < b);
        if better {
            self.best = Some(loss);
            self.points.push(CurvePoint {
                evaluations: at,
                best_loss: loss,
            });
        }
        better
    }

    pub(crate) fn finish(mut self, total: u64) -> Vec<CurvePoint> {
        if let Some(best) = self.best {
            if self.points.last().is_some_and(|p| p.evaluations != total) {
                self.points.push(CurvePoint {
                    evaluations: total,
                    best_loss: best,
                });
            }
        }
        self.points
    }
}
