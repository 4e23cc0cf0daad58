use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Execution, Executor};
use crate::optimizer::{sanitize_loss, Objective, OptimizationReport, ParamConfig, ParamSpace, Termination};
use crate::optimizer::report::CurveBuilder;
use crate::rng::{self, TAG_GBO_INIT};

/// Fixed-step gradient descent with central finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GboSettings {
    pub learning_rate: f64,
    pub max_evaluations: u64,
    /// Relative step: each coordinate is probed at `p ± fd_step * max(|p|, 1)`.
    pub fd_step: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl GboSettings {
    pub fn new(learning_rate: f64, max_evaluations: u64, fd_step: f64) -> Result<Self> {
        // lr = 0 is accepted so a run can be used as a fixed-point probe
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be non-negative, got {learning_rate}")));
        }
        if !(fd_step > 0.0 && fd_step.is_finite()) {
            return Err(Error::invalid(format!("fd_step must be positive, got {fd_step}")));
        }
        if max_evaluations == 0 {
            return Err(Error::invalid("max_evaluations must be positive"));
        }
        Ok(GboSettings {
            learning_rate,
            max_evaluations,
            fd_step,
            execution: Execution::Serial,
        })
    }
}

/// Runs GBO from a point drawn from the space's prior with `seed`.
pub fn run_gbo<O>(space: &ParamSpace, objective: &O, settings: &GboSettings, seed: u64) -> Result<OptimizationReport>
where
    O: Objective + ?Sized,
{
    let mut r = rng::stream(seed, rng::stream_key(TAG_GBO_INIT, 0, 0, 0));
    let mut start: Vec<f64> = space
        .specs()
        .iter()
        .map(|s| s.mean + s.std_dev * r.sample::<f64, _>(StandardNormal))
        .collect();
    space.clamp(&mut start);
    run_gbo_from(space, objective, settings, start)
}

/// Runs GBO from `start`. Each iteration costs one evaluation at the iterate and
/// two per coordinate for the gradient.
pub fn run_gbo_from<O>(
    space: &ParamSpace,
    objective: &O,
    settings: &GboSettings,
    start: Vec<f64>,
) -> Result<OptimizationReport>
where
    O: Objective + ?Sized,
{
    space.check_dimension(&start)?;
    let clock = Instant::now();
    let n = space.len();
    let per_iter = 2 * n as u64 + 1;
    let exec = Executor::new(settings.execution);

    let mut p = start;
    space.clamp(&mut p);
    let mut curve = CurveBuilder::default();
    let mut evals = 0u64;
    let mut best = ParamConfig::new(p.clone());
    let mut start_loss = None;
    let mut termination = Termination::BudgetExhausted;
    let mut iteration = 0u64;

    while evals + per_iter <= settings.max_evaluations {
        let loss = sanitize_loss(objective.evaluate(&p));
        evals += 1;
        let start_loss = *start_loss.get_or_insert(loss);
        if curve.offer(evals, loss) || best.loss.is_none() {
            best = ParamConfig::with_loss(p.clone(), loss);
        }
        if !loss.is_finite() || loss > start_loss {
            termination = Termination::Diverged { iteration, loss };
            break;
        }

        let probes: Vec<(usize, f64)> = (0..n)
            .flat_map(|i| {
                let h = settings.fd_step * p[i].abs().max(1.0);
                [(i, h), (i, -h)]
            })
            .collect();
        let values = exec.map_indexed(probes, |_, (i, h)| {
            let mut q = p.clone();
            q[i] += h;
            objective.evaluate(&q)
        });
        evals += 2 * n as u64;
        let grad: Vec<f64> = (0..n)
            .map(|i| {
                let h = settings.fd_step * p[i].abs().max(1.0);
                (values[2 * i] - values[2 * i + 1]) / (2.0 * h)
            })
            .collect();
        if grad.iter().any(|g| !g.is_finite()) {
            termination = Termination::NonFiniteGradient { iteration };
            break;
        }
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= settings.learning_rate * g;
        }
        space.clamp(&mut p);
        iteration += 1;
    }
    if evals == 0 {
        return Err(Error::invalid(format!(
            "budget {} is below one GBO iteration ({per_iter} evaluations)",
            settings.max_evaluations
        )));
    }
    best.resource_spent = evals;
    Ok(OptimizationReport {
        method: "gbo".into(),
        best_config: best,
        loss_curve: curve.finish(evals),
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        total_evaluations: evals,
        bracket_traces: Vec::new(),
        termination,
    })
}
