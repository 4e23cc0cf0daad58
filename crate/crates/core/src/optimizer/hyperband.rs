use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::mutation::{eval_with_mutation, MutationPolicy};
use super::report::{BracketTrace, CurveBuilder, OptimizationReport, Termination};
use super::schedule::HyperbandSchedule;
use super::space::{sample_configs_keyed, ParamConfig, ParamSpace};
use super::{sanitize_loss, Objective};
use crate::error::{Error, Result};
use crate::exec::{Execution, Executor};
use crate::rng::{self, TAG_MUTATE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MihpoSettings {
    /// Maximum resource (mutation iterations) per configuration.
    pub max_resource: u64,
    pub eta: u64,
    pub policy: MutationPolicy,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl MihpoSettings {
    /// Default mutation scales for `space`.
    pub fn new(space: &ParamSpace, max_resource: u64, eta: u64, seed: u64) -> Self {
        MihpoSettings {
            max_resource,
            eta,
            policy: MutationPolicy::default_for(space, seed),
            seed,
            execution: Execution::Serial,
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Keeps the `k` configs with the smallest losses, ties broken by position.
///
/// Non-finite losses rank last. The returned configs are moved out unchanged, so
/// they carry their mutated values and spent resource into the next rung.
pub fn select_top_k(configs: Vec<ParamConfig>, losses: &[f64], k: usize) -> Result<Vec<ParamConfig>> {
    if configs.len() != losses.len() {
        return Err(Error::invalid(format!(
            "select_top_k got {} configs and {} losses",
            configs.len(),
            losses.len()
        )));
    }
    if k > configs.len() {
        return Err(Error::invalid(format!(
            "cannot keep {k} of {} configs",
            configs.len()
        )));
    }
    let mut order: Vec<usize> = (0..configs.len()).collect();
    // sort_by is stable, so equal losses keep their original order
    order.sort_by(|&a, &b| sanitize_loss(losses[a]).total_cmp(&sanitize_loss(losses[b])));
    let mut slots: Vec<Option<ParamConfig>> = configs.into_iter().map(Some).collect();
    Ok(order[..k]
        .iter()
        .map(|&i| slots[i].take().expect("indices are unique"))
        .collect())
}

/// Runs every bracket of the schedule and returns the best config seen.
pub fn run_mihpo<O>(space: &ParamSpace, objective: &O, settings: &MihpoSettings) -> Result<OptimizationReport>
where
    O: Objective + ?Sized,
{
    let started = Instant::now();
    let schedule = HyperbandSchedule::new(settings.max_resource, settings.eta)?;
    if settings.policy.len() != space.len() {
        return Err(Error::invalid("mutation policy dimension does not match the space"));
    }
    let executor = Executor::new(settings.execution);

    let mut curve = CurveBuilder::default();
    let mut best: Option<ParamConfig> = None;
    let mut spent: u64 = 0;
    let mut traces = Vec::with_capacity(schedule.brackets.len());

    for bracket in &schedule.brackets {
        let s = bracket.s as u64;
        let mut pool = sample_configs_keyed(space, bracket.n as usize, settings.seed, s)?;
        let mut rung_best = Vec::with_capacity(bracket.rungs.len());

        for (j, rung) in bracket.rungs.iter().enumerate() {
            debug_assert_eq!(pool.len() as u64, rung.n_j);
            let r_j = rung.r_j;
            let outcomes = executor.map_indexed(pool, |idx, cfg| {
                let mut rng = rng::stream(
                    settings.policy.seed,
                    rng::stream_key(TAG_MUTATE, s, j as u64, idx as u64),
                );
                eval_with_mutation(cfg, r_j, objective, space, &settings.policy, &mut rng)
            });

            let mut losses = Vec::with_capacity(outcomes.len());
            let mut configs = Vec::with_capacity(outcomes.len());
            for outcome in outcomes {
                let outcome = outcome?;
                for &(at, loss) in &outcome.improvements {
                    curve.offer(spent + at, loss);
                }
                spent += outcome.evaluations;
                let loss = outcome.loss();
                if best.as_ref().is_none_or(|b| loss < b.loss.unwrap_or(f64::INFINITY)) {
                    best = Some(outcome.config.clone());
                }
                losses.push(loss);
                configs.push(outcome.config);
            }
            rung_best.push(losses.iter().copied().fold(f64::INFINITY, f64::min));
            pool = select_top_k(configs, &losses, rung.k_j as usize)?;
        }

        traces.push(BracketTrace {
            s: bracket.s,
            best_loss: rung_best.iter().copied().fold(f64::INFINITY, f64::min),
            rung_best,
        });
    }

    debug_assert_eq!(spent, schedule.total_evaluations());
    let best_config = best.ok_or_else(|| Error::numeric("no configuration was evaluated"))?;
    Ok(OptimizationReport {
        method: "mihpo".to_string(),
        best_config,
        loss_curve: curve.finish(spent),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        total_evaluations: spent,
        bracket_traces: traces,
        termination: Termination::Completed,
    })
}
