use std::cmp::Ordering;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Execution, Executor};
use crate::optimizer::report::CurveBuilder;
use crate::optimizer::{sanitize_loss, Objective, OptimizationReport, ParamConfig, ParamSpace, Termination};
use crate::rng::{self, TAG_PSO_INIT, TAG_PSO_STEP};

/// Synchronous global-best particle swarm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoSettings {
    pub n_particles: usize,
    pub inertia: f64,
    pub cognitive_coeff: f64,
    pub social_coeff: f64,
    pub max_evaluations: u64,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl PsoSettings {
    /// Constriction-factor coefficients: w = 0.729, c1 = c2 = 1.49445.
    pub fn new(n_particles: usize, max_evaluations: u64, seed: u64) -> Result<Self> {
        let s = PsoSettings {
            n_particles,
            inertia: 0.729,
            cognitive_coeff: 1.49445,
            social_coeff: 1.49445,
            max_evaluations,
            seed,
            execution: Execution::Serial,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::invalid("PSO needs at least 2 particles"));
        }
        if (self.max_evaluations as usize) < self.n_particles {
            return Err(Error::invalid(format!(
                "budget {} is below one swarm evaluation ({} particles)",
                self.max_evaluations, self.n_particles
            )));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive_coeff", self.cognitive_coeff),
            ("social_coeff", self.social_coeff),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("PSO {name} must be finite")));
            }
        }
        Ok(())
    }
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_loss: f64,
    rng: ChaCha8Rng,
}

/// Each particle's random stream is keyed by its starting position, so the
/// outcome does not depend on the order particles are listed in.
fn position_key(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    (TAG_PSO_STEP << 56) | (h >> 8)
}

fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a
            .1
            .iter()
            .zip(b.1)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            == Some(Ordering::Less),
    }
}

/// Runs PSO with particles drawn from the space's prior.
pub fn run_pso<O>(space: &ParamSpace, objective: &O, settings: &PsoSettings) -> Result<OptimizationReport>
where
    O: Objective + ?Sized,
{
    settings.validate()?;
    let mut r = rng::stream(settings.seed, rng::stream_key(TAG_PSO_INIT, 0, 0, 0));
    let start = (0..settings.n_particles)
        .map(|_| {
            let mut x: Vec<f64> = space
                .specs()
                .iter()
                .map(|s| s.mean + s.std_dev * r.sample::<f64, _>(StandardNormal))
                .collect();
            space.clamp(&mut x);
            x
        })
        .collect();
    run_pso_from(space, objective, settings, start)
}

/// Runs PSO from explicit starting positions; `settings.n_particles` is ignored
/// in favor of `start.len()`.
pub fn run_pso_from<O>(
    space: &ParamSpace,
    objective: &O,
    settings: &PsoSettings,
    start: Vec<Vec<f64>>,
) -> Result<OptimizationReport>
where
    O: Objective + ?Sized,
{
    let settings = PsoSettings {
        n_particles: start.len(),
        ..settings.clone()
    };
    settings.validate()?;
    for x in &start {
        space.check_dimension(x)?;
    }
    let clock = Instant::now();
    let exec = Executor::new(settings.execution);
    let widths = space.widths();
    let n = start.len() as u64;
    let rounds = settings.max_evaluations / n;

    let mut swarm: Vec<Particle> = start
        .into_iter()
        .map(|mut x| {
            space.clamp(&mut x);
            let rng = rng::stream(settings.seed, position_key(&x));
            Particle {
                v: vec![0.0; x.len()],
                best_x: x.clone(),
                best_loss: f64::INFINITY,
                x,
                rng,
            }
        })
        .collect();

    let mut curve = CurveBuilder::default();
    let mut evals = 0u64;
    let mut gbest: Option<(f64, Vec<f64>)> = None;

    for round in 0..rounds {
        if round > 0 {
            let (_, g) = gbest.as_ref().expect("set after first round");
            for p in swarm.iter_mut() {
                for d in 0..p.x.len() {
                    let r1: f64 = p.rng.random();
                    let r2: f64 = p.rng.random();
                    let v = settings.inertia * p.v[d]
                        + settings.cognitive_coeff * r1 * (p.best_x[d] - p.x[d])
                        + settings.social_coeff * r2 * (g[d] - p.x[d]);
                    p.v[d] = v.clamp(-widths[d], widths[d]);
                    p.x[d] += p.v[d];
                }
                space.clamp(&mut p.x);
            }
        }
        let positions: Vec<&[f64]> = swarm.iter().map(|p| p.x.as_slice()).collect();
        let losses = exec.map_indexed(positions, |_, x| sanitize_loss(objective.evaluate(x)));
        for (p, &loss) in swarm.iter_mut().zip(&losses) {
            evals += 1;
            curve.offer(evals, loss);
            if better((loss, &p.x), (p.best_loss, &p.best_x)) {
                p.best_loss = loss;
                p.best_x.clone_from(&p.x);
            }
        }
        for p in &swarm {
            let take = match &gbest {
                None => true,
                Some((l, x)) => better((p.best_loss, &p.best_x), (*l, x)),
            };
            if take {
                gbest = Some((p.best_loss, p.best_x.clone()));
            }
        }
    }

    let (loss, x) = gbest.expect("at least one round");
    let mut best_config = ParamConfig::with_loss(x, loss);
    best_config.resource_spent = evals;
    Ok(OptimizationReport {
        method: "pso".into(),
        best_config,
        loss_curve: curve.finish(evals),
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        total_evaluations: evals,
        bracket_traces: Vec::new(),
        termination: Termination::BudgetExhausted,
    })
}
