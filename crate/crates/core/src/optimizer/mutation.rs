use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::space::{ParamConfig, ParamSpace};
use super::{sanitize_loss, Objective};
use crate::error::{Error, Result};

/// Per-parameter mutation scale, annealed linearly from `sigma_max` to `sigma_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationPolicy {
    pub sigma_max: Vec<f64>,
    pub sigma_min: Vec<f64>,
    pub seed: u64,
}

impl MutationPolicy {
    pub fn new(sigma_max: Vec<f64>, sigma_min: Vec<f64>, seed: u64) -> Result<Self> {
        if sigma_max.len() != sigma_min.len() {
            return Err(Error::invalid("sigma_max and sigma_min lengths differ"));
        }
        for (hi, lo) in sigma_max.iter().zip(&sigma_min) {
            if !(hi.is_finite() && lo.is_finite()) || *lo < 0.0 || lo > hi {
                return Err(Error::invalid(format!(
                    "mutation scales need 0 <= sigma_min <= sigma_max, got {lo} and {hi}"
                )));
            }
        }
        Ok(MutationPolicy {
            sigma_max,
            sigma_min,
            seed,
        })
    }

    /// Scales proportional to each parameter's bound width.
    pub fn from_fractions(space: &ParamSpace, max_frac: f64, min_frac: f64, seed: u64) -> Result<Self> {
        let widths = space.widths();
        Self::new(
            widths.iter().map(|w| w * max_frac).collect(),
            widths.iter().map(|w| w * min_frac).collect(),
            seed,
        )
    }

    /// Defaults: 10% of the bound width down to 0.1%.
    pub fn default_for(space: &ParamSpace, seed: u64) -> Self {
        Self::from_fractions(space, 0.1, 0.001, seed).expect("positive widths")
    }

    pub fn len(&self) -> usize {
        self.sigma_max.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_max.is_empty()
    }

    /// Scale at progress `t` in `[0, 1]`; exact at both ends.
    pub fn sigma_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.sigma_into(t, &mut out);
        out
    }

    fn sigma_into(&self, t: f64, out: &mut [f64]) {
        let t = t.clamp(0.0, 1.0);
        for ((o, hi), lo) in out.iter_mut().zip(&self.sigma_max).zip(&self.sigma_min) {
            *o = (1.0 - t) * hi + t * lo;
        }
    }
}

/// Result of one `eval_with_mutation` call.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationOutcome {
    pub config: ParamConfig,
    /// Objective calls made by this call (always the allocated resource).
    pub evaluations: u64,
    /// `(evaluation index, loss)` every time the tracked loss dropped, indices
    /// 1-based within the call. The first evaluation of an unscored config is
    /// always recorded.
    pub improvements: Vec<(u64, f64)>,
}

impl MutationOutcome {
    pub fn loss(&self) -> f64 {
        self.config.loss.unwrap_or(f64::INFINITY)
    }
}

/// Spends `resource` objective calls hill-climbing from `config`.
///
/// An unscored config uses its first call on itself. Each remaining call draws
/// `eps ~ N(0, I)`, forms `p + sigma(t) * eps` clamped to the space, and keeps it
/// only when its loss is strictly lower. `sigma` anneals over the call with
/// `t = iteration / resource`.
pub fn eval_with_mutation<O, R>(
    config: ParamConfig,
    resource: u64,
    objective: &O,
    space: &ParamSpace,
    policy: &MutationPolicy,
    rng: &mut R,
) -> Result<MutationOutcome>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    if resource == 0 {
        return Err(Error::invalid("eval_with_mutation needs at least one iteration"));
    }
    space.check_dimension(&config.values)?;
    if policy.len() != space.len() {
        return Err(Error::invalid("mutation policy dimension does not match the space"));
    }

    let mut config = config;
    let mut improvements = Vec::new();
    let mut start = 0;
    let mut loss = match config.loss {
        Some(l) => sanitize_loss(l),
        None => {
            let l = sanitize_loss(objective.evaluate(&config.values));
            improvements.push((1, l));
            start = 1;
            l
        }
    };

    let dim = space.len();
    let mut sigma = vec![0.0; dim];
    let mut candidate = vec![0.0; dim];
    for i in start..resource {
        policy.sigma_into(i as f64 / resource as f64, &mut sigma);
        for ((c, p), s) in candidate.iter_mut().zip(&config.values).zip(&sigma) {
            let eps: f64 = rng.sample(StandardNormal);
            *c = p + s * eps;
        }
        space.clamp(&mut candidate);
        let l = sanitize_loss(objective.evaluate(&candidate));
        if l < loss {
            loss = l;
            config.values.copy_from_slice(&candidate);
            improvements.push((i + 1, l));
        }
    }

    config.loss = Some(loss);
    config.resource_spent += resource;
    Ok(MutationOutcome {
        config,
        evaluations: resource,
        improvements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::space::ParamSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::{AtomicU64, Ordering};

    fn line_space() -> ParamSpace {
        ParamSpace::new(vec![ParamSpec::new("p", 0.0, 1.0, -10.0, 10.0)]).unwrap()
    }

    fn quad(p: &[f64]) -> f64 {
        (p[0] - 3.0).powi(2)
    }

    #[test]
    fn annealing_endpoints_are_exact() {
        let pol = MutationPolicy::new(vec![0.3, 2.0], vec![0.1, 0.7], 0).unwrap();
        assert_eq!(pol.sigma_at(0.0), vec![0.3, 2.0]);
        assert_eq!(pol.sigma_at(1.0), vec![0.1, 0.7]);
        let mid = pol.sigma_at(0.5);
        assert!((mid[0] - 0.2).abs() < 1e-15);
        assert!((mid[1] - 1.35).abs() < 1e-15);
    }

    #[test]
    fn policy_validation() {
        assert!(MutationPolicy::new(vec![0.1], vec![0.2], 0).is_err());
        assert!(MutationPolicy::new(vec![0.1], vec![-0.1], 0).is_err());
        assert!(MutationPolicy::new(vec![0.1, 0.2], vec![0.1], 0).is_err());
        let space = line_space();
        let pol = MutationPolicy::default_for(&space, 1);
        assert_eq!(pol.sigma_max, vec![2.0]);
        assert!((pol.sigma_min[0] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_is_identity() {
        let space = line_space();
        let pol = MutationPolicy::new(vec![0.0], vec![0.0], 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = eval_with_mutation(ParamConfig::new(vec![1.5]), 20, &quad, &space, &pol, &mut rng).unwrap();
        assert_eq!(out.config.values, vec![1.5]);
        assert_eq!(out.loss(), quad(&[1.5]));
        assert_eq!(out.config.resource_spent, 20);
    }

    #[test]
    fn worse_mutation_is_rejected() {
        // already at the optimum: any mutation is worse
        let space = line_space();
        let pol = MutationPolicy::default_for(&space, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let start = ParamConfig::with_loss(vec![3.0], 0.0);
        let out = eval_with_mutation(start.clone(), 1, &quad, &space, &pol, &mut rng).unwrap();
        assert_eq!(out.config.values, start.values);
        assert_eq!(out.loss(), 0.0);
        assert!(out.improvements.is_empty());
    }

    #[test]
    fn unscored_config_spends_one_call_on_itself() {
        let calls = AtomicU64::new(0);
        let obj = |p: &[f64]| {
            calls.fetch_add(1, Ordering::Relaxed);
            quad(p)
        };
        let space = line_space();
        let pol = MutationPolicy::default_for(&space, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = eval_with_mutation(ParamConfig::new(vec![0.0]), 7, &obj, &space, &pol, &mut rng).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 7);
        assert_eq!(out.evaluations, 7);
        assert_eq!(out.improvements[0], (1, 9.0));
    }

    #[test]
    fn hill_climb_reaches_quadratic_minimum() {
        let space = line_space();
        let pol = MutationPolicy::new(vec![0.1], vec![0.1], 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = eval_with_mutation(ParamConfig::new(vec![0.0]), 10_000, &quad, &space, &pol, &mut rng).unwrap();
        assert!(out.loss() < 9.0);
        assert!((out.config.values[0] - 3.0).abs() < 0.1);
    }

    #[test]
    fn non_finite_losses_are_never_accepted() {
        let space = line_space();
        let pol = MutationPolicy::default_for(&space, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let obj = |p: &[f64]| if p[0] > 0.5 { f64::NAN } else { quad(p) };
        let out = eval_with_mutation(ParamConfig::new(vec![0.0]), 500, &obj, &space, &pol, &mut rng).unwrap();
        assert!(out.loss().is_finite());
        assert!(out.config.values[0] <= 0.5);
    }

    #[test]
    fn rejects_zero_resource() {
        let space = line_space();
        let pol = MutationPolicy::default_for(&space, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(eval_with_mutation(ParamConfig::new(vec![0.0]), 0, &quad, &space, &pol, &mut rng).is_err());
    }

    #[test]
    fn tracked_loss_never_increases() {
        let space = ParamSpace::new(vec![
            ParamSpec::new("a", 0.0, 1.0, -5.0, 5.0),
            ParamSpec::new("b", 0.0, 1.0, -5.0, 5.0),
        ])
        .unwrap();
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let pol = MutationPolicy::default_for(&space, 0);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = eval_with_mutation(ParamConfig::new(vec![-2.0, 2.0]), 300, &rosen, &space, &pol, &mut rng).unwrap();
            for w in out.improvements.windows(2) {
                assert!(w[1].1 < w[0].1 && w[1].0 > w[0].0);
            }
            assert!(space.contains(&out.config.values));
            assert!(out.loss() <= rosen(&[-2.0, 2.0]));
        }
    }
}
