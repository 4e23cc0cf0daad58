use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::models::ParametricModel;
use crate::rng::{self, TAG_SYNTH};

/// Recipe for a seeded synthetic dataset drawn from a known model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub ground_truth: Vec<f64>,
    /// `[min, max]` per input dimension; inputs are drawn uniformly.
    pub input_range: Vec<(f64, f64)>,
    pub n_samples: usize,
    /// Standard deviation of additive Gaussian output noise.
    pub noise_std: f64,
    pub seed: u64,
}

/// Samples inputs uniformly over the range and returns
/// `y = f(x; ground_truth) + N(0, noise_std^2)`.
pub fn generate_synthetic<M: ParametricModel + ?Sized>(model: &M, spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.ground_truth.len() != model.param_names().len() {
        return Err(Error::invalid(format!(
            "ground truth has {} values, model `{}` takes {}",
            spec.ground_truth.len(),
            model.name(),
            model.param_names().len()
        )));
    }
    if spec.input_range.len() != model.input_dim() {
        return Err(Error::invalid("input range dimension does not match the model"));
    }
    if spec.n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::invalid("noise_std must be finite and >= 0"));
    }
    if spec.input_range.iter().any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::invalid("input range needs min <= max"));
    }

    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng::stream(spec.seed, rng::stream_key(TAG_SYNTH, 0, 0, 0));
    let dim = model.input_dim();
    let mut inputs = Vec::with_capacity(spec.n_samples * dim);
    let mut outputs = Vec::with_capacity(spec.n_samples);
    let mut x = vec![0.0; dim];
    for _ in 0..spec.n_samples {
        for (xi, (lo, hi)) in x.iter_mut().zip(&spec.input_range) {
            *xi = if lo == hi { *lo } else { rng.random_range(*lo..*hi) };
        }
        let y = model.predict(&x, &spec.ground_truth) + noise.sample(&mut rng);
        inputs.extend_from_slice(&x);
        outputs.push(y);
    }
    let names: Vec<String> = model.input_names().iter().map(|s| s.to_string()).collect();
    Dataset::with_names(
        format!("synthetic-{}", model.name()),
        names,
        model.output_name(),
        inputs,
        outputs,
    )
}
