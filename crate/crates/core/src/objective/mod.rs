//! The mean-squared-error objective, dataset containers, CSV ingestion and the
//! seeded synthetic data generator.

mod dataset;
mod synthetic;

pub use dataset::{load_csv, Dataset, LoadStats};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::models::ParametricModel;
use crate::optimizer::Objective;

/// Mean of squared residuals `(y - f(x; p))^2` over the dataset.
///
/// A non-finite prediction yields a non-finite loss.
pub fn mse_objective<M: ParametricModel + ?Sized>(model: &M, params: &[f64], data: &Dataset) -> f64 {
    let sum: f64 = data
        .iter()
        .map(|(x, y)| {
            let r = y - model.predict(x, params);
            r * r
        })
        .sum();
    sum / data.len() as f64
}

/// Binds a model and a dataset into an [`Objective`] over the parameters.
pub struct ModelObjective<'a, M: ?Sized> {
    pub model: &'a M,
    pub data: &'a Dataset,
}

impl<'a, M: ParametricModel + ?Sized> ModelObjective<'a, M> {
    pub fn new(model: &'a M, data: &'a Dataset) -> Self {
        ModelObjective { model, data }
    }
}

impl<M: ParametricModel + ?Sized> Objective for ModelObjective<'_, M> {
    fn evaluate(&self, params: &[f64]) -> f64 {
        mse_objective(self.model, params, self.data)
    }
}
