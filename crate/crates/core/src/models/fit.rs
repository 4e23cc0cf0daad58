use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EngineCurveModel, EngineCurveParams, ParametricModel, TireModel, TireParams};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::objective::{Dataset, ModelObjective};
use crate::optimizer::{run_mihpo, MihpoSettings, MutationPolicy, OptimizationReport, ParamSpace};

/// Optimizer knobs for the model-fitting entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_resource: u64,
    pub eta: u64,
    pub sigma_max_frac: f64,
    pub sigma_min_frac: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_resource: 10_000,
            eta: 5,
            sigma_max_frac: 0.1,
            sigma_min_frac: 0.001,
            seed: 0,
            execution: Execution::Serial,
        }
    }
}

impl FitOptions {
    /// Preset for cubic engine curves. The monomial basis is badly conditioned,
    /// so the search needs a longer budget and much finer final steps than the
    /// tire defaults to land on the least-squares optimum when noise is low.
    pub fn engine() -> Self {
        FitOptions {
            max_resource: 50_000,
            sigma_max_frac: 0.02,
            sigma_min_frac: 1e-6,
            ..FitOptions::default()
        }
    }

    pub fn settings(&self, space: &ParamSpace) -> Result<MihpoSettings> {
        let policy = MutationPolicy::from_fractions(space, self.sigma_max_frac, self.sigma_min_frac, self.seed)?;
        Ok(MihpoSettings {
            max_resource: self.max_resource,
            eta: self.eta,
            policy,
            seed: self.seed,
            execution: self.execution,
        })
    }
}

fn fit<M: ParametricModel>(
    model: &M,
    data: &Dataset,
    space: &ParamSpace,
    opts: &FitOptions,
) -> Result<OptimizationReport> {
    if data.is_empty() {
        return Err(Error::data("cannot fit an empty dataset"));
    }
    if data.input_dim() != model.input_dim() {
        return Err(Error::invalid(format!(
            "{} model takes {} inputs, dataset has {}",
            model.name(),
            model.input_dim(),
            data.input_dim()
        )));
    }
    if space.len() != model.param_names().len() {
        return Err(Error::invalid(format!(
            "{} model has {} parameters, space has {}",
            model.name(),
            model.param_names().len(),
            space.len()
        )));
    }
    let objective = ModelObjective::new(model, data);
    run_mihpo(space, &objective, &opts.settings(space)?)
}

/// Fits the tire model to `(alpha_rad, fy_n)` samples.
pub fn fit_tire(data: &Dataset, space: &ParamSpace, opts: &FitOptions) -> Result<(TireParams, OptimizationReport)> {
    let report = fit(&TireModel, data, space, opts)?;
    let params = TireParams::from_slice(&report.best_config.values)?;
    Ok((params, report))
}

/// Fits one throttle's torque curve to `(engine_speed_norm, torque_nm)` samples.
pub fn fit_engine_curve(
    data: &Dataset,
    space: &ParamSpace,
    throttle: f64,
    opts: &FitOptions,
) -> Result<(EngineCurveParams, OptimizationReport)> {
    if data.column(0).iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::data("engine speed inputs must be normalized to [0, 1]"));
    }
    let report = fit(&EngineCurveModel, data, space, opts)?;
    let v = &report.best_config.values;
    let params = EngineCurveParams::new([v[0], v[1], v[2], v[3]], throttle)?;
    Ok((params, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedModel {
    Tire,
    EngineCurve,
}

/// On-disk form of a fit result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub model: FittedModel,
    pub params: BTreeMap<String, f64>,
    pub loss: f64,
}

impl FittedParams {
    pub fn tire(p: &TireParams, loss: f64) -> Self {
        let params = TireModel
            .param_names()
            .iter()
            .zip(p.to_vec())
            .map(|(n, v)| (n.to_string(), v))
            .collect();
        FittedParams { model: FittedModel::Tire, params, loss }
    }

    pub fn engine(p: &EngineCurveParams, loss: f64) -> Self {
        let mut params: BTreeMap<String, f64> = EngineCurveModel
            .param_names()
            .iter()
            .zip(p.coeffs())
            .map(|(n, v)| (n.to_string(), v))
            .collect();
        params.insert("throttle".into(), p.throttle);
        FittedParams { model: FittedModel::EngineCurve, params, loss }
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::data(format!("fitted params missing `{key}`")))
    }

    pub fn to_tire(&self) -> Result<TireParams> {
        if self.model != FittedModel::Tire {
            return Err(Error::data("fitted params are not a tire model"));
        }
        let v = TireModel
            .param_names()
            .iter()
            .map(|n| self.get(n))
            .collect::<Result<Vec<_>>>()?;
        TireParams::from_slice(&v)
    }

    pub fn to_engine(&self) -> Result<EngineCurveParams> {
        if self.model != FittedModel::EngineCurve {
            return Err(Error::data("fitted params are not an engine curve"));
        }
        EngineCurveParams::new(
            [self.get("p0")?, self.get("p1")?, self.get("p2")?, self.get("p3")?],
            self.get("throttle")?,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
