//! JSON optimizer configuration shared by every method.
//!
//! ```json
//! {
//!   "method": "mihpo",
//!   "params": [{"name": "B", "mean": 10, "std": 4, "min": 1, "max": 30}],
//!   "sigma_max_frac": 0.1, "sigma_min_frac": 0.001,
//!   "R": 10000, "eta": 5, "seed": 0
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hyperband::MihpoSettings;
use super::mutation::MutationPolicy;
use super::space::ParamSpace;
use crate::baselines::{GboSettings, PsoSettings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Mihpo,
    Gbo,
    Pso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GboSection {
    pub learning_rate: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoSection {
    pub n_particles: usize,
    #[serde(default = "default_inertia")]
    pub inertia: f64,
    #[serde(default = "default_accel")]
    pub cognitive_coeff: f64,
    #[serde(default = "default_accel")]
    pub social_coeff: f64,
}

fn default_fd_step() -> f64 {
    1e-6
}
fn default_inertia() -> f64 {
    0.729
}
fn default_accel() -> f64 {
    1.49445
}
fn default_max_frac() -> f64 {
    0.1
}
fn default_min_frac() -> f64 {
    0.001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(default)]
    pub method: Method,
    pub params: ParamSpace,
    #[serde(default = "default_max_frac")]
    pub sigma_max_frac: f64,
    #[serde(default = "default_min_frac")]
    pub sigma_min_frac: f64,
    #[serde(rename = "R")]
    pub max_resource: u64,
    pub eta: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gbo: Option<GboSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pso: Option<PsoSection>,
}

impl OptimizerConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: OptimizerConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_min_frac >= 0.0 && self.sigma_min_frac <= self.sigma_max_frac) {
            return Err(Error::invalid("need 0 <= sigma_min_frac <= sigma_max_frac"));
        }
        // schedule validity is checked here so a bad config fails before any work
        super::schedule::HyperbandSchedule::new(self.max_resource, self.eta)?;
        Ok(())
    }

    pub fn mutation_policy(&self, seed: u64) -> Result<MutationPolicy> {
        MutationPolicy::from_fractions(&self.params, self.sigma_max_frac, self.sigma_min_frac, seed)
    }

    /// MI-HPO settings, with `seed` overriding the file's seed.
    pub fn mihpo_settings(&self, seed: u64) -> Result<MihpoSettings> {
        Ok(MihpoSettings {
            max_resource: self.max_resource,
            eta: self.eta,
            policy: self.mutation_policy(seed)?,
            seed,
            execution: Default::default(),
        })
    }

    /// Evaluations one MI-HPO run consumes; the shared budget for comparisons.
    pub fn evaluation_budget(&self) -> Result<u64> {
        Ok(super::schedule::HyperbandSchedule::new(self.max_resource, self.eta)?.total_evaluations())
    }

    pub fn gbo_settings(&self, max_evaluations: u64) -> Result<GboSettings> {
        let sec = self
            .gbo
            .as_ref()
            .ok_or_else(|| Error::invalid("config has no `gbo` section"))?;
        GboSettings::new(sec.learning_rate, max_evaluations, sec.fd_step)
    }

    pub fn pso_settings(&self, max_evaluations: u64, seed: u64) -> Result<PsoSettings> {
        let sec = self
            .pso
            .as_ref()
            .ok_or_else(|| Error::invalid("config has no `pso` section"))?;
        let mut s = PsoSettings::new(sec.n_particles, max_evaluations, seed)?;
        s.inertia = sec.inertia;
        s.cognitive_coeff = sec.cognitive_coeff;
        s.social_coeff = sec.social_coeff;
        Ok(s)
    }
}
