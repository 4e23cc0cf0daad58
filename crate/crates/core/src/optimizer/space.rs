use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, TAG_SAMPLE};

/// One named dimension of the search space: a truncated normal prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub mean: f64,
    #[serde(rename = "std")]
    pub std_dev: f64,
    #[serde(rename = "min")]
    pub lower: f64,
    #[serde(rename = "max")]
    pub upper: f64,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, mean: f64, std_dev: f64, lower: f64, upper: f64) -> Self {
        ParamSpec {
            name: name.into(),
            mean,
            std_dev,
            lower,
            upper,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.mean, self.std_dev, self.lower, self.upper]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid(format!("parameter `{}` has non-finite fields", self.name)));
        }
        if self.lower >= self.upper {
            return Err(Error::invalid(format!(
                "parameter `{}`: lower bound {} must be below upper bound {}",
                self.name, self.lower, self.upper
            )));
        }
        if self.std_dev <= 0.0 {
            return Err(Error::invalid(format!(
                "parameter `{}`: std must be positive, got {}",
                self.name, self.std_dev
            )));
        }
        if self.mean < self.lower || self.mean > self.upper {
            return Err(Error::invalid(format!(
                "parameter `{}`: mean {} outside [{}, {}]",
                self.name, self.mean, self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Validated, ordered collection of [`ParamSpec`]s.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ParamSpace {
    params: Vec<ParamSpec>,
}

impl<'de> Deserialize<'de> for ParamSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let params = Vec::<ParamSpec>::deserialize(d)?;
        ParamSpace::new(params).map_err(serde::de::Error::custom)
    }
}

impl ParamSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("parameter space has no dimensions"));
        }
        for p in &params {
            p.validate()?;
        }
        Ok(ParamSpace { params })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.mean).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.params.iter().map(ParamSpec::width).collect()
    }

    pub fn clamp(&self, values: &mut [f64]) {
        for (v, p) in values.iter_mut().zip(&self.params) {
            *v = v.clamp(p.lower, p.upper);
        }
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.len()
            && values
                .iter()
                .zip(&self.params)
                .all(|(v, p)| *v >= p.lower && *v <= p.upper)
    }

    pub(crate) fn check_dimension(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::invalid(format!(
                "config has {} values, space has {} parameters",
                values.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// A point in parameter space plus its evaluation bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamConfig {
    pub values: Vec<f64>,
    /// Last evaluated loss. `None` until the config has been evaluated once.
    pub loss: Option<f64>,
    /// Objective evaluations consumed by this config so far.
    pub resource_spent: u64,
}

impl ParamConfig {
    pub fn new(values: Vec<f64>) -> Self {
        ParamConfig {
            values,
            loss: None,
            resource_spent: 0,
        }
    }

    pub fn with_loss(values: Vec<f64>, loss: f64) -> Self {
        ParamConfig {
            values,
            loss: Some(loss),
            resource_spent: 0,
        }
    }
}

/// Draws `n` configs from the space's normal priors, clamped to the bounds.
pub fn sample_configs(space: &ParamSpace, n: usize, seed: u64) -> Result<Vec<ParamConfig>> {
    sample_configs_keyed(space, n, seed, 0)
}

pub(crate) fn sample_configs_keyed(
    space: &ParamSpace,
    n: usize,
    seed: u64,
    bracket: u64,
) -> Result<Vec<ParamConfig>> {
    if n == 0 {
        return Err(Error::invalid("sample_configs needs n >= 1"));
    }
    let mut rng = rng::stream(seed, rng::stream_key(TAG_SAMPLE, bracket, 0, 0));
    let configs = (0..n)
        .map(|_| {
            let mut values: Vec<f64> = space
                .specs()
                .iter()
                .map(|p| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    p.mean + p.std_dev * z
                })
                .collect();
            space.clamp(&mut values);
            ParamConfig::new(values)
        })
        .collect();
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_space(mean: f64, std: f64) -> ParamSpace {
        ParamSpace::new(vec![ParamSpec::new("x", mean, std, 0.0, 1.0)]).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            ParamSpec::new("a", 0.5, 0.1, 1.0, 1.0),
            ParamSpec::new("a", 0.5, 0.0, 0.0, 1.0),
            ParamSpec::new("a", 2.0, 0.1, 0.0, 1.0),
            ParamSpec::new("a", f64::NAN, 0.1, 0.0, 1.0),
        ];
        for spec in bad {
            assert!(ParamSpace::new(vec![spec]).is_err());
        }
        assert!(ParamSpace::new(vec![]).is_err());
    }

    #[test]
    fn degenerate_prior_returns_means() {
        let space = ParamSpace::new(vec![
            ParamSpec::new("a", 0.25, 1e-300, 0.0, 1.0),
            ParamSpec::new("b", -3.0, 1e-300, -10.0, 10.0),
        ])
        .unwrap();
        let cfgs = sample_configs(&space, 1, 11).unwrap();
        assert_eq!(cfgs[0].values, vec![0.25, -3.0]);
        assert_eq!(cfgs[0].loss, None);
    }

    #[test]
    fn samples_are_clamped() {
        let space = unit_space(0.5, 1.0);
        let cfgs = sample_configs(&space, 1000, 7).unwrap();
        assert_eq!(cfgs.len(), 1000);
        assert!(cfgs.iter().all(|c| space.contains(&c.values)));
        // a unit std on a unit box must hit the bounds sometimes
        assert!(cfgs.iter().any(|c| c.values[0] == 0.0 || c.values[0] == 1.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let space = unit_space(0.5, 0.2);
        assert_eq!(
            sample_configs(&space, 50, 3).unwrap(),
            sample_configs(&space, 50, 3).unwrap()
        );
        assert_ne!(
            sample_configs(&space, 50, 3).unwrap(),
            sample_configs(&space, 50, 4).unwrap()
        );
    }

    #[test]
    fn zero_samples_is_an_error() {
        assert!(sample_configs(&unit_space(0.5, 0.1), 0, 1).is_err());
    }

    #[test]
    fn space_deserializes_with_validation() {
        let ok = r#"[{"name":"B","mean":10,"std":2,"min":1,"max":30}]"#;
        let space: ParamSpace = serde_json::from_str(ok).unwrap();
        assert_eq!(space.names(), vec!["B"]);
        let bad = r#"[{"name":"B","mean":10,"std":2,"min":30,"max":1}]"#;
        assert!(serde_json::from_str::<ParamSpace>(bad).is_err());
    }

    proptest! {
        #[test]
        fn clamp_lands_in_bounds(v in -1e6f64..1e6, lo in -100f64..0.0, w in 0.1f64..100.0) {
            let space = ParamSpace::new(vec![ParamSpec::new("p", lo, 1.0, lo, lo + w)]).unwrap();
            let mut vals = vec![v];
            space.clamp(&mut vals);
            prop_assert!(space.contains(&vals));
        }
    }
}
