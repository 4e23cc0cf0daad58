//! Bracket and rung structure of the successive-halving outer loops.
//!
//! All quantities are computed in integer arithmetic. The only real-valued one is
//! the per-bracket base resource `r = R / eta^s`, which is rounded to the nearest
//! iteration count (at least 1) when it is scaled up per rung.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    /// Configs evaluated in this rung, `floor(n / eta^j)`.
    pub n_j: u64,
    /// Iterations per config, `round(r * eta^j)`, at least 1.
    pub r_j: u64,
    /// Survivors promoted to the next rung, `floor(n_j / eta)`.
    pub k_j: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub s: u32,
    pub n: u64,
    /// Unrounded base resource `R * eta^-s`.
    pub r: f64,
    pub rungs: Vec<Rung>,
}

impl Bracket {
    pub fn evaluations(&self) -> u64 {
        self.rungs.iter().map(|g| g.n_j * g.r_j).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbandSchedule {
    pub max_resource: u64,
    pub eta: u64,
    pub s_max: u32,
    pub budget: u64,
    /// Ordered from `s_max` down to 0.
    pub brackets: Vec<Bracket>,
}

impl HyperbandSchedule {
    pub fn new(max_resource: u64, eta: u64) -> Result<Self> {
        if eta < 2 {
            return Err(Error::invalid(format!("eta must be >= 2, got {eta}")));
        }
        if max_resource < eta {
            return Err(Error::invalid(format!(
                "R must be >= eta, got R={max_resource}, eta={eta}"
            )));
        }
        let s_max = floor_log(max_resource, eta);
        let budget = (s_max as u64 + 1) * max_resource;
        let budget_ratio = s_max as u128 + 1; // B / R

        let brackets = (0..=s_max)
            .rev()
            .map(|s| {
                let eta_s = (eta as u128).pow(s);
                let n = ceil_div(budget_ratio * eta_s, s as u128 + 1) as u64;
                let rungs = (0..=s)
                    .map(|j| {
                        let eta_j = (eta as u128).pow(j);
                        let n_j = (n as u128 / eta_j) as u64;
                        // R * eta^(j - s), rounded half up
                        let num = max_resource as u128 * eta_j;
                        let r_j = ((2 * num + eta_s) / (2 * eta_s)).max(1) as u64;
                        Rung {
                            n_j,
                            r_j,
                            k_j: n_j / eta,
                        }
                    })
                    .collect();
                Bracket {
                    s,
                    n,
                    r: max_resource as f64 / eta_s as f64,
                    rungs,
                }
            })
            .collect();

        Ok(HyperbandSchedule {
            max_resource,
            eta,
            s_max,
            budget,
            brackets,
        })
    }

    /// Objective evaluations a full run consumes.
    pub fn total_evaluations(&self) -> u64 {
        self.brackets.iter().map(Bracket::evaluations).sum()
    }
}

fn floor_log(x: u64, base: u64) -> u32 {
    let mut s = 0;
    let mut p = base as u128;
    while p <= x as u128 {
        s += 1;
        p *= base as u128;
    }
    s
}

fn ceil_div(a: u128, b: u128) -> u128 {
    a.div_ceil(b)
}
