use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::AdmmStart;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Specification {
    /// θ* handed to the solver.
    Known,
    /// θ_k supplied by the learner.
    Learned,
}

impl std::str::FromStr for Specification {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" => Ok(Specification::Known),
            "learned" => Ok(Specification::Learned),
            other => Err(Error::InvalidConfig(format!("specification must be known or learned, got '{other}'"))),
        }
    }
}

impl std::fmt::Display for Specification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Specification::Known => "known",
            Specification::Learned => "learned",
        })
    }
}

fn d_n() -> usize {
    100
}
fn d_s() -> usize {
    10
}
fn d_seed() -> u64 {
    7
}
fn d_epsilon() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn d_regime() -> String {
    "constant".into()
}
fn d_spec() -> Specification {
    Specification::Known
}
fn d_one() -> f64 {
    1.0
}
fn d_beta() -> f64 {
    1.05
}
fn d_c() -> f64 {
    1e-3
}
fn d_budgets() -> Vec<usize> {
    vec![0, 3, 5, 7]
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_upsilon() -> f64 {
    0.4
}
fn d_floor() -> f64 {
    1e-2
}
fn d_limit() -> f64 {
    0.3
}
fn d_tradeoff() -> f64 {
    0.1
}
fn d_overlap() -> f64 {
    0.2
}
fn d_max_outer() -> usize {
    60
}
fn d_inner() -> String {
    "reference".into()
}
fn d_learner() -> String {
    "scs-admm".into()
}
fn d_inner_cap() -> u64 {
    2_000_000
}
fn d_syn_tau() -> f64 {
    0.91
}
fn d_seq_outer() -> usize {
    50
}
fn d_seq_regime() -> String {
    "increasing".into()
}

/// Experiment settings. Every field has a default, so `{}` is a valid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_s")]
    pub s: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_epsilon")]
    pub epsilon: Vec<f64>,
    /// Penalty regime name (`constant` or `increasing`).
    #[serde(default = "d_regime")]
    pub regime: String,
    #[serde(default = "d_spec")]
    pub specification: Specification,
    /// ρ_o of the constant regime, ρ₀ of the increasing one.
    #[serde(default = "d_one")]
    pub rho_o: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_c")]
    pub c: f64,
    /// α₀ of the increasing regime; the constant regime derives its own.
    #[serde(default = "d_one")]
    pub alpha0: f64,
    #[serde(default = "d_budgets")]
    pub sequential_budgets: Vec<usize>,
    #[serde(default = "d_out")]
    pub output_dir: PathBuf,

    #[serde(default = "d_one")]
    pub kappa: f64,
    #[serde(default = "d_upsilon")]
    pub upsilon: f64,
    #[serde(default = "d_floor")]
    pub psd_floor: f64,
    #[serde(default = "d_one")]
    pub admm_penalty: f64,
    /// Σ₀ of the ADMM learner.
    #[serde(default)]
    pub admm_start: AdmmStart,
    /// m_j, shared by all sectors.
    #[serde(default = "d_limit")]
    pub sector_limit: f64,
    #[serde(default = "d_tradeoff")]
    pub risk_tradeoff: f64,
    /// Probability that an asset also joins a second sector.
    #[serde(default = "d_overlap")]
    pub sector_overlap: f64,
    #[serde(default = "d_max_outer")]
    pub max_outer: usize,
    /// Inner stop rule (`reference`, `wolfe`, `budget`).
    #[serde(default = "d_inner")]
    pub inner: String,
    #[serde(default = "d_inner_cap")]
    pub inner_cap: u64,
    /// Learner used when the specification is `learned`.
    #[serde(default = "d_learner")]
    pub learner: String,
    /// Rate of the `synthetic` learner.
    #[serde(default = "d_syn_tau")]
    pub synthetic_tau: f64,
    #[serde(default = "d_seq_outer")]
    pub sequential_outer: usize,
    #[serde(default = "d_seq_regime")]
    pub sequential_regime: String,
    #[serde(default)]
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n >= self.s && self.s >= 1) {
            return Err(Error::InvalidConfig(format!("need n >= s >= 1, got n = {}, s = {}", self.n, self.s)));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig("need n >= 2 for n/2 samples".into()));
        }
        if self.epsilon.is_empty() {
            return Err(Error::InvalidConfig("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidConfig(format!("epsilon values must lie in (0, 1), got {e}")));
        }
        let positive = [
            ("rho_o", self.rho_o),
            ("c", self.c),
            ("alpha0", self.alpha0),
            ("kappa", self.kappa),
            ("psd_floor", self.psd_floor),
            ("admm_penalty", self.admm_penalty),
            ("sector_limit", self.sector_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        // every asset sits in a sector, so the sector loads sum to at least 1
        if self.s as f64 * self.sector_limit <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "s * sector_limit must exceed 1 for a feasible portfolio, got {} * {}",
                self.s, self.sector_limit
            )));
        }
        if !(self.upsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("upsilon must be >= 0, got {}", self.upsilon)));
        }
        if !(0.0..=1.0).contains(&self.sector_overlap) {
            return Err(Error::InvalidConfig(format!("sector_overlap must lie in [0, 1], got {}", self.sector_overlap)));
        }
        if self.max_outer == 0 || self.sequential_outer == 0 {
            return Err(Error::InvalidConfig("outer iteration caps must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
