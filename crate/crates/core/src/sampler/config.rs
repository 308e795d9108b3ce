use crate::error::{Error, Result};
use crate::likelihood::MaskSpec;
use crate::priors::{SdeSchedule, DEFAULT_EPS_T};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Scaling of the likelihood gradient inside the Langevin update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Weighting {
    /// `α_n = α₀ ‖z‖² / (η² (‖∇L‖² + 0.001))`.
    Adaptive { alpha0: f64 },
    /// `α_n = 1`: plain exponential-integrator Langevin dynamics.
    Unit,
}

impl Default for Weighting {
    fn default() -> Self {
        Weighting::Adaptive { alpha0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSpace {
    #[default]
    Latent,
    Pixel,
}

/// Starting point of every chain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    #[default]
    StandardNormal,
    /// `mean + std · N(0, I)`.
    Gaussian { mean: Vec<f64>, std: f64 },
    Fixed { value: Vec<f64> },
}

/// Either explicit noise levels or a log-uniform annealing rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Values(Vec<f64>),
    Annealing { start: f64, end: f64, plateau: usize },
}

/// `plateau` copies of `start`, then a geometric decay from `start` to `end` inclusive.
pub fn make_annealing_schedule(start: f64, end: f64, n_k: usize, plateau: usize) -> Result<Vec<f64>> {
    if !(end > 0.0 && start >= end && start.is_finite()) {
        return Err(Error::config(format!("annealing needs start >= end > 0, got {start} and {end}")));
    }
    if n_k == 0 || plateau >= n_k {
        return Err(Error::config(format!("plateau {plateau} must be shorter than the {n_k} loops")));
    }
    let m = n_k - plateau;
    let mut out = vec![start; plateau];
    if m == 1 {
        out.push(end);
    } else {
        let ratio = (end / start).ln() / (m - 1) as f64;
        out.extend((0..m).map(|j| start * (ratio * j as f64).exp()));
        *out.last_mut().expect("non-empty") = end;
    }
    Ok(out)
}

fn default_c_gamma() -> f64 {
    0.015
}

fn default_eps_t() -> f64 {
    DEFAULT_EPS_T
}

fn default_chains() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Outer loops `N_k`.
    pub n_outer: usize,
    /// Langevin steps per likelihood step `N_τ`.
    pub n_langevin: usize,
    /// Euler-Maruyama steps per prior step `N_t`.
    pub n_reverse: usize,
    /// Independent chains `M`.
    #[serde(default = "default_chains")]
    pub chains: usize,
    pub eta: EtaSpec,
    /// `γ = c_γ η_k²`.
    #[serde(default = "default_c_gamma")]
    pub c_gamma: f64,
    #[serde(default)]
    pub weighting: Weighting,
    #[serde(default = "default_eps_t")]
    pub eps_t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub space: SampleSpace,
    #[serde(default)]
    pub init: InitSpec,
}

impl SamplerConfig {
    pub fn new(n_outer: usize, n_langevin: usize, n_reverse: usize, eta: EtaSpec) -> Self {
        SamplerConfig {
            n_outer,
            n_langevin,
            n_reverse,
            chains: default_chains(),
            eta,
            c_gamma: default_c_gamma(),
            weighting: Weighting::default(),
            eps_t: DEFAULT_EPS_T,
            mask: None,
            seed: 0,
            space: SampleSpace::Latent,
            init: InitSpec::StandardNormal,
        }
    }

    /// The `N_k` noise levels.
    pub fn eta_schedule(&self) -> Result<Vec<f64>> {
        let etas = match &self.eta {
            EtaSpec::Values(v) => v.clone(),
            EtaSpec::Annealing { start, end, plateau } => make_annealing_schedule(*start, *end, self.n_outer, *plateau)?,
        };
        if etas.len() != self.n_outer {
            return Err(Error::config(format!("{} noise levels for {} outer loops", etas.len(), self.n_outer)));
        }
        if etas.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::config("noise levels must be positive"));
        }
        if etas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::config("noise levels must be non-increasing"));
        }
        Ok(etas)
    }

    /// Checks counts and constants, and that every noise level is reachable by the schedule.
    pub fn validate(&self, schedule: &SdeSchedule) -> Result<Vec<f64>> {
        if self.n_outer == 0 || self.n_langevin == 0 || self.n_reverse == 0 || self.chains == 0 {
            return Err(Error::config("sampler counts must be at least 1"));
        }
        if !(self.c_gamma > 0.0 && self.c_gamma.is_finite()) {
            return Err(Error::config(format!("c_gamma must be positive, got {}", self.c_gamma)));
        }
        if let Weighting::Adaptive { alpha0 } = self.weighting {
            if !(alpha0 > 0.0 && alpha0.is_finite()) {
                return Err(Error::config(format!("alpha0 must be positive, got {alpha0}")));
            }
        }
        if !(self.eps_t > 0.0 && self.eps_t < 1.0) {
            return Err(Error::config(format!("eps_t must lie in (0, 1), got {}", self.eps_t)));
        }
        let etas = self.eta_schedule()?;
        let max = schedule.beta_max();
        if let Some(&eta) = etas.iter().find(|&&e| e > max) {
            return Err(Error::EtaTooLarge { eta, max });
        }
        Ok(etas)
    }

    /// Contraction factor `r = exp(-γ / η²) = exp(-c_γ)` of the Langevin update.
    pub fn contraction(&self) -> f64 {
        (-self.c_gamma).exp()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
