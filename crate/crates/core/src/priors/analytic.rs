use super::{ScoreFunction, SdeSchedule};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

fn check_dim(z: &[f64], dim: usize) -> Result<()> {
    if z.len() != dim {
        return Err(Error::shape(format!("latent has {} entries, expected {dim}", z.len())));
    }
    Ok(())
}

/// Diagonal Gaussian prior `N(mean, diag(var))`.
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub schedule: SdeSchedule,
}

impl GaussianPrior {
    pub fn new(mean: Vec<f64>, var: Vec<f64>, schedule: SdeSchedule) -> Result<Self> {
        if mean.len() != var.len() || mean.is_empty() {
            return Err(Error::shape("mean and variance lengths differ"));
        }
        if var.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("prior variances must be positive"));
        }
        Ok(GaussianPrior { mean, var, schedule })
    }

    pub fn standard(dim: usize, schedule: SdeSchedule) -> Self {
        GaussianPrior { mean: vec![0.0; dim], var: vec![1.0; dim], schedule }
    }
}

impl ScoreFunction for GaussianPrior {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn schedule(&self) -> &SdeSchedule {
        &self.schedule
    }

    fn score(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        check_dim(z, self.dim())?;
        let b2 = self.schedule.beta_sq(t);
        Ok(z.iter().zip(&self.mean).zip(&self.var).map(|((z, m), v)| (m - z) / (v + b2)).collect())
    }
}

/// Gaussian mixture with diagonal covariances.
///
/// Stored as JSON `{"weights": [...], "means": [[...]], "vars": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPrior {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub vars: Vec<Vec<f64>>,
}

impl GmmPrior {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, vars: Vec<Vec<f64>>) -> Result<Self> {
        let g = GmmPrior { weights, means, vars };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.vars.len() != k {
            return Err(Error::shape("mixture needs matching weights, means and vars"));
        }
        let d = self.means[0].len();
        if d == 0 || self.means.iter().chain(&self.vars).any(|v| v.len() != d) {
            return Err(Error::shape("mixture components have inconsistent dimensions"));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("mixture weights must be positive and sum to 1"));
        }
        if self.vars.iter().flatten().any(|v| !(*v > 0.0)) {
            return Err(Error::config("mixture variances must be positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: GmmPrior = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Per-component `ln w_i + ln N(z; μ_i, v_i + b2)`.
    fn component_logs(&self, z: &[f64], b2: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.vars)
            .map(|((w, m), v)| {
                let mut l = w.ln();
                for ((zi, mi), vi) in z.iter().zip(m).zip(v) {
                    let s = vi + b2;
                    l -= 0.5 * ((zi - mi).powi(2) / s + (2.0 * PI * s).ln());
                }
                l
            })
            .collect()
    }

    fn log_sum_exp(logs: &[f64]) -> f64 {
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
    }

    /// `ln p(z)` after smoothing every component by variance `b2`.
    pub fn log_density(&self, z: &[f64], b2: f64) -> f64 {
        Self::log_sum_exp(&self.component_logs(z, b2))
    }

    pub fn responsibilities(&self, z: &[f64], b2: f64) -> Vec<f64> {
        let logs = self.component_logs(z, b2);
        let lse = Self::log_sum_exp(&logs);
        logs.iter().map(|l| (l - lse).exp()).collect()
    }

    /// Score of the smoothed mixture.
    pub fn score_smoothed(&self, z: &[f64], b2: f64) -> Vec<f64> {
        let r = self.responsibilities(z, b2);
        let mut out = vec![0.0; z.len()];
        for ((ri, m), v) in r.iter().zip(&self.means).zip(&self.vars) {
            for (i, o) in out.iter_mut().enumerate() {
                *o += ri * (m[i] - z[i]) / (v[i] + b2);
            }
        }
        out
    }
}

/// A [`GmmPrior`] diffused along a schedule.
#[derive(Debug, Clone)]
pub struct GmmScore {
    pub prior: GmmPrior,
    pub schedule: SdeSchedule,
}

impl GmmScore {
    pub fn log_density(&self, z: &[f64], t: f64) -> f64 {
        self.prior.log_density(z, self.schedule.beta_sq(t))
    }
}

impl ScoreFunction for GmmScore {
    fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn schedule(&self) -> &SdeSchedule {
        &self.schedule
    }

    fn score(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        check_dim(z, self.dim())?;
        Ok(self.prior.score_smoothed(z, self.schedule.beta_sq(t)))
    }
}
