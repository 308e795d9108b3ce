//! Diffusion schedule and score functions of smoothed prior densities.

mod analytic;
mod neural;
mod schedule;

pub use analytic::{GaussianPrior, GmmPrior, GmmScore};
pub use neural::{NeuralScore, DEFAULT_EPS_T};
pub use schedule::SdeSchedule;

use crate::error::Result;

/// `∇_z log p_t(z)` for the prior perturbed by the diffusion up to time `t`.
pub trait ScoreFunction: Sync {
    fn dim(&self) -> usize;

    fn schedule(&self) -> &SdeSchedule;

    fn score(&self, z: &[f64], t: f64) -> Result<Vec<f64>>;
}
