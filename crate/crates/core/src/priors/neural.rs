use super::{ScoreFunction, SdeSchedule};
use crate::error::{Error, Result};
use crate::nn::{ScoreNet, WeightsContainer};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Smallest diffusion time the networks are trained on.
pub const DEFAULT_EPS_T: f64 = 1e-3;

/// A score network evaluated at times clamped to `[eps_t, 1]`.
#[derive(Debug)]
pub struct NeuralScore {
    net: ScoreNet,
    pub eps_t: f64,
    clamped: AtomicUsize,
}

impl NeuralScore {
    /// Fails if the container was trained for a different `sigma_d`.
    pub fn new(weights: &WeightsContainer, schedule: &SdeSchedule, eps_t: f64) -> Result<Self> {
        let net = ScoreNet::from_container(weights)?;
        if (net.schedule().sigma_d - schedule.sigma_d).abs() > 1e-12 * schedule.sigma_d {
            return Err(Error::config(format!(
                "score weights use sigma_d = {}, schedule has {}",
                net.schedule().sigma_d,
                schedule.sigma_d
            )));
        }
        if !(eps_t > 0.0 && eps_t < 1.0) {
            return Err(Error::config(format!("eps_t must lie in (0, 1), got {eps_t}")));
        }
        Ok(NeuralScore { net, eps_t, clamped: AtomicUsize::new(0) })
    }

    /// Number of evaluations whose time was raised to `eps_t`.
    pub fn clamp_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }
}

impl ScoreFunction for NeuralScore {
    fn dim(&self) -> usize {
        let [nu, nv] = self.net.metadata.latent_shape;
        nu * nv
    }

    fn schedule(&self) -> &SdeSchedule {
        self.net.schedule()
    }

    fn score(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        let t = if t < self.eps_t {
            if self.clamped.fetch_add(1, Ordering::Relaxed) == 0 {
                log::warn!("score evaluated at t = {t:e}; clamping to eps_t = {}", self.eps_t);
            }
            self.eps_t
        } else {
            t
        };
        self.net.forward(z, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{random_container, NetMetadata};

    fn weights() -> WeightsContainer {
        random_container(NetMetadata::score([8, 8], 20.0, Vec::new()), 7, 1.0).unwrap()
    }

    #[test]
    fn tiny_times_evaluate_at_eps_t() {
        let w = weights();
        let s = NeuralScore::new(&w, &SdeSchedule::new(20.0).unwrap(), DEFAULT_EPS_T).unwrap();
        let z: Vec<f64> = (0..64).map(|i| (i as f64 * 0.2).cos()).collect();
        let a = s.score(&z, 1e-6).unwrap();
        let b = s.score(&z, DEFAULT_EPS_T).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert_eq!(s.clamp_count(), 1);
    }

    #[test]
    fn sigma_d_mismatch_is_rejected() {
        assert!(NeuralScore::new(&weights(), &SdeSchedule::new(25.0).unwrap(), DEFAULT_EPS_T).is_err());
    }
}
