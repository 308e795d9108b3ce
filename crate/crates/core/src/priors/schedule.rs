use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Variance-exploding diffusion: zero drift, `g(t) = σ_d^t`, unit scaling.
///
/// The perturbation kernel at time `t` has standard deviation `β(t)` with
/// `β²(t) = (σ_d^{2t} - 1) / (2 ln σ_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeSchedule {
    pub sigma_d: f64,
}

impl SdeSchedule {
    pub fn new(sigma_d: f64) -> Result<Self> {
        if !(sigma_d > 1.0 && sigma_d.is_finite()) {
            return Err(Error::config(format!("sigma_d must exceed 1, got {sigma_d}")));
        }
        Ok(SdeSchedule { sigma_d })
    }

    fn log_sd(&self) -> f64 {
        self.sigma_d.ln()
    }

    /// Drift coefficient, identically zero.
    pub fn f(&self, _t: f64) -> f64 {
        0.0
    }

    pub fn g(&self, t: f64) -> f64 {
        self.sigma_d.powf(t)
    }

    pub fn beta_sq(&self, t: f64) -> f64 {
        // exp_m1 keeps precision for small t.
        (2.0 * t * self.log_sd()).exp_m1() / (2.0 * self.log_sd())
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta_sq(t).sqrt()
    }

    pub fn beta_max(&self) -> f64 {
        self.beta(1.0)
    }

    /// Time at which the perturbation std reaches `eta`.
    pub fn beta_inv(&self, eta: f64) -> Result<f64> {
        if !(eta >= 0.0) {
            return Err(Error::config(format!("noise scale must be non-negative, got {eta}")));
        }
        let max = self.beta_max();
        if eta > max * (1.0 + 1e-12) {
            return Err(Error::EtaTooLarge { eta, max });
        }
        let l = self.log_sd();
        Ok(((2.0 * eta * eta * l).ln_1p() / (2.0 * l)).min(1.0))
    }

    /// Like [`SdeSchedule::beta_inv`] but clamps to `t = 1` with a warning.
    pub fn beta_inv_clamped(&self, eta: f64) -> f64 {
        match self.beta_inv(eta) {
            Ok(t) => t,
            Err(_) => {
                log::warn!("noise scale {eta} exceeds beta(1) = {}; clamping to t = 1", self.beta_max());
                1.0
            }
        }
    }
}
