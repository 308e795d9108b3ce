use crate::error::{Error, Result};

/// Bias-corrected adaptive-moment optimizer.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; dim], v: vec![0.0; dim], step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Descends along `grad`, updating `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::shape(format!(
                "optimizer holds {} parameters, got {} and gradient {}",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("optimizer gradient".into()));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Cosine annealing from `lr` at step 0 to zero at `total`.
pub fn cosine_lr(lr: f64, step: usize, total: usize) -> f64 {
    0.5 * lr * (1.0 + (std::f64::consts::PI * step as f64 / total.max(1) as f64).cos())
}
