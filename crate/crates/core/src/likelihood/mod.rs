//! Gaussian data likelihood `L = -‖d_obs - F(x)‖² / (2σ²)` and its gradients.

mod mask;
mod misfit;

pub use mask::{apply_sensitivity_mask, MaskSpec};
pub use misfit::{LinearMisfit, Misfit, ScatteringMisfit};

use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::forward::ContrastMap;
use num_complex::Complex64;

/// A log-likelihood over a flat real parameter vector.
pub trait LogLikelihood: Sync {
    fn dim(&self) -> usize;

    fn value(&self, z: &[f64]) -> Result<f64>;

    fn value_and_grad(&self, z: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Data residual norm implied by a log-likelihood value.
    fn residual_norm(&self, value: f64) -> f64 {
        (-2.0 * value).max(0.0).sqrt()
    }
}

/// `L ≡ 0`; the likelihood step then reduces to an Ornstein-Uhlenbeck process.
#[derive(Debug, Clone, Copy)]
pub struct ZeroLikelihood {
    pub dim: usize,
}

impl LogLikelihood for ZeroLikelihood {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _z: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn value_and_grad(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((0.0, vec![0.0; z.len()]))
    }
}

/// Likelihood of a latent vector pushed through a decoder and a misfit.
pub struct DecodedLikelihood<D, M> {
    pub decoder: D,
    pub misfit: M,
    pub sigma: f64,
    /// Pixel gradients outside the mask are zeroed before the decoder VJP.
    pub mask: Option<MaskSpec>,
}

impl<D: Decoder, M: Misfit> DecodedLikelihood<D, M> {
    pub fn new(decoder: D, misfit: M, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::config(format!("likelihood sigma must be positive, got {sigma}")));
        }
        let (nx, ny) = decoder.output_shape();
        let grid = misfit.grid();
        if (nx, ny) != (grid.nx, grid.ny) {
            return Err(Error::shape(format!(
                "decoder produces {nx}x{ny} maps, scene grid is {}x{}",
                grid.nx, grid.ny
            )));
        }
        Ok(DecodedLikelihood { decoder, misfit, sigma, mask: None })
    }

    pub fn with_mask(mut self, mask: Option<MaskSpec>) -> Self {
        self.mask = mask;
        self
    }

    fn scale(&self) -> f64 {
        -0.5 / (self.sigma * self.sigma)
    }
}

impl<D: Decoder, M: Misfit> LogLikelihood for DecodedLikelihood<D, M> {
    fn dim(&self) -> usize {
        self.decoder.latent_len()
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.scale() * self.misfit.misfit(&self.decoder.decode(z)?)?)
    }

    fn value_and_grad(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let props = self.decoder.decode(z)?;
        let (m, mut g) = self.misfit.misfit_and_grad(&props)?;
        if let Some(mask) = &self.mask {
            apply_sensitivity_mask(&mut g, mask, &self.misfit.grid());
        }
        g.scale(self.scale());
        let grad = self.decoder.vjp(z, &g)?;
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("likelihood gradient".into()));
        }
        Ok((self.scale() * m, grad))
    }

    fn residual_norm(&self, value: f64) -> f64 {
        self.sigma * (-2.0 * value).max(0.0).sqrt()
    }
}

/// `-‖r‖² / (2σ²)` for a complex residual `r`.
pub fn gaussian_log_likelihood(residual: &[Complex64], sigma: f64) -> f64 {
    -residual.iter().map(|r| r.norm_sqr()).sum::<f64>() / (2.0 * sigma * sigma)
}

/// `∂L/∂Re chi + j ∂L/∂Im chi` per frequency for the nonlinear model.
pub fn grad_contrast(misfit: &ScatteringMisfit, chis: &[ContrastMap], sigma: f64) -> Result<(f64, Vec<Vec<Complex64>>)> {
    let (m, mut grads) = misfit.contrast_gradient(chis)?;
    let s = -0.5 / (sigma * sigma);
    grads.iter_mut().flatten().for_each(|g| *g *= s);
    Ok((s * m, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::IdentityDecoder;
    use crate::scene::{GridSpec, PropertyMaps};

    #[test]
    fn complex_residual_likelihood() {
        let r = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        assert_eq!(gaussian_log_likelihood(&r, 1.0), -1.0);
        assert_eq!(gaussian_log_likelihood(&r, 0.5), -4.0);
    }

    #[test]
    fn unit_residual_pair_gives_minus_one() {
        let grid = GridSpec::new(1, 1, 0.01).unwrap();
        let m = LinearMisfit::new(grid, vec![0.0; 4], vec![1.0, 1.0]).unwrap();
        let l = DecodedLikelihood::new(IdentityDecoder { nx: 1, ny: 1 }, m, 1.0).unwrap();
        assert_eq!(l.value(&[1.0, 0.0]).unwrap(), -1.0);
        let m = LinearMisfit::new(grid, vec![0.0; 4], vec![1.0, 1.0]).unwrap();
        let half = DecodedLikelihood::new(IdentityDecoder { nx: 1, ny: 1 }, m, 0.5).unwrap();
        assert_eq!(half.value(&[1.0, 0.0]).unwrap(), -4.0);
    }

    #[test]
    fn exact_data_give_zero_likelihood_and_gradient() {
        let grid = GridSpec::new(1, 1, 0.01).unwrap();
        let m = LinearMisfit::new(grid, vec![1.0, 2.0, 0.0, 1.0], vec![5.0, 0.0]).unwrap();
        let l = DecodedLikelihood::new(IdentityDecoder { nx: 1, ny: 1 }, m, 0.3).unwrap();
        let p = PropertyMaps::from_flat(1, 1, &[5.0, 0.0]).unwrap();
        let (v, g) = l.value_and_grad(&p.to_flat()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn rejects_bad_sigma_and_shape() {
        let grid = GridSpec::new(2, 1, 0.01).unwrap();
        let m = LinearMisfit::new(grid, vec![0.0; 4], vec![1.0]).unwrap();
        assert!(DecodedLikelihood::new(IdentityDecoder { nx: 2, ny: 1 }, m.clone(), 0.0).is_err());
        assert!(DecodedLikelihood::new(IdentityDecoder { nx: 1, ny: 2 }, m, 1.0).is_err());
    }
}
