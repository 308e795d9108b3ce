//! Maps from a real latent vector to property maps, with their vector-Jacobian products.

use crate::error::{Error, Result};
use crate::scene::{BackgroundSpec, PropertyGradient, PropertyMaps, EPS0};
use std::f64::consts::PI;

/// A differentiable map `z -> (eps_r, sigma_e)`.
pub trait Decoder: Sync {
    fn latent_len(&self) -> usize;

    /// Output grid `(nx, ny)`.
    fn output_shape(&self) -> (usize, usize);

    fn decode(&self, z: &[f64]) -> Result<PropertyMaps>;

    /// `Jᵀ c`, where `J` is the Jacobian of [`Decoder::decode`] at `z`.
    fn vjp(&self, z: &[f64], cotangent: &PropertyGradient) -> Result<Vec<f64>>;
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::shape(format!("{what} has {got} entries, expected {want}")));
    }
    Ok(())
}

/// The latent vector is the stacked `[eps_r..., sigma_e...]` maps.
#[derive(Debug, Clone, Copy)]
pub struct IdentityDecoder {
    pub nx: usize,
    pub ny: usize,
}

impl Decoder for IdentityDecoder {
    fn latent_len(&self) -> usize {
        2 * self.nx * self.ny
    }

    fn output_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn decode(&self, z: &[f64]) -> Result<PropertyMaps> {
        PropertyMaps::from_flat(self.nx, self.ny, z)
    }

    fn vjp(&self, z: &[f64], cotangent: &PropertyGradient) -> Result<Vec<f64>> {
        check_len("latent", z.len(), self.latent_len())?;
        Ok(cotangent.to_flat())
    }
}

/// Pixel-space contrast parameterization at a reference frequency.
///
/// The latent holds `Re chi` then `Im chi` per cell, so
/// `eps_rb (1 + chi)` gives the complex permittivity. With `real_only` the
/// latent is just `Re chi` and `Im chi` is pinned to zero, which suits
/// lossless targets.
#[derive(Debug, Clone, Copy)]
pub struct ContrastDecoder {
    pub nx: usize,
    pub ny: usize,
    pub background: BackgroundSpec,
    pub frequency: f64,
    pub real_only: bool,
}

impl ContrastDecoder {
    pub fn new(nx: usize, ny: usize, background: BackgroundSpec, frequency: f64, real_only: bool) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::NonPositiveFrequency(frequency));
        }
        Ok(ContrastDecoder { nx, ny, background, frequency, real_only })
    }

    fn omega_eps0(&self) -> f64 {
        2.0 * PI * self.frequency * EPS0
    }

    /// Latent point that decodes to `props`.
    pub fn encode(&self, props: &PropertyMaps) -> Result<Vec<f64>> {
        check_len("property maps", props.len(), self.nx * self.ny)?;
        let w = self.omega_eps0();
        let n = props.len();
        let mut z = vec![0.0; self.latent_len()];
        for i in 0..n {
            let e = num_complex::Complex64::new(props.eps_r[i], -props.sigma_e[i] / w);
            let chi = e / self.background.eps_rb - 1.0;
            z[i] = chi.re;
            if !self.real_only {
                z[n + i] = chi.im;
            }
        }
        Ok(z)
    }
}

impl Decoder for ContrastDecoder {
    fn latent_len(&self) -> usize {
        let n = self.nx * self.ny;
        if self.real_only {
            n
        } else {
            2 * n
        }
    }

    fn output_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn decode(&self, z: &[f64]) -> Result<PropertyMaps> {
        check_len("latent", z.len(), self.latent_len())?;
        let n = self.nx * self.ny;
        let (br, bi) = (self.background.eps_rb.re, self.background.eps_rb.im);
        let w = self.omega_eps0();
        let mut eps = Vec::with_capacity(n);
        let mut sig = Vec::with_capacity(n);
        for i in 0..n {
            let a = z[i];
            let b = if self.real_only { 0.0 } else { z[n + i] };
            eps.push(br * (1.0 + a) - bi * b);
            sig.push(-w * (bi * (1.0 + a) + br * b));
        }
        PropertyMaps::unconstrained(self.nx, self.ny, eps, sig)
    }

    fn vjp(&self, z: &[f64], c: &PropertyGradient) -> Result<Vec<f64>> {
        check_len("latent", z.len(), self.latent_len())?;
        let n = self.nx * self.ny;
        check_len("cotangent", c.d_eps_r.len(), n)?;
        let (br, bi) = (self.background.eps_rb.re, self.background.eps_rb.im);
        let w = self.omega_eps0();
        let mut g = vec![0.0; self.latent_len()];
        for i in 0..n {
            let (ge, gs) = (c.d_eps_r[i], c.d_sigma_e[i]);
            g[i] = br * ge - w * bi * gs;
            if !self.real_only {
                g[n + i] = -bi * ge - w * br * gs;
            }
        }
        Ok(g)
    }
}

/// Affine decoder `[eps_r..., sigma_e...] = A z + b`.
#[derive(Debug, Clone)]
pub struct LinearDecoder {
    pub nx: usize,
    pub ny: usize,
    /// Row-major `(2·nx·ny) × latent_len`.
    pub matrix: Vec<f64>,
    pub offset: Vec<f64>,
    latent_len: usize,
}

impl LinearDecoder {
    pub fn new(nx: usize, ny: usize, matrix: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let rows = 2 * nx * ny;
        check_len("offset", offset.len(), rows)?;
        if rows == 0 || matrix.len() % rows != 0 || matrix.is_empty() {
            return Err(Error::shape(format!("matrix of {} entries does not have {rows} rows", matrix.len())));
        }
        let latent_len = matrix.len() / rows;
        Ok(LinearDecoder { nx, ny, matrix, offset, latent_len })
    }
}

impl Decoder for LinearDecoder {
    fn latent_len(&self) -> usize {
        self.latent_len
    }

    fn output_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn decode(&self, z: &[f64]) -> Result<PropertyMaps> {
        check_len("latent", z.len(), self.latent_len)?;
        let flat: Vec<f64> = self
            .matrix
            .chunks_exact(self.latent_len)
            .zip(&self.offset)
            .map(|(row, b)| b + row.iter().zip(z).map(|(a, x)| a * x).sum::<f64>())
            .collect();
        PropertyMaps::from_flat(self.nx, self.ny, &flat)
    }

    fn vjp(&self, z: &[f64], c: &PropertyGradient) -> Result<Vec<f64>> {
        check_len("latent", z.len(), self.latent_len)?;
        let flat = c.to_flat();
        check_len("cotangent", flat.len(), self.offset.len())?;
        let mut g = vec![0.0; self.latent_len];
        for (row, &ci) in self.matrix.chunks_exact(self.latent_len).zip(&flat) {
            for (gj, a) in g.iter_mut().zip(row) {
                *gj += a * ci;
            }
        }
        Ok(g)
    }
}
