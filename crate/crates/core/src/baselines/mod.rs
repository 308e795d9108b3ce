//! Deterministic reconstructions: Occam (smoothness-regularized data fit),
//! total-variation ADMM, and generative-model regularization (optimization
//! over a decoder's latent space).
//!
//! Every data term is the misfit normalized by `‖d_obs‖²`. Spatial penalties
//! are averaged over cells so their weight does not grow with the grid.

mod adam;
mod regularizer;

pub use adam::{cosine_lr, Adam};
pub use regularizer::{l2_gradient_penalty, soft_threshold, spatial_gradient, spatial_gradient_adjoint, total_variation};

use crate::decoder::{ContrastDecoder, Decoder};
use crate::error::{Error, Result};
use crate::likelihood::Misfit;
use crate::scene::{PropertyMaps, Scene};
use serde::{Deserialize, Serialize};

/// Per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    /// `‖d_obs - F(x)‖ / ‖d_obs‖` before the update.
    pub relative_residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct InversionResult {
    pub params: Vec<f64>,
    pub props: PropertyMaps,
    pub history: Vec<IterRecord>,
    /// Relative residual of the returned estimate.
    pub final_residual: f64,
}

/// Pixel contrast parameterization at the scene's first frequency.
pub fn pixel_decoder(scene: &Scene, real_only: bool) -> Result<ContrastDecoder> {
    ContrastDecoder::new(scene.grid.nx, scene.grid.ny, scene.background, scene.frequencies[0], real_only)
}

/// Normalized data term and its gradient in decoder parameters.
fn data_term<D: Decoder + ?Sized, M: Misfit + ?Sized>(misfit: &M, decoder: &D, p: &[f64]) -> Result<(f64, Vec<f64>)> {
    let norm = misfit.data_norm_sq();
    if norm <= 0.0 {
        return Err(Error::ZeroReference);
    }
    let props = decoder.decode(p)?;
    let (m, mut g) = misfit.misfit_and_grad(&props)?;
    g.scale(1.0 / norm);
    Ok((m / norm, decoder.vjp(p, &g)?))
}

fn relative_residual<D: Decoder + ?Sized, M: Misfit + ?Sized>(misfit: &M, decoder: &D, p: &[f64]) -> Result<f64> {
    Ok((misfit.misfit(&decoder.decode(p)?)? / misfit.data_norm_sq()).sqrt())
}

fn channels(decoder: &dyn Decoder) -> Result<(usize, usize, usize)> {
    let (nx, ny) = decoder.output_shape();
    let n = nx * ny;
    if decoder.latent_len() % n != 0 {
        return Err(Error::shape("pixel parameters must be whole maps"));
    }
    Ok((nx, ny, decoder.latent_len() / n))
}

fn finish<D: Decoder + ?Sized, M: Misfit + ?Sized>(
    misfit: &M,
    decoder: &D,
    params: Vec<f64>,
    history: Vec<IterRecord>,
) -> Result<InversionResult> {
    let final_residual = relative_residual(misfit, decoder, &params)?;
    Ok(InversionResult { props: decoder.decode(&params)?, params, history, final_residual })
}

fn default_real_only() -> bool {
    false
}

/// Gradient-smoothness regularized inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccamConfig {
    pub iterations: usize,
    pub lr: f64,
    pub coefficient: f64,
    /// Scale the coefficient by the current relative residual every iteration.
    pub multiplicative: bool,
    #[serde(default = "default_real_only")]
    pub real_only: bool,
}

impl Default for OccamConfig {
    fn default() -> Self {
        OccamConfig { iterations: 400, lr: 0.01, coefficient: 20.0, multiplicative: true, real_only: false }
    }
}

pub fn occam_invert<M: Misfit + ?Sized>(
    misfit: &M,
    decoder: &dyn Decoder,
    cfg: &OccamConfig,
    init: Vec<f64>,
) -> Result<InversionResult> {
    if !(cfg.coefficient >= 0.0) {
        return Err(Error::config("regularization coefficient must be non-negative"));
    }
    let (nx, ny, k) = channels(decoder)?;
    let n = nx * ny;
    let mut p = init;
    let mut opt = Adam::new(p.len(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let (data, mut g) = data_term(misfit, decoder, &p)?;
        let rel = data.sqrt();
        let coeff = if cfg.multiplicative { cfg.coefficient * rel } else { cfg.coefficient };
        let mut objective = data;
        for c in 0..k {
            let (r, rg) = l2_gradient_penalty(&p[c * n..(c + 1) * n], nx, ny);
            objective += coeff * r;
            g[c * n..(c + 1) * n].iter_mut().zip(rg).for_each(|(a, b)| *a += coeff * b);
        }
        history.push(IterRecord { iteration: it, relative_residual: rel, objective });
        opt.step(&mut p, &g)?;
    }
    finish(misfit, decoder, p, history)
}

/// Total-variation regularized inversion by ADMM on the gradient field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvAdmmConfig {
    pub coefficient: f64,
    pub outer: usize,
    pub inner: usize,
    pub lr: f64,
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    #[serde(default = "default_real_only")]
    pub real_only: bool,
}

impl Default for TvAdmmConfig {
    fn default() -> Self {
        TvAdmmConfig { coefficient: 5.0, outer: 20, inner: 20, lr: 0.01, rho: 1.0, real_only: false }
    }
}

/// Minimizes `data(p) + (τ/n) Σ |D p|` with the split `w = D p`.
///
/// The `p`-update takes `inner` Adam steps on
/// `data(p) + (ρ/2n) ‖D p - w + u‖²`, the `w`-update is soft-thresholding at
/// `τ/ρ`, and the scaled dual `u` accumulates the constraint violation.
pub fn tv_admm_invert<M: Misfit + ?Sized>(
    misfit: &M,
    decoder: &dyn Decoder,
    cfg: &TvAdmmConfig,
    init: Vec<f64>,
) -> Result<InversionResult> {
    if !(cfg.coefficient >= 0.0) || !(cfg.rho > 0.0) {
        return Err(Error::config("TV coefficient must be non-negative and rho positive"));
    }
    let (nx, ny, k) = channels(decoder)?;
    let n = nx * ny;
    let scale = 1.0 / n as f64;
    let mut p = init;
    let grad_of = |p: &[f64]| -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..k).map(|c| spatial_gradient(&p[c * n..(c + 1) * n], nx, ny)).collect()
    };
    let mut w = grad_of(&p);
    let mut u: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![0.0; n], vec![0.0; n]); k];
    let mut opt = Adam::new(p.len(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.outer * cfg.inner);
    let thr = cfg.coefficient / cfg.rho;
    for outer in 0..cfg.outer {
        for inner in 0..cfg.inner {
            let (data, mut g) = data_term(misfit, decoder, &p)?;
            let mut aug = 0.0;
            for (c, ((dx, dy), ((wx, wy), (ux, uy)))) in grad_of(&p).into_iter().zip(w.iter().zip(&u)).enumerate() {
                let rx: Vec<f64> = dx.iter().zip(wx).zip(ux).map(|((d, w), u)| d - w + u).collect();
                let ry: Vec<f64> = dy.iter().zip(wy).zip(uy).map(|((d, w), u)| d - w + u).collect();
                aug += 0.5 * cfg.rho * scale * rx.iter().chain(&ry).map(|v| v * v).sum::<f64>();
                let adj = spatial_gradient_adjoint(&rx, &ry, nx, ny);
                g[c * n..(c + 1) * n].iter_mut().zip(adj).for_each(|(a, b)| *a += cfg.rho * scale * b);
            }
            history.push(IterRecord { iteration: outer * cfg.inner + inner, relative_residual: data.sqrt(), objective: data + aug });
            opt.step(&mut p, &g)?;
        }
        let d = grad_of(&p);
        for ((dc, wc), uc) in d.iter().zip(w.iter_mut()).zip(u.iter_mut()) {
            for (dv, wv, uv) in [(&dc.0, &mut wc.0, &mut uc.0), (&dc.1, &mut wc.1, &mut uc.1)] {
                for i in 0..n {
                    wv[i] = soft_threshold(dv[i] + uv[i], thr);
                    uv[i] += dv[i] - wv[i];
                }
            }
        }
    }
    finish(misfit, decoder, p, history)
}

/// Latent-space optimization through a decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmrConfig {
    pub steps: usize,
    pub lr: f64,
    /// Weight of `‖z‖²`.
    pub reg: f64,
    /// Anneal the learning rate with a half cosine.
    #[serde(default)]
    pub cosine: bool,
}

impl Default for GmrConfig {
    fn default() -> Self {
        GmrConfig { steps: 500, lr: 0.08, reg: 0.005, cosine: false }
    }
}

pub fn gmr_invert<M: Misfit + ?Sized>(misfit: &M, decoder: &dyn Decoder, cfg: &GmrConfig, z0: Vec<f64>) -> Result<InversionResult> {
    if z0.len() != decoder.latent_len() {
        return Err(Error::shape(format!("initial latent has {} entries, expected {}", z0.len(), decoder.latent_len())));
    }
    let mut z = z0;
    let mut opt = Adam::new(z.len(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.steps);
    for it in 0..cfg.steps {
        let (data, mut g) = data_term(misfit, decoder, &z)?;
        let reg: f64 = z.iter().map(|v| v * v).sum();
        g.iter_mut().zip(&z).for_each(|(gi, zi)| *gi += 2.0 * cfg.reg * zi);
        history.push(IterRecord { iteration: it, relative_residual: data.sqrt(), objective: data + cfg.reg * reg });
        if cfg.cosine {
            opt.lr = cosine_lr(cfg.lr, it, cfg.steps);
        }
        opt.step(&mut z, &g)?;
    }
    finish(misfit, decoder, z, history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::IdentityDecoder;
    use crate::likelihood::LinearMisfit;
    use crate::scene::GridSpec;

    fn blur_problem() -> (LinearMisfit, GridSpec) {
        // Each datum averages a horizontal pair of eps cells.
        let grid = GridSpec::new(3, 2, 0.01).unwrap();
        let n = 2 * grid.len();
        let mut b = Vec::new();
        let mut d = Vec::new();
        for i in 0..5 {
            let mut row = vec![0.0; n];
            row[i] = 0.5;
            row[i + 1] = 0.5;
            b.extend(row);
            d.push(1.0 + 0.1 * i as f64);
        }
        (LinearMisfit::new(grid, b, d).unwrap(), grid)
    }

    #[test]
    fn occam_without_penalty_descends() {
        let (m, _) = blur_problem();
        let cfg = OccamConfig { iterations: 60, lr: 0.01, coefficient: 0.0, multiplicative: false, real_only: false };
        let r = occam_invert(&m, &IdentityDecoder { nx: 3, ny: 2 }, &cfg, vec![0.0; 12]).unwrap();
        assert!(r.history.windows(2).all(|w| w[1].objective <= w[0].objective));
        assert!(r.final_residual < r.history[0].relative_residual);
    }

    #[test]
    fn tv_admm_reduces_residual() {
        let (m, _) = blur_problem();
        let cfg = TvAdmmConfig { coefficient: 0.01, outer: 10, inner: 20, lr: 0.05, rho: 1.0, real_only: false };
        let r = tv_admm_invert(&m, &IdentityDecoder { nx: 3, ny: 2 }, &cfg, vec![0.0; 12]).unwrap();
        assert!(r.final_residual < 0.5 * r.history[0].relative_residual);
        assert_eq!(r.history.len(), 200);
    }

    #[test]
    fn gmr_with_identity_decoder_is_gradient_descent() {
        let (m, _) = blur_problem();
        let cfg = GmrConfig { steps: 1, lr: 0.01, reg: 0.0, cosine: false };
        let dec = IdentityDecoder { nx: 3, ny: 2 };
        let r = gmr_invert(&m, &dec, &cfg, vec![0.0; 12]).unwrap();
        // First Adam step moves each coordinate by lr against the gradient sign.
        let (_, g) = data_term(&m, &dec, &[0.0; 12]).unwrap();
        for (p, gi) in r.params.iter().zip(g) {
            if gi != 0.0 {
                assert!((p + 0.01 * gi.signum()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn config_defaults_match_recipes() {
        assert_eq!(OccamConfig::default().iterations, 400);
        assert_eq!(TvAdmmConfig::default().coefficient, 5.0);
        let g = GmrConfig::default();
        assert_eq!((g.steps, g.lr, g.reg), (500, 0.08, 0.005));
    }
}
