//! Reconstruction and measurement error metrics.

use crate::error::{Error, Result};
use crate::scene::PropertyMaps;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `‖estimate - reference‖ / ‖reference‖` over complex data.
pub fn relative_rmse(estimate: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(Error::shape(format!("{} estimates for {} references", estimate.len(), reference.len())));
    }
    let den: f64 = reference.iter().map(|c| c.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = estimate.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((num / den).sqrt())
}

/// [`relative_rmse`] for real vectors.
pub fn relative_rmse_real(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if estimate.len() != reference.len() {
        return Err(Error::shape(format!("{} estimates for {} references", estimate.len(), reference.len())));
    }
    let den: f64 = reference.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = estimate.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((num / den).sqrt())
}

/// Physical `[lo, hi]` of the two property channels, mapped to `[-1, 1]` for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRanges {
    pub eps_r: [f64; 2],
    pub sigma_e: [f64; 2],
}

impl ChannelRanges {
    /// Ranges spanning both maps, widened to non-zero width.
    pub fn spanning(a: &PropertyMaps, b: &PropertyMaps) -> Self {
        let span = |x: &[f64], y: &[f64]| {
            let lo = x.iter().chain(y).cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().chain(y).cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                [lo, hi]
            } else {
                [lo - 0.5, lo + 0.5]
            }
        };
        ChannelRanges { eps_r: span(&a.eps_r, &b.eps_r), sigma_e: span(&a.sigma_e, &b.sigma_e) }
    }
}

fn rms_normalized(a: &[f64], b: &[f64], [lo, hi]: [f64; 2]) -> f64 {
    let s = 2.0 / (hi - lo);
    (a.iter().zip(b).map(|(x, y)| (s * (x - y)).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Root-mean-square error on normalized channels: `(combined, eps_r, sigma_e)`.
pub fn reconstruction_rmse(estimate: &PropertyMaps, truth: &PropertyMaps, ranges: &ChannelRanges) -> Result<(f64, f64, f64)> {
    if (estimate.nx, estimate.ny) != (truth.nx, truth.ny) {
        return Err(Error::shape("estimate and truth grids differ"));
    }
    let e = rms_normalized(&estimate.eps_r, &truth.eps_r, ranges.eps_r);
    let s = rms_normalized(&estimate.sigma_e, &truth.sigma_e, ranges.sigma_e);
    Ok((((e * e + s * s) / 2.0).sqrt(), e, s))
}

const SSIM_SIGMA: f64 = 1.5;
const SSIM_RADIUS: usize = 5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_kernel() -> Vec<f64> {
    let w: Vec<f64> = (0..=2 * SSIM_RADIUS)
        .map(|i| {
            let x = i as f64 - SSIM_RADIUS as f64;
            (-0.5 * x * x / (SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Half-sample symmetric index reflection (`d c b a | a b c d | d c b a`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

fn blur(x: &[f64], nx: usize, ny: usize, k: &[f64]) -> Vec<f64> {
    let r = SSIM_RADIUS as isize;
    let mut tmp = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            tmp[iy * nx + ix] = (-r..=r).map(|d| k[(d + r) as usize] * x[iy * nx + reflect(ix as isize + d, nx)]).sum();
        }
    }
    let mut out = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            out[iy * nx + ix] = (-r..=r).map(|d| k[(d + r) as usize] * tmp[reflect(iy as isize + d, ny) * nx + ix]).sum();
        }
    }
    out
}

/// Mean structural similarity of `estimate` against `reference`.
///
/// Local statistics use an 11×11 Gaussian window with σ = 1.5 and reflected
/// borders; the mean skips a 5-pixel margin. The dynamic range is the
/// reference's max minus min, or 1 for a constant reference.
pub fn ssim(estimate: &[f64], reference: &[f64], nx: usize, ny: usize) -> Result<f64> {
    let win = 2 * SSIM_RADIUS + 1;
    if nx < win || ny < win {
        return Err(Error::ImageTooSmall { nx, ny, window: win });
    }
    if estimate.len() != nx * ny || reference.len() != nx * ny {
        return Err(Error::shape("image sizes differ"));
    }
    let hi = reference.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = reference.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let c1 = (K1 * range).powi(2);
    let c2 = (K2 * range).powi(2);
    let k = gaussian_kernel();
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>();
    let ux = blur(estimate, nx, ny, &k);
    let uy = blur(reference, nx, ny, &k);
    let uxx = blur(&prod(estimate, estimate), nx, ny, &k);
    let uyy = blur(&prod(reference, reference), nx, ny, &k);
    let uxy = blur(&prod(estimate, reference), nx, ny, &k);
    let mut total = 0.0;
    let mut count = 0usize;
    for iy in SSIM_RADIUS..ny - SSIM_RADIUS {
        for ix in SSIM_RADIUS..nx - SSIM_RADIUS {
            let i = iy * nx + ix;
            let vx = uxx[i] - ux[i] * ux[i];
            let vy = uyy[i] - uy[i] * uy[i];
            let vxy = uxy[i] - ux[i] * uy[i];
            let num = (2.0 * ux[i] * uy[i] + c1) * (2.0 * vxy + c2);
            let den = (ux[i] * ux[i] + uy[i] * uy[i] + c1) * (vx + vy + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// SSIM averaged over the permittivity and conductivity channels.
pub fn ssim_maps(estimate: &PropertyMaps, reference: &PropertyMaps) -> Result<f64> {
    if (estimate.nx, estimate.ny) != (reference.nx, reference.ny) {
        return Err(Error::shape("estimate and reference grids differ"));
    }
    let (nx, ny) = (reference.nx, reference.ny);
    Ok(0.5 * (ssim(&estimate.eps_r, &reference.eps_r, nx, ny)? + ssim(&estimate.sigma_e, &reference.sigma_e, nx, ny)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_measurement: Option<f64>,
    pub rmse_reconstruction: f64,
    pub rmse_eps_r: f64,
    pub rmse_sigma_e: f64,
    pub ssim: f64,
    pub ssim_eps_r: f64,
    pub ssim_sigma_e: f64,
    pub ranges: ChannelRanges,
}

impl MetricReport {
    pub fn compute(
        estimate: &PropertyMaps,
        truth: &PropertyMaps,
        ranges: &ChannelRanges,
        data: Option<(&[Complex64], &[Complex64])>,
    ) -> Result<Self> {
        let (rmse_reconstruction, rmse_eps_r, rmse_sigma_e) = reconstruction_rmse(estimate, truth, ranges)?;
        let (nx, ny) = (truth.nx, truth.ny);
        let ssim_eps_r = ssim(&estimate.eps_r, &truth.eps_r, nx, ny)?;
        let ssim_sigma_e = ssim(&estimate.sigma_e, &truth.sigma_e, nx, ny)?;
        let rmse_measurement = data.map(|(est, obs)| relative_rmse(est, obs)).transpose()?;
        Ok(MetricReport {
            rmse_measurement,
            rmse_reconstruction,
            rmse_eps_r,
            rmse_sigma_e,
            ssim: 0.5 * (ssim_eps_r + ssim_sigma_e),
            ssim_eps_r,
            ssim_sigma_e,
            ranges: *ranges,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        if let Some(m) = self.rmse_measurement {
            s += &format!("rmse_measurement,{m:e}\n");
        }
        for (k, v) in [
            ("rmse_reconstruction", self.rmse_reconstruction),
            ("rmse_eps_r", self.rmse_eps_r),
            ("rmse_sigma_e", self.rmse_sigma_e),
            ("ssim", self.ssim),
            ("ssim_eps_r", self.ssim_eps_r),
            ("ssim_sigma_e", self.ssim_sigma_e),
        ] {
            s += &format!("{k},{v:e}\n");
        }
        s
    }
}
