use crate::error::{Error, Result};
use crate::scene::{BackgroundSpec, PropertyMaps, EPS0};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Per-cell complex contrast at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMap {
    pub chi: Vec<Complex64>,
    pub frequency: f64,
}

impl ContrastMap {
    pub fn zeros(n: usize, frequency: f64) -> Self {
        ContrastMap { chi: vec![Complex64::new(0.0, 0.0); n], frequency }
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.chi.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

fn omega(f: f64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::NonPositiveFrequency(f));
    }
    Ok(2.0 * PI * f)
}

/// Complex relative permittivity `eps_r - j sigma / (omega eps0)` of one cell.
pub fn complex_permittivity(eps_r: f64, sigma_e: f64, f: f64) -> Complex64 {
    Complex64::new(eps_r, -sigma_e / (2.0 * PI * f * EPS0))
}

/// `chi = eps_r / eps_rb - j sigma / (omega eps0 eps_rb) - 1`, cell by cell.
pub fn build_contrast(props: &PropertyMaps, bg: &BackgroundSpec, f: f64) -> Result<ContrastMap> {
    let w = omega(f)?;
    if props.eps_r.len() != props.sigma_e.len() {
        return Err(Error::shape("eps_r and sigma_e differ in length"));
    }
    let inv_b = 1.0 / bg.eps_rb;
    let chi = props
        .eps_r
        .iter()
        .zip(&props.sigma_e)
        .map(|(&e, &s)| Complex64::new(e, -s / (w * EPS0)) * inv_b - 1.0)
        .collect();
    Ok(ContrastMap { chi, frequency: f })
}

/// Inverse of [`build_contrast`]. Contrasts with `Re(eps_rb (1 + chi))` or
/// `-Im(...)` of the wrong sign produce unphysical maps, so the result is unchecked.
pub fn props_from_contrast(
    chi: &ContrastMap,
    bg: &BackgroundSpec,
    nx: usize,
    ny: usize,
) -> Result<PropertyMaps> {
    let w = omega(chi.frequency)?;
    let (eps, sig): (Vec<f64>, Vec<f64>) = chi
        .chi
        .iter()
        .map(|&c| {
            let e = bg.eps_rb * (1.0 + c);
            (e.re, -w * EPS0 * e.im)
        })
        .unzip();
    PropertyMaps::unconstrained(nx, ny, eps, sig)
}

/// Partial derivatives of `chi` with respect to `eps_r` and `sigma_e`.
///
/// Both are constants per frequency since the map is affine.
pub fn contrast_jacobian(bg: &BackgroundSpec, f: f64) -> Result<(Complex64, Complex64)> {
    let w = omega(f)?;
    let inv_b = 1.0 / bg.eps_rb;
    Ok((inv_b, Complex64::new(0.0, -1.0 / (w * EPS0)) * inv_b))
}
