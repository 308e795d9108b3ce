//! Imaging grid, material maps and the measurement configuration.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Vacuum permittivity in F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Uniform square-cell grid over the investigation domain.
///
/// Cells are stored row-major with `x` fastest: cell `(ix, iy)` lives at
/// index `iy * nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "cell_size_m")]
    pub cell_size: f64,
    /// Lower-left domain corner. Defaults to centering the domain on the origin.
    #[serde(rename = "origin_m", default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, cell_size: f64) -> Result<Self> {
        let grid = GridSpec { nx, ny, cell_size, origin: None };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::config("grid needs at least one cell per axis"));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::config(format!("cell size must be positive, got {}", self.cell_size)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn corner(&self) -> [f64; 2] {
        self.origin.unwrap_or([
            -0.5 * self.nx as f64 * self.cell_size,
            -0.5 * self.ny as f64 * self.cell_size,
        ])
    }

    /// Width and height of the domain in meters.
    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.cell_size, self.ny as f64 * self.cell_size]
    }

    pub fn domain_center(&self) -> [f64; 2] {
        let c = self.corner();
        let e = self.extent();
        [c[0] + 0.5 * e[0], c[1] + 0.5 * e[1]]
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        let c = self.corner();
        [
            c[0] + (ix as f64 + 0.5) * self.cell_size,
            c[1] + (iy as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Cell centers in storage order.
    pub fn centers(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.ny).flat_map(move |iy| (0..self.nx).map(move |ix| self.cell_center(ix, iy)))
    }

    /// Radius of the disk with the same area as one cell.
    pub fn equivalent_radius(&self) -> f64 {
        self.cell_size / std::f64::consts::PI.sqrt()
    }
}

/// Relative permittivity and conductivity maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyMaps {
    pub nx: usize,
    pub ny: usize,
    pub eps_r: Vec<f64>,
    /// Conductivity in S/m.
    pub sigma_e: Vec<f64>,
}

impl PropertyMaps {
    /// Builds maps and checks that they are physical (`eps_r > 0`, `sigma_e >= 0`).
    pub fn new(nx: usize, ny: usize, eps_r: Vec<f64>, sigma_e: Vec<f64>) -> Result<Self> {
        let maps = Self::unconstrained(nx, ny, eps_r, sigma_e)?;
        maps.check_physical()?;
        Ok(maps)
    }

    /// Builds maps without the physical-range check. Samplers and decoders
    /// produce these; the forward model is defined for any real values.
    pub fn unconstrained(nx: usize, ny: usize, eps_r: Vec<f64>, sigma_e: Vec<f64>) -> Result<Self> {
        if eps_r.len() != nx * ny || sigma_e.len() != nx * ny {
            return Err(Error::shape(format!(
                "property maps for {nx}x{ny} grid got {} and {} values",
                eps_r.len(),
                sigma_e.len()
            )));
        }
        Ok(PropertyMaps { nx, ny, eps_r, sigma_e })
    }

    pub fn uniform(grid: &GridSpec, eps_r: f64, sigma_e: f64) -> Self {
        PropertyMaps {
            nx: grid.nx,
            ny: grid.ny,
            eps_r: vec![eps_r; grid.len()],
            sigma_e: vec![sigma_e; grid.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.eps_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_r.is_empty()
    }

    pub fn check_physical(&self) -> Result<()> {
        if let Some(i) = self.eps_r.iter().position(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::config(format!("eps_r[{i}] = {} is not positive", self.eps_r[i])));
        }
        if let Some(i) = self.sigma_e.iter().position(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::config(format!("sigma_e[{i}] = {} is negative", self.sigma_e[i])));
        }
        Ok(())
    }

    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.nx != grid.nx || self.ny != grid.ny {
            return Err(Error::shape(format!(
                "maps are {}x{}, grid is {}x{}",
                self.nx, self.ny, grid.nx, grid.ny
            )));
        }
        Ok(())
    }

    /// Both channels stacked, `eps_r` first.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.eps_r.clone();
        v.extend_from_slice(&self.sigma_e);
        v
    }

    pub fn from_flat(nx: usize, ny: usize, flat: &[f64]) -> Result<Self> {
        let n = nx * ny;
        if flat.len() != 2 * n {
            return Err(Error::shape(format!("expected {} values, got {}", 2 * n, flat.len())));
        }
        Self::unconstrained(nx, ny, flat[..n].to_vec(), flat[n..].to_vec())
    }
}

/// Gradient of a scalar with respect to the two property channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyGradient {
    pub d_eps_r: Vec<f64>,
    pub d_sigma_e: Vec<f64>,
}

impl PropertyGradient {
    pub fn zeros(n: usize) -> Self {
        PropertyGradient { d_eps_r: vec![0.0; n], d_sigma_e: vec![0.0; n] }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.d_eps_r.clone();
        v.extend_from_slice(&self.d_sigma_e);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        let n = flat.len() / 2;
        PropertyGradient { d_eps_r: flat[..n].to_vec(), d_sigma_e: flat[n..].to_vec() }
    }

    pub fn scale(&mut self, s: f64) {
        self.d_eps_r.iter_mut().chain(self.d_sigma_e.iter_mut()).for_each(|v| *v *= s);
    }
}

/// Homogeneous background medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundSpec {
    /// Complex relative permittivity under the `exp(+jωt)` convention.
    pub eps_rb: Complex64,
}

impl BackgroundSpec {
    pub fn new(eps_rb: Complex64) -> Result<Self> {
        if !(eps_rb.re > 0.0) || eps_rb.im > 0.0 || !eps_rb.is_finite() {
            return Err(Error::config(format!(
                "background permittivity {eps_rb} needs Re > 0 and Im <= 0"
            )));
        }
        Ok(BackgroundSpec { eps_rb })
    }

    pub fn vacuum() -> Self {
        BackgroundSpec { eps_rb: Complex64::new(1.0, 0.0) }
    }

    /// Background wavenumber at `frequency`, with `Im k <= 0` (outgoing waves decay).
    pub fn wavenumber(&self, frequency: f64) -> Complex64 {
        let k0 = 2.0 * std::f64::consts::PI * frequency / crate::SPEED_OF_LIGHT;
        let root = self.eps_rb.sqrt();
        k0 * root
    }

    /// Property values that reproduce the background exactly at `frequency`.
    pub fn equivalent_properties(&self, frequency: f64) -> (f64, f64) {
        let omega = 2.0 * std::f64::consts::PI * frequency;
        (self.eps_rb.re, -self.eps_rb.im * omega * EPS0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct BackgroundJson {
    eps_rb_re: f64,
    eps_rb_im: f64,
}

/// Measurement configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub grid: GridSpec,
    pub background: BackgroundSpec,
    pub tx_positions: Vec<[f64; 2]>,
    pub rx_positions: Vec<[f64; 2]>,
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneJson {
    grid: GridSpec,
    background: BackgroundJson,
    tx: Vec<[f64; 2]>,
    rx: Vec<[f64; 2]>,
    frequencies_hz: Vec<f64>,
}

impl Scene {
    pub fn new(
        grid: GridSpec,
        background: BackgroundSpec,
        tx_positions: Vec<[f64; 2]>,
        rx_positions: Vec<[f64; 2]>,
        frequencies: Vec<f64>,
    ) -> Result<Self> {
        let scene = Scene { grid, background, tx_positions, rx_positions, frequencies };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        BackgroundSpec::new(self.background.eps_rb)?;
        if self.tx_positions.is_empty() || self.rx_positions.is_empty() {
            return Err(Error::config("scene needs at least one transmitter and one receiver"));
        }
        if self.frequencies.is_empty() {
            return Err(Error::config("scene needs at least one frequency"));
        }
        if let Some(&f) = self.frequencies.iter().find(|&&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::NonPositiveFrequency(f));
        }
        let finite = |p: &[f64; 2]| p[0].is_finite() && p[1].is_finite();
        if !self.tx_positions.iter().chain(&self.rx_positions).all(finite) {
            return Err(Error::config("sensor positions must be finite"));
        }
        Ok(())
    }

    pub fn n_tx(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx_positions.len()
    }

    pub fn n_freq(&self) -> usize {
        self.frequencies.len()
    }

    /// Number of complex samples in a full measurement vector.
    pub fn data_len(&self) -> usize {
        self.n_tx() * self.n_rx() * self.n_freq()
    }

    /// Position of sample `(freq, tx, rx)` in the frequency-major data vector.
    pub fn data_index(&self, freq: usize, tx: usize, rx: usize) -> usize {
        (freq * self.n_tx() + tx) * self.n_rx() + rx
    }

    pub fn frequency_index(&self, f: f64) -> Result<usize> {
        self.frequencies
            .iter()
            .position(|&g| g == f)
            .ok_or(Error::UnknownFrequency(f))
    }

    /// Scene with `count` sensors evenly spaced on a circle around the domain center.
    pub fn ring(
        grid: GridSpec,
        background: BackgroundSpec,
        n_tx: usize,
        n_rx: usize,
        radius: f64,
        frequencies: Vec<f64>,
    ) -> Result<Self> {
        let c = grid.domain_center();
        let ring = |n: usize| -> Vec<[f64; 2]> {
            (0..n)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    [c[0] + radius * a.cos(), c[1] + radius * a.sin()]
                })
                .collect()
        };
        Scene::new(grid, background, ring(n_tx), ring(n_rx), frequencies)
    }

    pub fn to_json(&self) -> String {
        let json = SceneJson {
            grid: self.grid,
            background: BackgroundJson {
                eps_rb_re: self.background.eps_rb.re,
                eps_rb_im: self.background.eps_rb.im,
            },
            tx: self.tx_positions.clone(),
            rx: self.rx_positions.clone(),
            frequencies_hz: self.frequencies.clone(),
        };
        serde_json::to_string_pretty(&json).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: SceneJson = serde_json::from_str(text)?;
        let background = BackgroundSpec::new(Complex64::new(
            json.background.eps_rb_re,
            json.background.eps_rb_im,
        ))?;
        Scene::new(json.grid, background, json.tx, json.rx, json.frequencies_hz)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
