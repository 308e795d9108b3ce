//! Procedural property-map phantoms.
//!
//! A phantom is a background material plus an ordered list of elliptical
//! regions. Cells are assigned by center membership and later regions
//! overwrite earlier ones, which is how the layered head builds its shells.

use crate::error::{Error, Result};
use crate::scene::{GridSpec, PropertyMaps};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub eps_r: f64,
    pub sigma_e: f64,
}

impl Material {
    pub const VACUUM: Material = Material { eps_r: 1.0, sigma_e: 0.0 };

    pub fn new(eps_r: f64, sigma_e: f64) -> Self {
        Material { eps_r, sigma_e }
    }

    fn check(&self) -> Result<()> {
        if !(self.eps_r > 0.0) || !(self.sigma_e >= 0.0) {
            return Err(Error::config(format!("unphysical material eps_r={} sigma_e={}", self.eps_r, self.sigma_e)));
        }
        Ok(())
    }
}

/// Rotated ellipse; a disk when both semi-axes agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    /// Rotation in radians, counter-clockwise.
    #[serde(default)]
    pub angle: f64,
    pub material: Material,
}

impl Ellipse {
    pub fn disk(center: [f64; 2], radius: f64, material: Material) -> Self {
        Ellipse { center, semi_axes: [radius, radius], angle: 0.0, material }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (s, c) = self.angle.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        // Slack so lattice points exactly on the boundary count despite rounding.
        (u / self.semi_axes[0]).powi(2) + (v / self.semi_axes[1]).powi(2) <= 1.0 + 1e-9
    }

    fn bounding_radius(&self) -> f64 {
        self.semi_axes[0].max(self.semi_axes[1])
    }
}

fn default_background() -> Material {
    Material::VACUUM
}

/// Head-like layering: skull shell, gray matter, white matter, and
/// randomly placed stroke inclusions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub center: [f64; 2],
    /// Outer skull semi-axes.
    pub semi_axes: [f64; 2],
    pub skull_thickness: f64,
    /// Thickness of the gray-matter layer inside the skull.
    pub gray_thickness: f64,
    pub skull: Material,
    pub gray: Material,
    pub white: Material,
    pub stroke: Material,
    pub strokes: usize,
    /// Stroke radii are drawn uniformly from this range.
    pub stroke_radius: [f64; 2],
    pub seed: u64,
}

impl HeadSpec {
    /// Tissue values around 1 GHz.
    pub fn standard(center: [f64; 2], semi_axes: [f64; 2], seed: u64) -> Self {
        let scale = semi_axes[0].min(semi_axes[1]);
        HeadSpec {
            center,
            semi_axes,
            skull_thickness: 0.1 * scale,
            gray_thickness: 0.12 * scale,
            skull: Material::new(12.4, 0.16),
            gray: Material::new(52.3, 0.99),
            white: Material::new(38.6, 0.62),
            stroke: Material::new(61.1, 1.58),
            strokes: 1,
            stroke_radius: [0.1 * scale, 0.2 * scale],
            seed,
        }
    }

    fn regions(&self) -> Result<Vec<Ellipse>> {
        let [a, b] = self.semi_axes;
        let inner = [a - self.skull_thickness, b - self.skull_thickness];
        let white = [inner[0] - self.gray_thickness, inner[1] - self.gray_thickness];
        if white[0] <= 0.0 || white[1] <= 0.0 || self.skull_thickness <= 0.0 || self.gray_thickness <= 0.0 {
            return Err(Error::config("head layers do not fit inside the skull"));
        }
        let mut out = vec![
            Ellipse { center: self.center, semi_axes: self.semi_axes, angle: 0.0, material: self.skull },
            Ellipse { center: self.center, semi_axes: inner, angle: 0.0, material: self.gray },
            Ellipse { center: self.center, semi_axes: white, angle: 0.0, material: self.white },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let [rmin, rmax] = self.stroke_radius;
        for _ in 0..self.strokes {
            let r = if rmax > rmin { rng.random_range(rmin..rmax) } else { rmin };
            // Keep strokes inside the inner skull boundary.
            let reach = (inner[0].min(inner[1]) - r).max(0.0);
            let rho = reach * rng.random::<f64>().sqrt();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let squash = rng.random_range(0.6..1.0);
            out.push(Ellipse {
                center: [self.center[0] + rho * phi.cos(), self.center[1] + rho * phi.sin()],
                semi_axes: [r, r * squash],
                angle: rng.random_range(0.0..std::f64::consts::PI),
                material: self.stroke,
            });
        }
        Ok(out)
    }
}

/// Randomly placed, non-nested disks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomObjectsSpec {
    pub count: usize,
    /// Objects stay inside this disk around the grid center.
    pub region_radius: f64,
    pub radius: [f64; 2],
    pub eps_r: [f64; 2],
    pub sigma_e: [f64; 2],
    pub seed: u64,
}

impl RandomObjectsSpec {
    fn regions(&self, center: [f64; 2]) -> Vec<Ellipse> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let draw = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| if hi > lo { rng.random_range(lo..hi) } else { lo };
        (0..self.count)
            .map(|_| {
                let r = draw(&mut rng, self.radius);
                let reach = (self.region_radius - r).max(0.0);
                let rho = reach * rng.random::<f64>().sqrt();
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                let material = Material::new(draw(&mut rng, self.eps_r), draw(&mut rng, self.sigma_e));
                Ellipse::disk([center[0] + rho * phi.cos(), center[1] + rho * phi.sin()], r, material)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomKind {
    Cylinder { center: [f64; 2], radius: f64, material: Material },
    Shapes { regions: Vec<Ellipse> },
    RandomObjects(RandomObjectsSpec),
    LayeredHead(HeadSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    #[serde(default = "default_background")]
    pub background: Material,
    #[serde(flatten)]
    pub kind: PhantomKind,
}

impl PhantomSpec {
    /// A single homogeneous disk in vacuum.
    pub fn cylinder(center: [f64; 2], radius: f64, eps_r: f64, sigma_e: f64) -> Self {
        PhantomSpec {
            background: Material::VACUUM,
            kind: PhantomKind::Cylinder { center, radius, material: Material::new(eps_r, sigma_e) },
        }
    }

    pub fn empty(background: Material) -> Self {
        PhantomSpec { background, kind: PhantomKind::Shapes { regions: Vec::new() } }
    }

    pub fn with_background(mut self, background: Material) -> Self {
        self.background = background;
        self
    }

    /// Regions relative to `grid`, in painting order.
    pub fn regions(&self, grid: &GridSpec) -> Result<Vec<Ellipse>> {
        match &self.kind {
            PhantomKind::Cylinder { center, radius, material } => Ok(vec![Ellipse::disk(*center, *radius, *material)]),
            PhantomKind::Shapes { regions } => Ok(regions.clone()),
            PhantomKind::RandomObjects(spec) => Ok(spec.regions(grid.domain_center())),
            PhantomKind::LayeredHead(spec) => spec.regions(),
        }
    }

    pub fn rasterize(&self, grid: &GridSpec) -> Result<PropertyMaps> {
        self.background.check()?;
        let regions = self.regions(grid)?;
        let lo = grid.corner();
        let [ex, ey] = grid.extent();
        let slack = 1e-9 * grid.cell_size;
        for (i, r) in regions.iter().enumerate() {
            r.material.check()?;
            let br = r.bounding_radius();
            if !(br > 0.0)
                || r.center[0] - br < lo[0] - slack
                || r.center[1] - br < lo[1] - slack
                || r.center[0] + br > lo[0] + ex + slack
                || r.center[1] + br > lo[1] + ey + slack
            {
                return Err(Error::RegionOutsideGrid(format!("region {i} at {:?}", r.center)));
            }
        }
        let mut eps = vec![self.background.eps_r; grid.len()];
        let mut sig = vec![self.background.sigma_e; grid.len()];
        for (i, c) in grid.centers().enumerate() {
            for r in &regions {
                if r.contains(c) {
                    eps[i] = r.material.eps_r;
                    sig[i] = r.material.sigma_e;
                }
            }
        }
        PropertyMaps::new(grid.nx, grid.ny, eps, sig)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("phantom specs serialize")
    }
}
