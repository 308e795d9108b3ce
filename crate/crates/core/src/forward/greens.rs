//! Discretized Green's operators of the 2-D TM scattering problem.
//!
//! Every square cell is replaced by a disk of equal area, radius `a`, so the
//! kernel `(-j/4) H0(kρ)` integrates in closed form:
//!
//! * between distinct cells: `-j (π k a / 2) J1(k a) H0(k ρ)`
//! * over the observation cell itself: `-1 - j (π / 2) k a H1(k a)`
//!
//! Both already carry the `k²` of the contrast formulation, so the total field
//! obeys `E - G_D diag(chi) E = E_inc` and receivers see `G_S diag(chi) E`.

use crate::error::{Error, Result};
use crate::scene::{GridSpec, Scene};
use crate::special::{cylinder_fns, hankel0_2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Largest grid (in cells) for which a dense `G_D` is materialized.
pub const DENSE_CELL_LIMIT: usize = 24 * 24;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Closed-form cell integrals of the background kernel.
#[derive(Debug, Clone, Copy)]
pub struct CellKernel {
    pub k: Complex64,
    pub radius: f64,
    /// Multiplies `H0(k ρ)` for off-diagonal interactions.
    pub coupling: Complex64,
    pub self_term: Complex64,
}

impl CellKernel {
    pub fn new(k: Complex64, radius: f64) -> Self {
        let ka = k * radius;
        let f = cylinder_fns(ka);
        CellKernel {
            k,
            radius,
            coupling: -J * (PI * ka / 2.0) * f.j1,
            self_term: -1.0 - J * (PI / 2.0) * ka * f.h1_2(),
        }
    }

    /// Interaction between the cell centered at distance `rho` and an observer.
    /// `rho == 0` selects the self term.
    pub fn eval(&self, rho: f64) -> Complex64 {
        if rho == 0.0 {
            self.self_term
        } else {
            self.coupling * hankel0_2(self.k * rho)
        }
    }
}

/// `G_D` and `G_S` for one frequency.
///
/// `G_D` is applied as a 2-D linear convolution through a zero-padded FFT of
/// size `2nx × 2ny`; a dense copy can be built for small grids.
pub struct GreensOperators {
    pub frequency: f64,
    pub grid: GridSpec,
    pub kernel: CellKernel,
    /// Receiver propagation, row-major `N_R × (nx·ny)`.
    pub g_s: Vec<Complex64>,
    n_rx: usize,
    spectrum: Vec<Complex64>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GreensOperators {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreensOperators")
            .field("frequency", &self.frequency)
            .field("grid", &self.grid)
            .field("n_rx", &self.n_rx)
            .finish()
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl GreensOperators {
    /// Assembles the operators for `f`, which must be one of the scene frequencies.
    pub fn assemble(scene: &Scene, f: f64) -> Result<Self> {
        scene.frequency_index(f)?;
        let grid = scene.grid;
        let k = scene.background.wavenumber(f);
        let kernel = CellKernel::new(k, grid.equivalent_radius());

        let min_sep = 1e-9 * grid.cell_size;
        let centers: Vec<[f64; 2]> = grid.centers().collect();
        let mut g_s = Vec::with_capacity(scene.n_rx() * centers.len());
        for (q, &rx) in scene.rx_positions.iter().enumerate() {
            for &c in &centers {
                let rho = distance(rx, c);
                if rho < min_sep {
                    return Err(Error::config(format!("receiver {q} coincides with a cell center")));
                }
                g_s.push(kernel.eval(rho));
            }
        }

        let (px, py) = (2 * grid.nx, 2 * grid.ny);
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(px);
        let ifft_x = planner.plan_fft_inverse(px);
        let fft_y = planner.plan_fft_forward(py);
        let ifft_y = planner.plan_fft_inverse(py);

        // Circulant embedding of the Toeplitz-block-Toeplitz kernel. Offsets
        // `d` and `d - p` share a slot; the slot at exactly `nx` stays empty.
        let mut spectrum = vec![Complex64::new(0.0, 0.0); px * py];
        let h = grid.cell_size;
        for jy in 0..py {
            let dy = match jy {
                j if j < grid.ny => j as f64,
                j if j > grid.ny => j as f64 - py as f64,
                _ => continue,
            };
            for jx in 0..px {
                let dx = match jx {
                    j if j < grid.nx => j as f64,
                    j if j > grid.nx => j as f64 - px as f64,
                    _ => continue,
                };
                spectrum[jy * px + jx] = kernel.eval(h * dx.hypot(dy));
            }
        }
        let mut ops = GreensOperators {
            frequency: f,
            grid,
            kernel,
            g_s,
            n_rx: scene.n_rx(),
            spectrum: Vec::new(),
            fft_x,
            ifft_x,
            fft_y,
            ifft_y,
        };
        ops.fft2(&mut spectrum, false);
        ops.spectrum = spectrum;
        Ok(ops)
    }

    pub fn n_cells(&self) -> usize {
        self.grid.len()
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let (px, py) = (2 * self.grid.nx, 2 * self.grid.ny);
        let (fx, fy) = if inverse { (&self.ifft_x, &self.ifft_y) } else { (&self.fft_x, &self.fft_y) };
        fx.process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); py];
        for ix in 0..px {
            for iy in 0..py {
                col[iy] = buf[iy * px + ix];
            }
            fy.process(&mut col);
            for iy in 0..py {
                buf[iy * px + ix] = col[iy];
            }
        }
    }

    /// `G_D x` via FFT convolution.
    pub fn apply_gd(&self, x: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        assert_eq!(x.len(), nx * ny, "field length does not match grid");
        let px = 2 * nx;
        let mut buf = vec![Complex64::new(0.0, 0.0); px * 2 * ny];
        for iy in 0..ny {
            buf[iy * px..iy * px + nx].copy_from_slice(&x[iy * nx..(iy + 1) * nx]);
        }
        self.fft2(&mut buf, false);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.fft2(&mut buf, true);
        let scale = 1.0 / buf.len() as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            out.extend(buf[iy * px..iy * px + nx].iter().map(|v| v * scale));
        }
        out
    }

    /// Dense `G_D`, row-major. Fails above [`DENSE_CELL_LIMIT`] cells.
    pub fn dense_gd(&self) -> Result<Vec<Complex64>> {
        let n = self.n_cells();
        if n > DENSE_CELL_LIMIT {
            return Err(Error::DenseTooLarge { cells: n, limit: DENSE_CELL_LIMIT });
        }
        let centers: Vec<[f64; 2]> = self.grid.centers().collect();
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            m[i * n + i] = self.kernel.self_term;
            for j in i + 1..n {
                let v = self.kernel.eval(distance(centers[i], centers[j]));
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        Ok(m)
    }

    /// `G_S x`: one value per receiver.
    pub fn apply_gs(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_cells();
        assert_eq!(x.len(), n, "field length does not match grid");
        self.g_s
            .chunks_exact(n)
            .map(|row| row.iter().zip(x).map(|(g, v)| g * v).sum())
            .collect()
    }

    /// `G_Sᵀ y`: back-propagates receiver values into the domain.
    pub fn apply_gs_transpose(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_cells();
        assert_eq!(y.len(), self.n_rx, "one value per receiver expected");
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (row, &yq) in self.g_s.chunks_exact(n).zip(y) {
            for (o, g) in out.iter_mut().zip(row) {
                *o += g * yq;
            }
        }
        out
    }
}

/// Incident field `H0(k |r - r_p|)` of a unit line source at every cell center.
pub fn incident_field(grid: &GridSpec, k: Complex64, source: [f64; 2], index: usize) -> Result<Vec<Complex64>> {
    let min_sep = 1e-9 * grid.cell_size;
    grid.centers()
        .map(|c| {
            let rho = distance(c, source);
            if rho < min_sep {
                Err(Error::SourceOnCell { index })
            } else {
                Ok(hankel0_2(k * rho))
            }
        })
        .collect()
}

/// Incident fields for every transmitter of the scene at frequency `f`.
pub fn incident_fields(scene: &Scene, f: f64) -> Result<Vec<Vec<Complex64>>> {
    scene.frequency_index(f)?;
    let k = scene.background.wavenumber(f);
    scene
        .tx_positions
        .iter()
        .enumerate()
        .map(|(p, &tx)| incident_field(&scene.grid, k, tx, p))
        .collect()
}
