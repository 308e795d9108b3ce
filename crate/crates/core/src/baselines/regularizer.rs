//! Spatial finite differences and the penalties built on them.
//!
//! Differences are forward with a replicated boundary, so the last column
//! (row) has zero horizontal (vertical) difference.

/// `(dx, dy)` of an `nx × ny` map stored row by row.
pub fn spatial_gradient(x: &[f64], nx: usize, ny: usize) -> (Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; nx * ny];
    let mut dy = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let i = iy * nx + ix;
            if ix + 1 < nx {
                dx[i] = x[i + 1] - x[i];
            }
            if iy + 1 < ny {
                dy[i] = x[i + nx] - x[i];
            }
        }
    }
    (dx, dy)
}

/// Adjoint of [`spatial_gradient`].
pub fn spatial_gradient_adjoint(dx: &[f64], dy: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let i = iy * nx + ix;
            if ix + 1 < nx {
                out[i + 1] += dx[i];
                out[i] -= dx[i];
            }
            if iy + 1 < ny {
                out[i + nx] += dy[i];
                out[i] -= dy[i];
            }
        }
    }
    out
}

/// Mean squared spatial gradient and its gradient.
pub fn l2_gradient_penalty(x: &[f64], nx: usize, ny: usize) -> (f64, Vec<f64>) {
    let n = (nx * ny) as f64;
    let (dx, dy) = spatial_gradient(x, nx, ny);
    let value = dx.iter().chain(&dy).map(|v| v * v).sum::<f64>() / n;
    let mut g = spatial_gradient_adjoint(&dx, &dy, nx, ny);
    g.iter_mut().for_each(|v| *v *= 2.0 / n);
    (value, g)
}

/// Anisotropic total variation `Σ |dx| + |dy|`.
pub fn total_variation(x: &[f64], nx: usize, ny: usize) -> f64 {
    let (dx, dy) = spatial_gradient(x, nx, ny);
    dx.iter().chain(&dy).map(|v| v.abs()).sum()
}

/// `sign(x) · max(|x| - θ, 0)`.
pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    x.signum() * (x.abs() - threshold).max(0.0)
}
