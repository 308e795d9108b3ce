//! Feature maps and the handful of layers the networks need, with input
//! gradients for the reverse pass.
//!
//! Weights are stored as `f32` on disk and widened to `f64` at load time, so
//! every activation is computed in double precision.

use rayon::prelude::*;

/// A `channels × height × width` feature map, row-major within each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Tensor { c, h, w, data: vec![0.0; c * h * w] }
    }

    pub fn from_vec(c: usize, h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), c * h * w, "tensor data does not match its shape");
        Tensor { c, h, w, data }
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.c, self.h, self.w]
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &Tensor) -> Tensor {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Tensor { data, ..*self }
    }

    pub fn scaled(&self, s: f64) -> Tensor {
        Tensor { data: self.data.iter().map(|v| v * s).collect(), ..*self }
    }

    /// Channel concatenation.
    pub fn concat(&self, other: &Tensor) -> Tensor {
        assert_eq!((self.h, self.w), (other.h, other.w));
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Tensor { c: self.c + other.c, h: self.h, w: self.w, data }
    }

    /// Splits channels at `at`, the inverse of [`Tensor::concat`].
    pub fn split(&self, at: usize) -> (Tensor, Tensor) {
        let n = at * self.h * self.w;
        (
            Tensor::from_vec(at, self.h, self.w, self.data[..n].to_vec()),
            Tensor::from_vec(self.c - at, self.h, self.w, self.data[n..].to_vec()),
        )
    }
}

/// 3×3 convolution with zero padding 1 and stride 1 or 2.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub cin: usize,
    pub cout: usize,
    pub stride: usize,
    /// `[cout][cin][3][3]`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    fn out_size(&self, n: usize) -> usize {
        (n - 1) / self.stride + 1
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        assert_eq!(x.c, self.cin, "convolution input channels");
        let (h, w) = (x.h, x.w);
        let (ho, wo) = (self.out_size(h), self.out_size(w));
        let s = self.stride;
        let mut out = Tensor::zeros(self.cout, ho, wo);
        out.data.par_chunks_mut(ho * wo).enumerate().for_each(|(co, plane)| {
            plane.iter_mut().for_each(|v| *v = self.bias[co]);
            for ci in 0..self.cin {
                let inp = x.plane(ci);
                let k = &self.weight[(co * self.cin + ci) * 9..(co * self.cin + ci + 1) * 9];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let wv = k[ky * 3 + kx];
                        if wv == 0.0 {
                            continue;
                        }
                        for oy in 0..ho {
                            let iy = (oy * s + ky) as isize - 1;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let row = &inp[iy as usize * w..(iy as usize + 1) * w];
                            let orow = &mut plane[oy * wo..(oy + 1) * wo];
                            for (ox, o) in orow.iter_mut().enumerate() {
                                let ix = (ox * s + kx) as isize - 1;
                                if ix >= 0 && ix < w as isize {
                                    *o += wv * row[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        });
        out
    }

    /// Gradient with respect to the input, given the output gradient.
    pub fn backward(&self, grad_out: &Tensor, h: usize, w: usize) -> Tensor {
        let (ho, wo) = (grad_out.h, grad_out.w);
        let s = self.stride;
        let mut gin = Tensor::zeros(self.cin, h, w);
        gin.data.par_chunks_mut(h * w).enumerate().for_each(|(ci, plane)| {
            for co in 0..self.cout {
                let g = grad_out.plane(co);
                let k = &self.weight[(co * self.cin + ci) * 9..(co * self.cin + ci + 1) * 9];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let wv = k[ky * 3 + kx];
                        if wv == 0.0 {
                            continue;
                        }
                        for oy in 0..ho {
                            let iy = (oy * s + ky) as isize - 1;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let grow = &g[oy * wo..(oy + 1) * wo];
                            let irow = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                            for (ox, gv) in grow.iter().enumerate() {
                                let ix = (ox * s + kx) as isize - 1;
                                if ix >= 0 && ix < w as isize {
                                    irow[ix as usize] += wv * gv;
                                }
                            }
                        }
                    }
                }
            }
        });
        gin
    }
}

/// Nearest-neighbour 2× upsampling.
pub fn upsample2(x: &Tensor) -> Tensor {
    let (h, w) = (2 * x.h, 2 * x.w);
    let mut out = Tensor::zeros(x.c, h, w);
    for c in 0..x.c {
        let src = x.plane(c);
        let dst = &mut out.data[c * h * w..(c + 1) * h * w];
        for y in 0..h {
            for xx in 0..w {
                dst[y * w + xx] = src[(y / 2) * x.w + xx / 2];
            }
        }
    }
    out
}

/// Adjoint of [`upsample2`]: sums each 2×2 block.
pub fn upsample2_backward(g: &Tensor) -> Tensor {
    let (h, w) = (g.h / 2, g.w / 2);
    let mut out = Tensor::zeros(g.c, h, w);
    for c in 0..g.c {
        let src = g.plane(c);
        let dst = &mut out.data[c * h * w..(c + 1) * h * w];
        for y in 0..g.h {
            for x in 0..g.w {
                dst[(y / 2) * w + x / 2] += src[y * g.w + x];
            }
        }
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn silu(x: &Tensor) -> Tensor {
    Tensor { data: x.data.iter().map(|&v| v * sigmoid(v)).collect(), ..*x }
}

/// Gradient through SiLU evaluated at pre-activation `x`.
pub fn silu_backward(x: &Tensor, g: &Tensor) -> Tensor {
    let data = x
        .data
        .iter()
        .zip(&g.data)
        .map(|(&v, &gv)| {
            let s = sigmoid(v);
            gv * (s + v * s * (1.0 - s))
        })
        .collect();
    Tensor { data, ..*x }
}

pub const GROUP_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GroupNorm {
    pub groups: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Per-group normalized activations and inverse standard deviations.
#[derive(Debug, Clone)]
pub struct GroupNormCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
}

impl GroupNorm {
    pub fn forward(&self, x: &Tensor) -> (Tensor, GroupNormCache) {
        let per = x.c / self.groups;
        let n = per * x.h * x.w;
        let mut xhat = Tensor::zeros(x.c, x.h, x.w);
        let mut out = Tensor::zeros(x.c, x.h, x.w);
        let mut inv_std = Vec::with_capacity(self.groups);
        let plane = x.h * x.w;
        for g in 0..self.groups {
            let range = g * n..(g + 1) * n;
            let seg = &x.data[range.clone()];
            let mean = seg.iter().sum::<f64>() / n as f64;
            let var = seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + GROUP_NORM_EPS).sqrt();
            inv_std.push(is);
            for (k, i) in range.enumerate() {
                let c = g * per + k / plane;
                let xh = (x.data[i] - mean) * is;
                xhat.data[i] = xh;
                out.data[i] = self.gamma[c] * xh + self.beta[c];
            }
        }
        (out, GroupNormCache { xhat, inv_std })
    }

    pub fn backward(&self, cache: &GroupNormCache, g: &Tensor) -> Tensor {
        let x = &cache.xhat;
        let per = x.c / self.groups;
        let plane = x.h * x.w;
        let n = per * plane;
        let mut out = Tensor::zeros(x.c, x.h, x.w);
        for grp in 0..self.groups {
            let range = grp * n..(grp + 1) * n;
            let mut sum_d = 0.0;
            let mut sum_dx = 0.0;
            for (k, i) in range.clone().enumerate() {
                let d = g.data[i] * self.gamma[grp * per + k / plane];
                sum_d += d;
                sum_dx += d * x.data[i];
            }
            let is = cache.inv_std[grp];
            for (k, i) in range.enumerate() {
                let d = g.data[i] * self.gamma[grp * per + k / plane];
                out.data[i] = is * (d - sum_d / n as f64 - x.data[i] * sum_dx / n as f64);
            }
        }
        out
    }
}

/// Fully connected layer, weight stored `[out][in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input);
        self.weight
            .chunks_exact(self.input)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }
}

/// Adds `v[c]` to every pixel of channel `c`.
pub fn add_channel_bias(x: &Tensor, v: &[f64]) -> Tensor {
    assert_eq!(x.c, v.len());
    let plane = x.h * x.w;
    let data = x.data.iter().enumerate().map(|(i, a)| a + v[i / plane]).collect();
    Tensor { data, ..*x }
}
