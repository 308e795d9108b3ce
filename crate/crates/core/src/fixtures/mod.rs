//! Small problems with known posteriors, used to validate the sampler.
//!
//! [`ConjugateFixture`] pairs an affine decoder and a linear forward map with a
//! standard Gaussian latent prior, so the posterior is Gaussian in closed form.
//! [`GmmFixture`] keeps a two-dimensional latent with a mixture prior and
//! evaluates its posterior by brute force on a grid.

pub mod cylinder;

use crate::decoder::{Decoder, LinearDecoder};
use crate::error::{Error, Result};
use crate::likelihood::{DecodedLikelihood, LinearMisfit};
use crate::priors::{GaussianPrior, GmmPrior, GmmScore, SdeSchedule};
use crate::scene::GridSpec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Linear-Gaussian inverse problem in latent space.
#[derive(Debug, Clone)]
pub struct ConjugateFixture {
    pub decoder: LinearDecoder,
    pub misfit: LinearMisfit,
    pub sigma: f64,
    pub prior: GaussianPrior,
    /// Latent used to synthesize the data.
    pub truth: Vec<f64>,
    pub posterior_mean: Vec<f64>,
    /// Row-major `dim × dim`.
    pub posterior_cov: Vec<f64>,
}

impl ConjugateFixture {
    /// `dim` latents decoded onto a `dim/2 × 1` grid (both channels), observed
    /// through `n_obs` random projections with noise `sigma`.
    pub fn new(dim: usize, n_obs: usize, sigma: f64, schedule: SdeSchedule, seed: u64) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 || n_obs == 0 {
            return Err(Error::config(format!("conjugate fixture needs an even latent size and data, got {dim} and {n_obs}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |scale: f64| -> f64 {
            let v: f64 = StandardNormal.sample(&mut rng);
            scale * v
        };
        let nx = dim / 2;
        let a: Vec<f64> = (0..dim * dim).map(|_| normal(1.0 / (dim as f64).sqrt())).collect();
        let offset: Vec<f64> = (0..dim).map(|_| normal(0.3)).collect();
        let b: Vec<f64> = (0..n_obs * dim).map(|_| normal(1.0 / (dim as f64).sqrt())).collect();
        // A truth far out in the prior tail moves the posterior mean well away
        // from zero, which keeps relative errors of the mean meaningful.
        let truth: Vec<f64> = (0..dim).map(|_| normal(2.5)).collect();

        let am = DMatrix::from_row_slice(dim, dim, &a);
        let bm = DMatrix::from_row_slice(n_obs, dim, &b);
        let x_true = &am * DVector::from_column_slice(&truth) + DVector::from_column_slice(&offset);
        let clean = &bm * x_true;
        let d: Vec<f64> = clean.iter().map(|v| v + normal(sigma)).collect();

        // z | d ~ N(S Jᵀ (d - B b) / σ², S), S = (I + JᵀJ / σ²)⁻¹, J = B A.
        let j = &bm * &am;
        let s2 = sigma * sigma;
        let precision = DMatrix::identity(dim, dim) + j.transpose() * &j / s2;
        let cov = precision.try_inverse().ok_or(Error::Singular)?;
        let shifted = DVector::from_column_slice(&d) - &bm * DVector::from_column_slice(&offset);
        let mean = &cov * j.transpose() * shifted / s2;

        let grid = GridSpec::new(nx, 1, 0.01)?;
        Ok(ConjugateFixture {
            decoder: LinearDecoder::new(nx, 1, a, offset)?,
            misfit: LinearMisfit::new(grid, b, d)?,
            sigma,
            prior: GaussianPrior::standard(dim, schedule),
            truth,
            posterior_mean: mean.iter().copied().collect(),
            posterior_cov: cov.transpose().iter().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.posterior_mean.len()
    }

    pub fn likelihood(&self) -> Result<DecodedLikelihood<LinearDecoder, LinearMisfit>> {
        DecodedLikelihood::new(self.decoder.clone(), self.misfit.clone(), self.sigma)
    }

    /// Minimizer of `‖d - B(Az + b)‖² / ‖d‖² + reg ‖z‖²`.
    pub fn ridge_minimizer(&self, reg: f64) -> Result<Vec<f64>> {
        let dim = self.dim();
        let x0 = self.misfit.predict(&self.decoder.decode(&vec![0.0; dim])?)?;
        let mut cols = Vec::with_capacity(dim);
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            let xk = self.misfit.predict(&self.decoder.decode(&e)?)?;
            cols.push(DVector::from_iterator(xk.len(), xk.iter().zip(&x0).map(|(a, b)| a - b)));
        }
        let j = DMatrix::from_columns(&cols);
        let d = DVector::from_column_slice(self.misfit.observed());
        let scale = d.norm_squared();
        let r = (d - DVector::from_column_slice(&x0)) / scale;
        let lhs = j.transpose() * &j / scale + DMatrix::identity(dim, dim) * reg;
        let z = lhs.lu().solve(&(j.transpose() * r)).ok_or(Error::Singular)?;
        Ok(z.iter().copied().collect())
    }

    pub fn posterior_var(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.posterior_cov[i * n + i]).collect()
    }
}

/// Two-dimensional latent with a mixture prior and a linear likelihood.
#[derive(Debug, Clone)]
pub struct GmmFixture {
    pub decoder: LinearDecoder,
    pub misfit: LinearMisfit,
    pub sigma: f64,
    pub score: GmmScore,
    /// Grid half-width; the grid spans `[-half_width, half_width]²`.
    pub half_width: f64,
    pub points: usize,
}

impl GmmFixture {
    /// Four equal modes at `(±c, ±c)` with isotropic variance `var`, observed
    /// through the single datum `z0 + 0.3·z1 = datum` with noise `sigma`.
    pub fn new(c: f64, var: f64, sigma: f64, datum: f64, schedule: SdeSchedule) -> Result<Self> {
        let prior = GmmPrior::new(
            vec![0.25; 4],
            vec![vec![c, c], vec![-c, -c], vec![c, -c], vec![-c, c]],
            vec![vec![var, var]; 4],
        )?;
        let decoder = LinearDecoder::new(1, 1, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0])?;
        let grid = GridSpec::new(1, 1, 0.01)?;
        let misfit = LinearMisfit::new(grid, vec![1.0, 0.3], vec![datum])?;
        Ok(GmmFixture { decoder, misfit, sigma, score: GmmScore { prior, schedule }, half_width: 5.0, points: 101 })
    }

    /// The default fixture: the datum favours two of the four modes.
    pub fn standard(schedule: SdeSchedule) -> Result<Self> {
        Self::new(1.5, 0.4, 1.0, 1.0, schedule)
    }

    pub fn likelihood(&self) -> Result<DecodedLikelihood<LinearDecoder, LinearMisfit>> {
        DecodedLikelihood::new(self.decoder.clone(), self.misfit.clone(), self.sigma)
    }

    pub fn grid_axis(&self) -> Vec<f64> {
        let h = 2.0 * self.half_width / (self.points - 1) as f64;
        (0..self.points).map(|i| -self.half_width + i as f64 * h).collect()
    }

    /// Normalized posterior mass at each grid node, `[i0 * points + i1]`.
    pub fn grid_posterior(&self) -> Result<Vec<f64>> {
        use crate::likelihood::LogLikelihood;
        let lik = self.likelihood()?;
        let axis = self.grid_axis();
        let mut logp = Vec::with_capacity(axis.len() * axis.len());
        for &a in &axis {
            for &b in &axis {
                let z = [a, b];
                logp.push(self.score.prior.log_density(&z, 0.0) + lik.value(&z)?);
            }
        }
        let top = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logp.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|v| v / total).collect())
    }

    /// Total-variation distance between the grid posterior and the empirical
    /// distribution of `samples`, both pooled into blocks of `block × block`
    /// grid nodes. Samples snap to their nearest node; those off the grid
    /// count as mass in no block.
    pub fn tv_distance(&self, samples: &[Vec<f64>], block: usize) -> Result<f64> {
        let p = self.grid_posterior()?;
        let n = self.points;
        let nb = n.div_ceil(block);
        let mut exact = vec![0.0; nb * nb];
        for i in 0..n {
            for j in 0..n {
                exact[(i / block) * nb + j / block] += p[i * n + j];
            }
        }
        let h = 2.0 * self.half_width / (n - 1) as f64;
        let mut hist = vec![0.0; nb * nb];
        let mut outside = 0.0;
        let w = 1.0 / samples.len() as f64;
        for s in samples {
            let idx = |v: f64| ((v + self.half_width) / h).round();
            let (i, j) = (idx(s[0]), idx(s[1]));
            if (0.0..n as f64).contains(&i) && (0.0..n as f64).contains(&j) {
                hist[(i as usize / block) * nb + j as usize / block] += w;
            } else {
                outside += w;
            }
        }
        Ok(0.5 * (exact.iter().zip(&hist).map(|(a, b)| (a - b).abs()).sum::<f64>() + outside))
    }
}

/// `n` random unit vectors, handy for directional-derivative checks.
pub fn random_directions(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}
