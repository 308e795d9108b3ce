//! Alternating likelihood/prior posterior sampling.
//!
//! Each outer loop draws from the data-consistency proximal distribution with
//! Langevin dynamics and then denoises with the reverse diffusion, while the
//! coupling width `η_k` shrinks along an annealing schedule.

mod config;

pub use config::{make_annealing_schedule, EtaSpec, InitSpec, SampleSpace, SamplerConfig, Weighting};

use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::likelihood::LogLikelihood;
use crate::priors::ScoreFunction;
use crate::scene::PropertyMaps;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::io::Write;

/// Per-chain random stream: every chain shares the seed and owns stream `index`.
pub fn chain_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Summary of one likelihood step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub grad_norm: f64,
    pub log_likelihood: f64,
}

/// `N_τ` exponential-integrator Langevin updates around `z_hat`.
pub fn likelihood_step(
    z_hat: &[f64],
    lik: &dyn LogLikelihood,
    cfg: &SamplerConfig,
    eta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, StepStats)> {
    langevin_trace(z_hat, lik, cfg, eta, rng, |_| {})
}

/// [`likelihood_step`] that also hands every iterate to `visit`.
pub fn langevin_trace(
    z_hat: &[f64],
    lik: &dyn LogLikelihood,
    cfg: &SamplerConfig,
    eta: f64,
    rng: &mut ChaCha8Rng,
    mut visit: impl FnMut(&[f64]),
) -> Result<(Vec<f64>, StepStats)> {
    if !(eta > 0.0) {
        return Err(Error::config(format!("noise level must be positive, got {eta}")));
    }
    let r = cfg.contraction();
    let noise = eta * (1.0 - r * r).sqrt();
    let eta2 = eta * eta;
    let mut z = z_hat.to_vec();
    let mut stats = StepStats { grad_norm: 0.0, log_likelihood: 0.0 };
    for _ in 0..cfg.n_langevin {
        let (value, g) = lik.value_and_grad(&z)?;
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(Error::NonFinite("likelihood gradient".into()));
        }
        stats = StepStats { grad_norm: gn, log_likelihood: value };
        let alpha = match cfg.weighting {
            Weighting::Unit => 1.0,
            Weighting::Adaptive { alpha0 } => alpha0 * norm(&z).powi(2) / (eta2 * (gn * gn + 1e-3)),
        };
        let drift = alpha * eta2 * (1.0 - r);
        for ((zi, gi), hi) in z.iter_mut().zip(&g).zip(z_hat) {
            *zi = drift * gi + r * *zi + (1.0 - r) * hi + noise * gaussian(rng);
        }
        visit(&z);
    }
    Ok((z, stats))
}

/// Reverse-time Euler-Maruyama from `t = β⁻¹(η)` down to `eps_t`.
///
/// When `β⁻¹(η)` does not exceed `eps_t` there is nothing to integrate and the
/// input is returned unchanged.
pub fn prior_step(
    z_half: &[f64],
    score: &dyn ScoreFunction,
    cfg: &SamplerConfig,
    eta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let sched = score.schedule();
    let t_start = sched.beta_inv(eta)?;
    let mut z = z_half.to_vec();
    if t_start <= cfg.eps_t {
        return Ok(z);
    }
    let n = cfg.n_reverse;
    let delta = (t_start - cfg.eps_t) / n as f64;
    let sqrt_delta = delta.sqrt();
    for i in (1..=n).rev() {
        let t = cfg.eps_t + i as f64 * delta;
        let g = sched.g(t);
        let f = sched.f(t);
        let s = score.score(&z, t)?;
        for (zi, si) in z.iter_mut().zip(&s) {
            *zi += (g * g * si - f * *zi) * delta + g * sqrt_delta * gaussian(rng);
        }
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prior step".into()));
    }
    Ok(z)
}

/// Diagnostics recorded after each outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopRecord {
    pub chain: usize,
    pub loop_index: usize,
    pub eta: f64,
    pub grad_norm: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub sample: Vec<f64>,
    pub records: Vec<LoopRecord>,
}

fn initial_point(cfg: &SamplerConfig, dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let check = |v: &Vec<f64>| {
        if v.len() != dim {
            return Err(Error::shape(format!("initial point has {} entries, expected {dim}", v.len())));
        }
        Ok(())
    };
    match &cfg.init {
        InitSpec::StandardNormal => Ok((0..dim).map(|_| gaussian(rng)).collect()),
        InitSpec::Gaussian { mean, std } => {
            check(mean)?;
            Ok(mean.iter().map(|m| m + std * gaussian(rng)).collect())
        }
        InitSpec::Fixed { value } => {
            check(value)?;
            Ok(value.clone())
        }
    }
}

/// One posterior sample: `N_k` alternations of likelihood and prior steps.
pub fn sample_posterior(
    lik: &dyn LogLikelihood,
    score: &dyn ScoreFunction,
    cfg: &SamplerConfig,
    chain: usize,
) -> Result<ChainResult> {
    let etas = cfg.validate(score.schedule())?;
    if lik.dim() != score.dim() {
        return Err(Error::shape(format!("likelihood dimension {} differs from prior dimension {}", lik.dim(), score.dim())));
    }
    let mut rng = chain_rng(cfg.seed, chain as u64);
    let mut z = initial_point(cfg, lik.dim(), &mut rng)?;
    let mut records = Vec::with_capacity(etas.len());
    for (k, &eta) in etas.iter().enumerate() {
        let abort = |e: Error| Error::ChainAborted { loop_index: k, source: Box::new(e) };
        let (half, stats) = likelihood_step(&z, lik, cfg, eta, &mut rng).map_err(abort)?;
        z = prior_step(&half, score, cfg, eta, &mut rng).map_err(abort)?;
        records.push(LoopRecord {
            chain,
            loop_index: k,
            eta,
            grad_norm: stats.grad_norm,
            residual_norm: lik.residual_norm(stats.log_likelihood),
        });
    }
    Ok(ChainResult { sample: z, records })
}

/// `cfg.chains` independent chains, in parallel, returned in chain order.
pub fn run_chains(lik: &dyn LogLikelihood, score: &dyn ScoreFunction, cfg: &SamplerConfig) -> Result<Vec<ChainResult>> {
    cfg.validate(score.schedule())?;
    (0..cfg.chains).into_par_iter().map(|m| sample_posterior(lik, score, cfg, m)).collect()
}

/// Decoded posterior summary.
#[derive(Debug, Clone)]
pub struct PosteriorResult {
    pub samples: Vec<Vec<f64>>,
    pub decoded: Vec<PropertyMaps>,
    pub mmse: PropertyMaps,
    /// Elementwise population standard deviation of the decoded samples.
    pub std: PropertyMaps,
    pub records: Vec<LoopRecord>,
}

/// Mean and population standard deviation of decoded samples.
pub fn mmse_estimate(chains: Vec<ChainResult>, decoder: &dyn Decoder) -> Result<PosteriorResult> {
    if chains.is_empty() {
        return Err(Error::config("at least one sample is needed"));
    }
    let decoded = chains.iter().map(|c| decoder.decode(&c.sample)).collect::<Result<Vec<_>>>()?;
    let (nx, ny) = decoder.output_shape();
    let m = decoded.len() as f64;
    let flats: Vec<Vec<f64>> = decoded.iter().map(|p| p.to_flat()).collect();
    let n = flats[0].len();
    let mean: Vec<f64> = (0..n).map(|i| flats.iter().map(|f| f[i]).sum::<f64>() / m).collect();
    let std: Vec<f64> = (0..n)
        .map(|i| (flats.iter().map(|f| (f[i] - mean[i]).powi(2)).sum::<f64>() / m).sqrt())
        .collect();
    let split = |v: &[f64]| PropertyMaps::unconstrained(nx, ny, v[..n / 2].to_vec(), v[n / 2..].to_vec());
    let mut records = Vec::new();
    let mut samples = Vec::with_capacity(chains.len());
    for c in chains {
        records.extend(c.records);
        samples.push(c.sample);
    }
    Ok(PosteriorResult { samples, mmse: split(&mean)?, std: split(&std)?, decoded, records })
}

/// Writes loop records as CSV.
pub fn write_diagnostics(records: &[LoopRecord], w: &mut impl Write) -> Result<()> {
    writeln!(w, "chain,loop,eta,grad_norm,residual_norm")?;
    for r in records {
        writeln!(w, "{},{},{:e},{:e},{:e}", r.chain, r.loop_index, r.eta, r.grad_norm, r.residual_norm)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::IdentityDecoder;
    use crate::likelihood::ZeroLikelihood;
    use crate::priors::{GaussianPrior, SdeSchedule};

    fn sched() -> SdeSchedule {
        SdeSchedule::new(20.0).unwrap()
    }

    fn cfg(n_langevin: usize, n_reverse: usize) -> SamplerConfig {
        SamplerConfig::new(3, n_langevin, n_reverse, EtaSpec::Annealing { start: 1.0, end: 0.1, plateau: 0 })
    }

    #[test]
    fn tiny_eta_leaves_input_nearly_unchanged() {
        let prior = GaussianPrior::standard(4, sched());
        let z = vec![0.5, -1.0, 2.0, 0.3];
        let out = prior_step(&z, &prior, &cfg(1, 500), 1e-4, &mut chain_rng(0, 0)).unwrap();
        let rel = norm(&out.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&z);
        assert!(rel < 1e-3);
    }

    #[test]
    fn eta_above_beta_max_fails() {
        let prior = GaussianPrior::standard(1, sched());
        assert!(prior_step(&[0.0], &prior, &cfg(1, 10), 100.0, &mut chain_rng(0, 0)).is_err());
    }

    #[test]
    fn chains_are_deterministic_and_distinct() {
        let prior = GaussianPrior::standard(3, sched());
        let lik = ZeroLikelihood { dim: 3 };
        let mut c = cfg(5, 20);
        c.chains = 3;
        c.seed = 11;
        let a = run_chains(&lik, &prior, &c).unwrap();
        let b = run_chains(&lik, &prior, &c).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.sample, y.sample);
        }
        assert_ne!(a[0].sample, a[1].sample);
        assert_eq!(a[2].records.len(), 3);
    }

    #[test]
    fn identical_samples_have_zero_std() {
        let chains = vec![ChainResult { sample: vec![1.0, 2.0, 0.1, 0.2], records: vec![] }; 4];
        let r = mmse_estimate(chains, &IdentityDecoder { nx: 2, ny: 1 }).unwrap();
        assert_eq!(r.mmse.eps_r, vec![1.0, 2.0]);
        assert!(r.std.to_flat().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn two_maps_mean_and_std() {
        let chains = vec![
            ChainResult { sample: vec![1.0, 3.0], records: vec![] },
            ChainResult { sample: vec![3.0, 7.0], records: vec![] },
        ];
        let r = mmse_estimate(chains, &IdentityDecoder { nx: 1, ny: 1 }).unwrap();
        assert_eq!((r.mmse.eps_r[0], r.mmse.sigma_e[0]), (2.0, 5.0));
        assert_eq!((r.std.eps_r[0], r.std.sigma_e[0]), (1.0, 2.0));
    }

    #[test]
    fn diagnostics_csv() {
        let rec = LoopRecord { chain: 0, loop_index: 2, eta: 0.5, grad_norm: 1.0, residual_norm: 0.25 };
        let mut out = Vec::new();
        write_diagnostics(&[rec], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("chain,loop,eta,grad_norm,residual_norm"));
    }

    #[test]
    fn unit_weighting_without_gradient_is_ou() {
        // With L = 0 the update is z' = r z + (1 - r) ẑ + η√(1-r²) n; the mean relaxes toward ẑ.
        let lik = ZeroLikelihood { dim: 2000 };
        let mut c = cfg(400, 1);
        c.c_gamma = 0.05;
        let z_hat = vec![3.0; 2000];
        let (z, _) = likelihood_step(&z_hat, &lik, &c, 0.2, &mut chain_rng(1, 0)).unwrap();
        let mean = z.iter().sum::<f64>() / 2000.0;
        assert!((mean - 3.0).abs() < 0.03);
    }
}
