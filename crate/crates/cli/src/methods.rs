use crate::manifest::OutputDir;
use crate::{CliError, CliResult, Context};
use clap::ValueEnum;
use isp_core::baselines::{
    gmr_invert, occam_invert, pixel_decoder, tv_admm_invert, GmrConfig, InversionResult, IterRecord, OccamConfig, TvAdmmConfig,
};
use isp_core::decoder::Decoder;
use isp_core::forward::ForwardModel;
use isp_core::io::save_maps;
use isp_core::likelihood::{DecodedLikelihood, ScatteringMisfit};
use isp_core::measurement::MeasurementSet;
use isp_core::nn::{NeuralDecoder, WeightsContainer};
use isp_core::priors::{GaussianPrior, NeuralScore, ScoreFunction, SdeSchedule};
use isp_core::sampler::{mmse_estimate, run_chains, write_diagnostics, EtaSpec, InitSpec, SampleSpace, SamplerConfig, Weighting};
use isp_core::scene::Scene;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Latent-space posterior sampling through a learned decoder.
    Ldpnp,
    /// Posterior sampling directly on pixel contrasts.
    Pdpnp,
    Occam,
    TvAdmm,
    /// Deterministic latent optimization through a learned decoder.
    Gmr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ldpnp => "ldpnp",
            Method::Pdpnp => "pdpnp",
            Method::Occam => "occam",
            Method::TvAdmm => "tv-admm",
            Method::Gmr => "gmr",
        }
    }
}

fn default_sigma_d() -> f64 {
    20.0
}

fn yes() -> bool {
    true
}

/// Sampler settings plus the likelihood and prior choices around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    #[serde(flatten)]
    pub sampler: SamplerConfig,
    /// Likelihood noise scale; defaults to `nl · std(Re d)` of the measurements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Diffusion schedule of the analytic prior used when no score weights are given.
    #[serde(default = "default_sigma_d")]
    pub sigma_d: f64,
    /// Pixel sampling on `Re chi` only.
    #[serde(default = "yes")]
    pub real_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InversionConfig {
    Sampling(Method, SamplingConfig),
    Occam(OccamConfig),
    TvAdmm(TvAdmmConfig),
    Gmr(GmrConfig),
}

fn config_error(path: Option<&Path>, e: impl std::fmt::Display) -> CliError {
    match path {
        Some(p) => CliError::Config(format!("{}: {e}", p.display())),
        None => CliError::Config(e.to_string()),
    }
}

fn default_sampling(method: Method) -> SamplerConfig {
    match method {
        // Twenty loops, 120 Langevin and 500 reverse steps, eta from 1 to 0.03.
        Method::Ldpnp => SamplerConfig::new(20, 120, 500, EtaSpec::Annealing { start: 1.0, end: 0.03, plateau: 0 }),
        _ => {
            let mut c = SamplerConfig::new(20, 120, 500, EtaSpec::Annealing { start: 0.4, end: 0.1, plateau: 5 });
            c.weighting = Weighting::Adaptive { alpha0: 0.3 };
            c.space = SampleSpace::Pixel;
            c
        }
    }
}

impl InversionConfig {
    /// Parses `path` for `method`; a `"method"` key in the file must agree.
    pub fn load(method: Method, path: Option<&Path>, seed: Option<u64>) -> CliResult<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
                serde_json::from_str::<serde_json::Value>(&text).map_err(|e| config_error(path, e))?
            }
            None => serde_json::json!({}),
        };
        let obj = value.as_object_mut().ok_or_else(|| config_error(path, "config must be a JSON object"))?;
        if let Some(m) = obj.remove("method") {
            if m.as_str() != Some(method.name()) {
                return Err(config_error(path, format!("config is for method {m}, not {}", method.name())));
            }
        }
        let empty = value.as_object().is_some_and(|o| o.is_empty());
        let cfg = match method {
            Method::Ldpnp | Method::Pdpnp => {
                let has_init = value.get("init").is_some();
                let mut cfg: SamplingConfig = if empty {
                    SamplingConfig { sampler: default_sampling(method), sigma: None, sigma_d: 20.0, real_only: true }
                } else {
                    serde_json::from_value(value).map_err(|e| config_error(path, e))?
                };
                if method == Method::Pdpnp {
                    cfg.sampler.space = SampleSpace::Pixel;
                    if !has_init {
                        // Filled in once the pixel count is known.
                        cfg.sampler.init = InitSpec::Gaussian { mean: Vec::new(), std: 0.1 };
                    }
                }
                if let Some(s) = seed {
                    cfg.sampler.seed = s;
                }
                InversionConfig::Sampling(method, cfg)
            }
            Method::Occam => InversionConfig::Occam(if empty {
                OccamConfig::default()
            } else {
                serde_json::from_value(value).map_err(|e| config_error(path, e))?
            }),
            Method::TvAdmm => InversionConfig::TvAdmm(if empty {
                TvAdmmConfig::default()
            } else {
                serde_json::from_value(value).map_err(|e| config_error(path, e))?
            }),
            Method::Gmr => InversionConfig::Gmr(if empty {
                GmrConfig::default()
            } else {
                serde_json::from_value(value).map_err(|e| config_error(path, e))?
            }),
        };
        Ok(cfg)
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InversionConfig::Sampling(_, c) => Some(c.sampler.seed),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v = match self {
            InversionConfig::Sampling(_, c) => serde_json::to_value(c),
            InversionConfig::Occam(c) => serde_json::to_value(c),
            InversionConfig::TvAdmm(c) => serde_json::to_value(c),
            InversionConfig::Gmr(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize")
    }
}

fn load_weights(path: Option<&Path>, what: &str) -> CliResult<Option<WeightsContainer>> {
    path.map(|p| WeightsContainer::load(p).context(|| format!("reading {what} weights {}", p.display()))).transpose()
}

fn history_csv(history: &[IterRecord]) -> String {
    let mut s = String::from("iteration,relative_residual,objective\n");
    for r in history {
        let _ = writeln!(s, "{},{:e},{:e}", r.iteration, r.relative_residual, r.objective);
    }
    s
}

fn vector_csv(rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

fn write_deterministic(out: &OutputDir, r: &InversionResult, latent: bool) -> CliResult<()> {
    out.write_with("estimate.ispm", |p| save_maps(&r.props, p))?;
    out.write_bytes("history.csv", history_csv(&r.history).as_bytes())?;
    if latent {
        out.write_bytes("latent.csv", vector_csv(std::slice::from_ref(&r.params)).as_bytes())?;
    }
    log::info!("final relative residual {:.4e}", r.final_residual);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sample<D: Decoder>(
    cfg: &SamplingConfig,
    decoder: D,
    misfit: ScatteringMisfit,
    sigma: f64,
    score: &dyn ScoreFunction,
    out: &OutputDir,
) -> CliResult<()> {
    let lik = DecodedLikelihood::new(decoder, misfit, sigma).context(|| "building the likelihood".into())?.with_mask(cfg.sampler.mask);
    let chains = run_chains(&lik, score, &cfg.sampler).context(|| "posterior sampling".into())?;
    let post = mmse_estimate(chains, &lik.decoder).context(|| "averaging samples".into())?;
    for (m, maps) in post.decoded.iter().enumerate() {
        out.write_with(&format!("samples/sample_{m}.ispm"), |p| save_maps(maps, p))?;
    }
    out.write_with("mmse.ispm", |p| save_maps(&post.mmse, p))?;
    out.write_with("std.ispm", |p| save_maps(&post.std, p))?;
    out.write_bytes("samples.csv", vector_csv(&post.samples).as_bytes())?;
    let mut diag = Vec::new();
    write_diagnostics(&post.records, &mut diag).context(|| "formatting diagnostics".into())?;
    out.write_bytes("diagnostics.csv", &diag)
}

pub(crate) fn run_inversion(
    config: &InversionConfig,
    scene: &Scene,
    model: ForwardModel,
    meas: &MeasurementSet,
    weights_decoder: Option<&Path>,
    weights_score: Option<&Path>,
    out: &OutputDir,
) -> CliResult<()> {
    let misfit = ScatteringMisfit::new(model, meas).context(|| "building the misfit".into())?;
    match config {
        InversionConfig::Occam(c) => {
            let dec = pixel_decoder(scene, c.real_only).context(|| "pixel parameterization".into())?;
            let r = occam_invert(&misfit, &dec, c, vec![0.0; dec.latent_len()]).context(|| "Occam inversion".into())?;
            write_deterministic(out, &r, false)
        }
        InversionConfig::TvAdmm(c) => {
            let dec = pixel_decoder(scene, c.real_only).context(|| "pixel parameterization".into())?;
            let r = tv_admm_invert(&misfit, &dec, c, vec![0.0; dec.latent_len()]).context(|| "TV-ADMM inversion".into())?;
            write_deterministic(out, &r, false)
        }
        InversionConfig::Gmr(c) => {
            let w = load_weights(weights_decoder, "decoder")?
                .ok_or_else(|| CliError::Config("--method gmr needs --weights-decoder".into()))?;
            let dec = NeuralDecoder::new(&w).context(|| "loading the decoder".into())?;
            let r = gmr_invert(&misfit, &dec, c, vec![0.0; dec.latent_len()]).context(|| "latent optimization".into())?;
            write_deterministic(out, &r, true)
        }
        InversionConfig::Sampling(method, c) => {
            let sigma = match c.sigma.or_else(|| meas.default_sigma()) {
                Some(s) => s,
                None => return Err(CliError::Config("clean measurements need an explicit \"sigma\" in the config".into())),
            };
            let score_w = load_weights(weights_score, "score")?;
            let sd = match &score_w {
                Some(w) => w.metadata.sigma_d.unwrap_or(c.sigma_d),
                None => c.sigma_d,
            };
            let sched = SdeSchedule::new(sd).context(|| "diffusion schedule".into())?;
            let mut c = c.clone();
            let (decoder, dim): (Box<dyn Decoder>, usize) = match method {
                Method::Ldpnp => {
                    let w = load_weights(weights_decoder, "decoder")?
                        .ok_or_else(|| CliError::Config("--method ldpnp needs --weights-decoder".into()))?;
                    let d = NeuralDecoder::new(&w).context(|| "loading the decoder".into())?;
                    let n = d.latent_len();
                    (Box::new(d), n)
                }
                _ => {
                    let d = pixel_decoder(scene, c.real_only).context(|| "pixel parameterization".into())?;
                    let n = d.latent_len();
                    if let InitSpec::Gaussian { mean, .. } = &mut c.sampler.init {
                        if mean.is_empty() {
                            *mean = vec![0.0; n];
                        }
                    }
                    (Box::new(d), n)
                }
            };
            let score: Box<dyn ScoreFunction> = match &score_w {
                Some(w) => Box::new(NeuralScore::new(w, &sched, c.sampler.eps_t).context(|| "loading the score network".into())?),
                None => Box::new(GaussianPrior::standard(dim, sched)),
            };
            if score.dim() != dim {
                return Err(CliError::Config(format!("score network covers {} values, the sampler has {dim}", score.dim())));
            }
            sample(&c, BoxedDecoder(decoder), misfit, sigma, score.as_ref(), out)
        }
    }
}

/// Lets a boxed decoder satisfy the generic likelihood.
struct BoxedDecoder(Box<dyn Decoder>);

impl Decoder for BoxedDecoder {
    fn latent_len(&self) -> usize {
        self.0.latent_len()
    }

    fn output_shape(&self) -> (usize, usize) {
        self.0.output_shape()
    }

    fn decode(&self, z: &[f64]) -> isp_core::Result<isp_core::PropertyMaps> {
        self.0.decode(z)
    }

    fn vjp(&self, z: &[f64], c: &isp_core::PropertyGradient) -> isp_core::Result<Vec<f64>> {
        self.0.vjp(z, c)
    }
}
