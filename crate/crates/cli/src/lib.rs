//! The `isp` command-line tool.
//!
//! Four subcommands share one output convention: every run writes its
//! artifacts into `--out` together with `run.json`, which records a manifest
//! of the inputs (content hashes, method, resolved config, seed), the SHA-256
//! of that manifest, and the hash of every artifact written.

pub mod manifest;
mod methods;

pub use methods::{InversionConfig, Method};

use clap::{Args, Parser, Subcommand};
use isp_core::forward::{add_noise, forward_simulate, ForwardModel, SolverOptions};
use isp_core::io::{load_maps, save_maps, write_grid_csv, write_pgm};
use isp_core::measurement::MeasurementSet;
use isp_core::metrics::{ChannelRanges, MetricReport};
use isp_core::phantom::PhantomSpec;
use isp_core::scene::Scene;
use manifest::{OutputDir, RunManifest};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: isp_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core { source, .. } => match source {
                isp_core::Error::Io(_) => EXIT_IO,
                e if e.is_numerical() => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a human-readable context to library errors.
pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for isp_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core { context: what(), source })
    }
}

#[derive(Debug, Parser)]
#[command(name = "isp", version, about = "Two-dimensional electromagnetic inverse scattering")]
pub struct Cli {
    /// Worker threads for chain-level and per-solve parallelism (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize a phantom and synthesize clean and noisy measurements.
    Simulate(SimulateArgs),
    /// Reconstruct property maps from measurements.
    Invert(InvertArgs),
    /// Score an estimate against ground truth.
    Evaluate(EvaluateArgs),
    /// Export property maps as PGM images and CSV grids.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub phantom: PathBuf,
    /// Relative noise level `nl` of the noisy copy.
    #[arg(long, default_value_t = 0.04)]
    pub noise_level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub measurements: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Method configuration (JSON). Defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub weights_decoder: Option<PathBuf>,
    #[arg(long)]
    pub weights_score: Option<PathBuf>,
    /// Overrides the seed in the sampler config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// With `--measurements`, also reports the measurement-domain error.
    #[arg(long, requires = "measurements")]
    pub scene: Option<PathBuf>,
    #[arg(long, requires = "scene")]
    pub measurements: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub maps: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("ISP_LOG_LEVEL", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Invert(a) => invert(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Render(a) => render(&a),
    }
}

fn load_scene(path: &Path) -> CliResult<Scene> {
    Scene::load(path).context(|| format!("reading scene {}", path.display()))
}

fn load_measurements(path: &Path, scene: &Scene) -> CliResult<MeasurementSet> {
    let m = MeasurementSet::load(path).context(|| format!("reading measurements {}", path.display()))?;
    m.check_scene(scene).context(|| format!("measurements {} do not match the scene", path.display()))?;
    Ok(m)
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("simulate");
    manifest.input("scene", &a.scene)?;
    manifest.input("phantom", &a.phantom)?;
    manifest.seed = Some(a.seed);
    manifest.set("noise_level", serde_json::json!(a.noise_level));

    let scene = load_scene(&a.scene)?;
    let phantom = PhantomSpec::load(&a.phantom).context(|| format!("reading phantom {}", a.phantom.display()))?;
    let truth = phantom.rasterize(&scene.grid).context(|| "rasterizing phantom".into())?;
    let clean = forward_simulate(&truth, &scene, &SolverOptions::default()).context(|| "forward simulation".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let noisy = add_noise(&clean, a.noise_level, &mut rng).context(|| "adding noise".into())?;

    let out = OutputDir::create(&a.out, manifest)?;
    out.write_with("truth.ispm", |p| save_maps(&truth, p))?;
    out.write_with("clean.ispd", |p| clean.save(p))?;
    out.write_with("noisy.ispd", |p| noisy.save(p))?;
    out.write_bytes("noisy.csv", &{
        let mut buf = Vec::new();
        noisy.write_csv(&scene, &mut buf).context(|| "formatting measurements".into())?;
        buf
    })?;
    out.finish()
}

fn invert(a: &InvertArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("invert");
    manifest.input("scene", &a.scene)?;
    manifest.input("measurements", &a.measurements)?;
    if let Some(p) = &a.weights_decoder {
        manifest.input("weights_decoder", p)?;
    }
    if let Some(p) = &a.weights_score {
        manifest.input("weights_score", p)?;
    }
    let config = InversionConfig::load(a.method, a.config.as_deref(), a.seed)?;
    manifest.method = Some(a.method.name().to_string());
    manifest.seed = config.seed();
    manifest.set("config", config.to_json());

    let scene = load_scene(&a.scene)?;
    let meas = load_measurements(&a.measurements, &scene)?;
    let model = ForwardModel::new(scene.clone(), SolverOptions::default()).context(|| "assembling forward model".into())?;
    let out = OutputDir::create(&a.out, manifest)?;
    methods::run_inversion(&config, &scene, model, &meas, a.weights_decoder.as_deref(), a.weights_score.as_deref(), &out)?;
    out.finish()
}

fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("evaluate");
    manifest.input("estimate", &a.estimate)?;
    manifest.input("truth", &a.truth)?;
    let est = load_maps(&a.estimate).context(|| format!("reading {}", a.estimate.display()))?;
    let truth = load_maps(&a.truth).context(|| format!("reading {}", a.truth.display()))?;
    if (est.nx, est.ny) != (truth.nx, truth.ny) {
        return Err(CliError::Config(format!(
            "estimate is {}x{} but truth is {}x{}",
            est.nx, est.ny, truth.nx, truth.ny
        )));
    }
    let data = match (&a.scene, &a.measurements) {
        (Some(s), Some(m)) => {
            manifest.input("scene", s)?;
            manifest.input("measurements", m)?;
            let scene = load_scene(s)?;
            let meas = load_measurements(m, &scene)?;
            let model = ForwardModel::new(scene, SolverOptions::default()).context(|| "assembling forward model".into())?;
            let predicted = model.simulate(&est).context(|| "simulating the estimate".into())?;
            Some((predicted, meas.data))
        }
        _ => None,
    };
    let ranges = ChannelRanges::spanning(&truth, &truth);
    let report = MetricReport::compute(&est, &truth, &ranges, data.as_ref().map(|(p, o)| (p.as_slice(), o.as_slice())))
        .context(|| "computing metrics".into())?;
    let out = OutputDir::create(&a.out, manifest)?;
    out.write_bytes("metrics.json", (serde_json::to_string_pretty(&report).expect("report serializes") + "\n").as_bytes())?;
    out.write_bytes("metrics.csv", report.to_csv().as_bytes())?;
    out.finish()
}

fn render(a: &RenderArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("render");
    manifest.input("maps", &a.maps)?;
    let maps = load_maps(&a.maps).context(|| format!("reading {}", a.maps.display()))?;
    let out = OutputDir::create(&a.out, manifest)?;
    for (name, values) in [("eps_r", &maps.eps_r), ("sigma_e", &maps.sigma_e)] {
        let mut pgm = Vec::new();
        write_pgm(values, maps.nx, maps.ny, None, &mut pgm).context(|| "encoding PGM".into())?;
        out.write_bytes(&format!("{name}.pgm"), &pgm)?;
        let mut csv = Vec::new();
        write_grid_csv(values, maps.nx, maps.ny, &mut csv).context(|| "encoding CSV".into())?;
        out.write_bytes(&format!("{name}.csv"), &csv)?;
    }
    out.finish()
}
