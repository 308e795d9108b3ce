//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

use isp_core::baselines::{gmr_invert, occam_invert, pixel_decoder, tv_admm_invert, GmrConfig, OccamConfig, TvAdmmConfig};
use isp_core::decoder::{ContrastDecoder, Decoder};
use isp_core::fixtures::{cylinder, ConjugateFixture, GmmFixture};
use isp_core::forward::{add_noise, build_contrast, forward_simulate, incident_fields, ForwardModel, GreensOperators, SolverOptions, SystemSolver};
use isp_core::likelihood::{grad_contrast, DecodedLikelihood, LogLikelihood, ScatteringMisfit, ZeroLikelihood};
use isp_core::metrics::relative_rmse_real;
use isp_core::nn::{random_container, NetMetadata, NeuralDecoder};
use isp_core::phantom::PhantomSpec;
use isp_core::priors::{GaussianPrior, SdeSchedule};
use isp_core::sampler::{chain_rng, langevin_trace, mmse_estimate, prior_step, run_chains, EtaSpec, SamplerConfig, Weighting};
use isp_core::scene::{BackgroundSpec, GridSpec, PropertyMaps, Scene};
use isp_core::{MeasurementSet, SPEED_OF_LIGHT};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn rel_rmse(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sched() -> SdeSchedule {
    SdeSchedule::new(20.0).unwrap()
}

/// 64×64 cells over 0.3 m at 1 GHz is about 21 cells per wavelength inside the cylinder.
fn cylinder_scene() -> Scene {
    let grid = GridSpec::new(64, 64, 0.3 / 64.0).unwrap();
    Scene::ring(grid, BackgroundSpec::vacuum(), 4, 32, 2.0, vec![1e9]).unwrap()
}

fn cylinder_truth(grid: &GridSpec) -> PropertyMaps {
    PhantomSpec::cylinder([0.0, 0.0], 0.09, 1.5, 0.0).rasterize(grid).unwrap()
}

fn forward_cylinder() -> Outcome {
    let scene = cylinder_scene();
    let f = scene.frequencies[0];
    let start = Instant::now();
    let data = forward_simulate(&cylinder_truth(&scene.grid), &scene, &SolverOptions::default().sequential()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let k = 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
    let reference: Vec<Complex64> = scene
        .tx_positions
        .iter()
        .flat_map(|&tx| scene.rx_positions.iter().map(move |&rx| cylinder::scattered(k, 1.5, 0.09, [0.0, 0.0], tx, rx)))
        .collect();
    let err = rel_rmse(&data.data, &reference);
    check(err < 0.02 && elapsed < 30.0, format!("relative RMSE {err:.3e} (< 2e-2), {elapsed:.2} s single-threaded (< 30 s)"))
}

fn zero_contrast() -> Outcome {
    let scene = cylinder_scene();
    let opts = SolverOptions::default();
    let signal = forward_simulate(&cylinder_truth(&scene.grid), &scene, &opts).unwrap().data.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let empty = forward_simulate(&PropertyMaps::uniform(&scene.grid, 1.0, 0.0), &scene, &opts).unwrap();
    let max_vacuum = empty.data.iter().map(|c| c.norm()).fold(0.0, f64::max);

    // The same with a lossy matching medium, where the contrast is zero only up to rounding.
    let bg = BackgroundSpec::new(Complex64::new(44.0, -17.9)).unwrap();
    let lossy = Scene { background: bg, ..cylinder_scene() };
    let (eps, sig) = bg.equivalent_properties(1e9);
    let matched = forward_simulate(&PropertyMaps::uniform(&lossy.grid, eps, sig), &lossy, &opts).unwrap();
    let max_lossy = matched.data.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let worst = max_vacuum.max(max_lossy) / signal;
    check(worst < 1e-12, format!("max |d| / signal scale: vacuum {:.1e}, lossy background {:.1e} (< 1e-12)", max_vacuum / signal, max_lossy / signal))
}

fn cross_solver() -> Outcome {
    let grid = GridSpec::new(16, 16, 0.005).unwrap();
    let f = 2e9;
    let scene = Scene::ring(grid, BackgroundSpec::vacuum(), 4, 8, 0.5, vec![f]).unwrap();
    let ops = GreensOperators::assemble(&scene, f).unwrap();
    let inc = incident_fields(&scene, f).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = (0..grid.len()).map(|_| rng.random_range(1.0..4.0)).collect();
        let sig = (0..grid.len()).map(|_| rng.random_range(0.0..0.2)).collect();
        let props = PropertyMaps::new(16, 16, eps, sig).unwrap();
        let chi = build_contrast(&props, &scene.background, f).unwrap();
        let dense = SystemSolver::new(&ops, &chi.chi, &SolverOptions::dense()).unwrap();
        let iter = SystemSolver::new(&ops, &chi.chi, &SolverOptions::iterative(1e-12)).unwrap();
        for e in &inc {
            worst = worst.max(rel_rmse(&iter.solve(e).unwrap(), &dense.solve(e).unwrap()));
        }
    }
    check(worst <= 1e-8, format!("worst relative difference {worst:.2e} over 20 seeds (<= 1e-8)"))
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn central_difference(f: impl Fn(&[f64]) -> f64, z: &[f64], u: &[f64]) -> f64 {
    let h = f64::EPSILON.cbrt() * dot(z, z).sqrt().max(1.0);
    let at = |s: f64| -> Vec<f64> { z.iter().zip(u).map(|(a, b)| a + s * b).collect() };
    (f(&at(h)) - f(&at(-h))) / (2.0 * h)
}

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let bg = BackgroundSpec::new(Complex64::new(2.0, -0.4)).unwrap();
    let grid = GridSpec::new(8, 8, 0.01).unwrap();
    let scene = Scene::ring(grid, bg, 3, 6, 0.3, vec![1e9, 1.5e9]).unwrap();
    let random_props = |rng: &mut ChaCha8Rng| {
        let eps = (0..grid.len()).map(|_| rng.random_range(1.0..3.0)).collect();
        let sig = (0..grid.len()).map(|_| rng.random_range(0.0..0.1)).collect();
        PropertyMaps::new(8, 8, eps, sig).unwrap()
    };
    let misfit = |rng: &mut ChaCha8Rng| {
        let model = ForwardModel::new(scene.clone(), SolverOptions::default()).unwrap();
        let d = model.simulate(&random_props(rng)).unwrap();
        ScatteringMisfit::new(model, &MeasurementSet::new(d, 0.0, String::new())).unwrap()
    };
    let sigma = 0.1;

    // Contrast gradient: perturb Re and Im of chi at every frequency.
    let m = misfit(&mut rng);
    let chis = m.model().contrasts(&random_props(&mut rng)).unwrap();
    let (_, grads) = grad_contrast(&m, &chis, sigma).unwrap();
    let n = grid.len();
    let value = |x: &[f64]| -> f64 {
        let mut c = chis.clone();
        for (g, chi) in c.iter_mut().enumerate() {
            for i in 0..n {
                chi.chi[i] += Complex64::new(x[2 * n * g + i], x[2 * n * g + n + i]);
            }
        }
        -m.contrast_gradient(&c).unwrap().0 / (2.0 * sigma * sigma)
    };
    let flat: Vec<f64> = grads.iter().flat_map(|g| g.iter().map(|c| c.re).chain(g.iter().map(|c| c.im)).collect::<Vec<_>>()).collect();
    let zero = vec![0.0; flat.len()];
    let mut worst_contrast: f64 = 0.0;
    for _ in 0..20 {
        let u = unit(&mut rng, flat.len());
        let an = dot(&flat, &u);
        worst_contrast = worst_contrast.max((central_difference(value, &zero, &u) - an).abs() / an.abs());
    }

    // Latent gradients through a pixel decoder and a network decoder.
    let mut worst_latent: f64 = 0.0;
    let mut latent = |l: &dyn LogLikelihood, scale: f64, rng: &mut ChaCha8Rng| {
        for _ in 0..20 {
            let z: Vec<f64> = (0..l.dim()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let u = unit(rng, l.dim());
            let (_, g) = l.value_and_grad(&z).unwrap();
            let an = dot(&g, &u);
            let fd = central_difference(|y| l.value(y).unwrap(), &z, &u);
            worst_latent = worst_latent.max((fd - an).abs() / an.abs());
        }
    };
    let dec = ContrastDecoder::new(8, 8, bg, 1e9, false).unwrap();
    latent(&DecodedLikelihood::new(dec, misfit(&mut rng), sigma).unwrap(), 0.3, &mut rng);
    let meta = NetMetadata::decoder([2, 2], vec![[1.0, 3.0], [0.0, 0.2]]);
    let dec = NeuralDecoder::new(&random_container(meta, 5, 1.0).unwrap()).unwrap();
    latent(&DecodedLikelihood::new(dec, misfit(&mut rng), sigma).unwrap(), 1.0, &mut rng);

    check(
        worst_contrast <= 1e-4 && worst_latent <= 1e-3,
        format!("worst relative error: contrast {worst_contrast:.2e} (<= 1e-4), latent {worst_latent:.2e} (<= 1e-3)"),
    )
}

fn stationarity() -> Outcome {
    let eta = 0.5;
    let dim = 4;
    let mut cfg = SamplerConfig::new(1, 50_000, 1, EtaSpec::Values(vec![eta]));
    // A strong contraction keeps successive iterates nearly independent.
    cfg.c_gamma = 1.0;
    let mut sums = vec![(0.0, 0.0); dim];
    langevin_trace(&vec![0.0; dim], &ZeroLikelihood { dim }, &cfg, eta, &mut chain_rng(4, 0), |z| {
        for (s, v) in sums.iter_mut().zip(z) {
            s.0 += v;
            s.1 += v * v;
        }
    })
    .unwrap();
    let n = cfg.n_langevin as f64;
    let ratios: Vec<f64> = sums.iter().map(|(s, t)| (t / n - (s / n).powi(2)) / (eta * eta)).collect();
    let ok = ratios.iter().all(|r| (0.9..=1.1).contains(r));
    check(ok, format!("variance / eta² per coordinate {ratios:.3?} (in [0.9, 1.1])"))
}

fn prior_oracle() -> Outcome {
    let mean = vec![0.5, -1.0, 0.0];
    let var = vec![1.0, 0.3, 2.0];
    let prior = GaussianPrior::new(mean.clone(), var.clone(), sched()).unwrap();
    let y = vec![1.5, 0.2, -0.8];
    let runs = 2000;
    let mut worst: f64 = 0.0;
    for eta in [0.1, 0.5] {
        let cfg = SamplerConfig::new(1, 1, 500, EtaSpec::Values(vec![eta]));
        assert_eq!(cfg.eps_t, 1e-3);
        let mut rng = chain_rng(9, 0);
        let draws: Vec<Vec<f64>> = (0..runs).map(|_| prior_step(&y, &prior, &cfg, eta, &mut rng).unwrap()).collect();
        for i in 0..3 {
            let exact = (var[i] * y[i] + eta * eta * mean[i]) / (var[i] + eta * eta);
            let m = draws.iter().map(|d| d[i]).sum::<f64>() / runs as f64;
            let sd = (draws.iter().map(|d| (d[i] - m).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt();
            worst = worst.max((m - exact).abs() / (sd / (runs as f64).sqrt()));
        }
    }
    check(worst < 3.0, format!("worst deviation {worst:.2} standard errors (< 3)"))
}

fn conjugate_config(chains: usize, seed: u64) -> SamplerConfig {
    let mut cfg = SamplerConfig::new(40, 200, 100, EtaSpec::Annealing { start: 1.0, end: 0.04, plateau: 0 });
    cfg.chains = chains;
    cfg.seed = seed;
    cfg.weighting = Weighting::Unit;
    cfg
}

fn conjugate() -> Outcome {
    let f = ConjugateFixture::new(4, 8, 0.5, sched(), 7).unwrap();
    let chains = run_chains(&f.likelihood().unwrap(), &f.prior, &conjugate_config(2000, 1)).unwrap();
    let m = chains.len() as f64;
    let mean: Vec<f64> = (0..f.dim()).map(|i| chains.iter().map(|c| c.sample[i]).sum::<f64>() / m).collect();
    let err = relative_rmse_real(&mean, &f.posterior_mean).unwrap();
    let var_err = f
        .posterior_var()
        .iter()
        .enumerate()
        .map(|(i, pv)| (chains.iter().map(|c| (c.sample[i] - mean[i]).powi(2)).sum::<f64>() / (m - 1.0) / pv - 1.0).abs())
        .fold(0.0, f64::max);
    check(err <= 0.05 && var_err <= 0.15, format!("mean relative error {err:.3} (<= 0.05), worst variance error {var_err:.3} (<= 0.15)"))
}

fn multimodal() -> Outcome {
    let f = GmmFixture::standard(sched()).unwrap();
    let mut cfg = SamplerConfig::new(30, 200, 100, EtaSpec::Annealing { start: 1.0, end: 0.04, plateau: 0 });
    cfg.chains = 5000;
    cfg.weighting = Weighting::Unit;
    let chains = run_chains(&f.likelihood().unwrap(), &f.score, &cfg).unwrap();
    let samples: Vec<Vec<f64>> = chains.into_iter().map(|c| c.sample).collect();
    let block = 6;
    let tv = f.tv_distance(&samples, block).unwrap();
    check(tv < 0.15, format!("TV distance {tv:.3} on 6×6 blocks of the 101×101 grid (< 0.15)"))
}

fn mmse() -> Outcome {
    let f = ConjugateFixture::new(4, 8, 0.5, sched(), 7).unwrap();
    let lik = f.likelihood().unwrap();
    let truth = f.decoder.decode(&f.truth).unwrap().to_flat();
    let mut violations = Vec::new();
    let mut margin = f64::INFINITY;
    for trial in 0..20 {
        let chains = run_chains(&lik, &f.prior, &conjugate_config(5, 100 + trial)).unwrap();
        let post = mmse_estimate(chains, &f.decoder).unwrap();
        let avg = relative_rmse_real(&post.mmse.to_flat(), &truth).unwrap();
        let single =
            post.decoded.iter().map(|d| relative_rmse_real(&d.to_flat(), &truth).unwrap()).sum::<f64>() / post.decoded.len() as f64;
        margin = margin.min(single - avg);
        if avg > single {
            violations.push(trial);
        }
    }
    check(violations.is_empty(), format!("{} of 20 trials violated, smallest margin {margin:.2e}", violations.len()))
}

fn baselines() -> Outcome {
    let nl = 0.04;
    let scene = cylinder_scene();
    let clean = forward_simulate(&cylinder_truth(&scene.grid), &scene, &SolverOptions::default()).unwrap();
    let noisy = add_noise(&clean, nl, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let misfit = ScatteringMisfit::new(ForwardModel::new(scene.clone(), SolverOptions::default()).unwrap(), &noisy).unwrap();
    let dec = pixel_decoder(&scene, false).unwrap();
    let init = vec![0.0; dec.latent_len()];
    let occam = occam_invert(&misfit, &dec, &OccamConfig::default(), init.clone()).unwrap().final_residual;
    let tv = tv_admm_invert(&misfit, &dec, &TvAdmmConfig::default(), init).unwrap().final_residual;

    let f = ConjugateFixture::new(4, 8, 0.5, sched(), 7).unwrap();
    let cfg = GmrConfig { steps: 3000, lr: 0.05, reg: 0.005, cosine: true };
    let gmr = gmr_invert(&f.misfit, &f.decoder, &cfg, vec![0.0; 4]).unwrap();
    let ridge = relative_rmse_real(&gmr.params, &f.ridge_minimizer(cfg.reg).unwrap()).unwrap();
    check(
        occam <= 2.0 * nl && tv <= 2.0 * nl && ridge < 0.01,
        format!("residual Occam {occam:.4}, TV-ADMM {tv:.4} (<= {:.2}); GMR vs ridge minimizer {ridge:.2e} (< 1e-2)", 2.0 * nl),
    )
}

fn schedule() -> Outcome {
    let s = sched();
    let beta1 = s.beta(1.0);
    let mut roundtrip: f64 = 0.0;
    for i in 1..=1000 {
        let t = i as f64 / 1000.0;
        roundtrip = roundtrip.max((s.beta_inv(s.beta(t)).unwrap() - t).abs());
    }
    let mut cfg = SamplerConfig::new(1, 1, 1, EtaSpec::Values(vec![0.3]));
    cfg.c_gamma = 0.015;
    let eta: f64 = 0.3;
    let gamma = 0.015 * eta * eta;
    let r_err = (cfg.contraction() - (-0.015f64).exp()).abs().max(((-gamma / (eta * eta)).exp() - cfg.contraction()).abs());
    check(
        (beta1 - 8.160).abs() <= 1e-3 && roundtrip <= 1e-10 && r_err <= 1e-15,
        format!("beta(1) = {beta1:.5}, beta_inv(beta(t)) error {roundtrip:.1e}, r error {r_err:.1e}"),
    )
}

fn isp(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_isp")).args(args).env("ISP_LOG_LEVEL", "error").output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("isp {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

/// Every file under `dir`, relative path to contents.
fn snapshot(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut files = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn pipeline(inputs: &Path, run: &Path, threads: &str) -> Result<(), String> {
    let p = |name: &str| inputs.join(name).display().to_string();
    let o = |name: &str| run.join(name).display().to_string();
    let t = ["--threads", threads];
    isp(&[&["simulate", "--scene", &p("scene.json"), "--phantom", &p("phantom.json"), "--seed", "5", "--out", &o("sim")], &t[..]].concat())?;
    let noisy = o("sim/noisy.ispd");
    let common = ["invert", "--scene", &p("scene.json"), "--measurements", &noisy];
    let ldpnp = [
        "--method", "ldpnp", "--config", &p("sampler.json"), "--weights-decoder", &p("decoder.ldwt"), "--weights-score",
        &p("score.ldwt"), "--seed", "3", "--out", &o("ldpnp"),
    ];
    isp(&[&common[..], &ldpnp[..], &t[..]].concat())?;
    isp(&[&common[..], &["--method", "pdpnp", "--config", &p("sampler.json"), "--out", &o("pdpnp")], &t[..]].concat())?;
    isp(&[&common[..], &["--method", "occam", "--config", &p("occam.json"), "--out", &o("occam")], &t[..]].concat())?;
    isp(&[&common[..], &["--method", "tv-admm", "--config", &p("tv.json"), "--out", &o("tv")], &t[..]].concat())?;
    isp(&[&common[..], &["--method", "gmr", "--config", &p("gmr.json"), "--weights-decoder", &p("decoder.ldwt"), "--out", &o("gmr")], &t[..]].concat())?;
    let truth = o("sim/truth.ispm");
    for m in ["ldpnp/mmse.ispm", "occam/estimate.ispm"] {
        let name = m.split('/').next().unwrap();
        isp(&[
            &["evaluate", "--estimate", &o(m), "--truth", &truth, "--scene", &p("scene.json"), "--measurements", &noisy],
            &["--out", &o(&format!("eval_{name}"))][..],
            &t[..],
        ]
        .concat())?;
    }
    isp(&[&["render", "--maps", &o("ldpnp/mmse.ispm"), "--out", &o("render")], &t[..]].concat())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("inputs");
    std::fs::create_dir_all(&inputs).unwrap();
    // An 8×8 latent decodes onto the 32×32 grid.
    let grid = GridSpec::new(32, 32, 0.005).unwrap();
    Scene::ring(grid, BackgroundSpec::vacuum(), 2, 8, 0.5, vec![1e9]).unwrap().save(inputs.join("scene.json")).unwrap();
    std::fs::write(inputs.join("phantom.json"), PhantomSpec::cylinder([0.01, -0.01], 0.04, 2.0, 0.05).to_json()).unwrap();
    let ranges = vec![[1.0, 3.0], [0.0, 0.1]];
    random_container(NetMetadata::decoder([8, 8], ranges), 1, 1.0).unwrap().save(inputs.join("decoder.ldwt")).unwrap();
    random_container(NetMetadata::score([8, 8], 20.0, Vec::new()), 2, 1.0).unwrap().save(inputs.join("score.ldwt")).unwrap();
    let configs = [
        ("sampler.json", r#"{"n_outer": 3, "n_langevin": 4, "n_reverse": 8, "chains": 3, "eta": {"start": 0.5, "end": 0.1, "plateau": 0}}"#),
        ("occam.json", r#"{"iterations": 10, "lr": 0.01, "coefficient": 20, "multiplicative": true}"#),
        ("tv.json", r#"{"coefficient": 5, "outer": 3, "inner": 4, "lr": 0.01, "rho": 1}"#),
        ("gmr.json", r#"{"steps": 10, "lr": 0.05, "reg": 0.005}"#),
    ];
    for (name, text) in configs {
        std::fs::write(inputs.join(name), text).unwrap();
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    // The second run uses a different worker count on purpose.
    pipeline(&inputs, &a, "1").map_err(|e| format!("first run: {e}"))?;
    pipeline(&inputs, &b, "4").map_err(|e| format!("second run: {e}"))?;
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    let differing: Vec<&String> = sa.keys().filter(|k| sa.get(*k) != sb.get(*k)).collect();
    check(
        sa.len() == sb.len() && differing.is_empty() && sa.len() > 20,
        format!("{} files compared across runs with 1 and 4 threads, differing: {differing:?}", sa.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("forward solver matches the dielectric cylinder series", forward_cylinder),
        ("zero contrast gives zero scattered data", zero_contrast),
        ("dense and iterative solvers agree", cross_solver),
        ("contrast and latent gradients match finite differences", gradients),
        ("likelihood step is stationary at eta² without data", stationarity),
        ("prior step reproduces the Gaussian denoiser", prior_oracle),
        ("sampler recovers the conjugate Gaussian posterior", conjugate),
        ("sampler matches a bimodal grid posterior", multimodal),
        ("sample average beats single samples", mmse),
        ("baselines fit to twice the noise level", baselines),
        ("diffusion schedule arithmetic", schedule),
        ("CLI pipeline is byte-identical across runs", determinism),
    ];
    // Panics are reported as failures, not printed twice.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {name}: {d} [{secs:.1} s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
