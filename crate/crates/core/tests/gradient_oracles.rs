use isp_core::decoder::{ContrastDecoder, Decoder, IdentityDecoder, LinearDecoder};
use isp_core::forward::{ForwardModel, SolverOptions};
use isp_core::likelihood::{grad_contrast, DecodedLikelihood, LinearMisfit, LogLikelihood, Misfit, ScatteringMisfit};
use isp_core::measurement::MeasurementSet;
use isp_core::nn::{random_container, NetMetadata, NeuralDecoder};
use isp_core::scene::{BackgroundSpec, GridSpec, PropertyMaps, Scene};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_props(grid: &GridSpec, rng: &mut ChaCha8Rng) -> PropertyMaps {
    let eps = (0..grid.len()).map(|_| rng.random_range(1.0..3.0)).collect();
    let sig = (0..grid.len()).map(|_| rng.random_range(0.0..0.1)).collect();
    PropertyMaps::new(grid.nx, grid.ny, eps, sig).unwrap()
}

fn scene(n: usize, bg: BackgroundSpec) -> Scene {
    let grid = GridSpec::new(n, n, 0.01).unwrap();
    Scene::ring(grid, bg, 3, 6, 0.3, vec![1e9, 1.5e9]).unwrap()
}

fn misfit_for(scene: &Scene, rng: &mut ChaCha8Rng) -> ScatteringMisfit {
    let model = ForwardModel::new(scene.clone(), SolverOptions::default()).unwrap();
    let truth = random_props(&scene.grid, rng);
    let d = model.simulate(&truth).unwrap();
    ScatteringMisfit::new(model, &MeasurementSet::new(d, 0.0, String::new())).unwrap()
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central difference with step `cbrt(eps) · max(1, ‖z‖)`.
fn directional(f: impl Fn(&[f64]) -> f64, z: &[f64], u: &[f64]) -> f64 {
    let h = f64::EPSILON.cbrt() * dot(z, z).sqrt().max(1.0);
    let at = |s: f64| -> Vec<f64> { z.iter().zip(u).map(|(a, b)| a + s * b).collect() };
    (f(&at(h)) - f(&at(-h))) / (2.0 * h)
}

#[test]
fn contrast_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let bg = BackgroundSpec::new(Complex64::new(2.0, -0.5)).unwrap();
    let s = scene(8, bg);
    let misfit = misfit_for(&s, &mut rng);
    let sigma = 0.05;
    let props = random_props(&s.grid, &mut rng);
    let chis = misfit.model().contrasts(&props).unwrap();
    let (_, grads) = grad_contrast(&misfit, &chis, sigma).unwrap();
    let n = s.grid.len();
    // Perturb Re/Im chi of every frequency independently.
    let value = |x: &[f64]| -> f64 {
        let mut c = chis.clone();
        for (g, chi) in c.iter_mut().enumerate() {
            for i in 0..n {
                chi.chi[i] += Complex64::new(x[2 * n * g + i], x[2 * n * g + n + i]);
            }
        }
        let (m, _) = misfit.contrast_gradient(&c).unwrap();
        -m / (2.0 * sigma * sigma)
    };
    let flat: Vec<f64> = grads
        .iter()
        .flat_map(|g| g.iter().map(|c| c.re).chain(g.iter().map(|c| c.im)).collect::<Vec<_>>())
        .collect();
    let zero = vec![0.0; flat.len()];
    for _ in 0..20 {
        let u = unit(&mut rng, flat.len());
        let fd = directional(value, &zero, &u);
        let an = dot(&flat, &u);
        assert!((fd - an).abs() <= 1e-4 * an.abs(), "fd {fd} vs adjoint {an}");
    }
}

#[test]
fn single_cell_gradient_matches_closed_form() {
    let grid = GridSpec::new(1, 1, 0.01).unwrap();
    let s = Scene::new(grid, BackgroundSpec::vacuum(), vec![[0.2, 0.1]], vec![[-0.15, 0.05], [0.0, -0.3]], vec![2e9]).unwrap();
    let model = ForwardModel::new(s.clone(), SolverOptions::default()).unwrap();
    let d = vec![Complex64::new(0.01, -0.02), Complex64::new(-0.005, 0.003)];
    let misfit = ScatteringMisfit::new(model, &MeasurementSet::new(d.clone(), 0.0, String::new())).unwrap();
    let chi0 = Complex64::new(0.7, -0.3);
    let chis = vec![isp_core::forward::ContrastMap { chi: vec![chi0], frequency: 2e9 }];
    let (m, grads) = misfit.contrast_gradient(&chis).unwrap();

    let ops = misfit.model().operators(0);
    let e = misfit.model().incident(0, 0)[0];
    let st = ops.kernel.self_term;
    let gs = [ops.g_s[0], ops.g_s[1]];
    // F_q = g_q chi e / (1 - s chi),  dF_q/dchi = g_q e / (1 - s chi)².
    let denom = 1.0 - st * chi0;
    let mut m_ref = 0.0;
    let mut dm = Complex64::new(0.0, 0.0);
    for q in 0..2 {
        let r = d[q] - gs[q] * chi0 * e / denom;
        let df = gs[q] * e / (denom * denom);
        m_ref += r.norm_sqr();
        // M = Σ|r|², dM/dRe = -2 Re(conj(r) df), dM/dIm = -2 Re(conj(r) j df).
        dm += Complex64::new(-2.0 * (r.conj() * df).re, -2.0 * (r.conj() * df * Complex64::i()).re);
    }
    assert!((m - m_ref).abs() <= 1e-12 * m_ref);
    assert!((grads[0][0] - dm).norm() <= 1e-8 * dm.norm(), "{} vs {}", grads[0][0], dm);
}

#[test]
fn property_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = scene(6, BackgroundSpec::new(Complex64::new(4.0, -1.0)).unwrap());
    let misfit = misfit_for(&s, &mut rng);
    let props = random_props(&s.grid, &mut rng);
    let (_, g) = misfit.misfit_and_grad(&props).unwrap();
    let x = props.to_flat();
    let value = |y: &[f64]| misfit.misfit(&PropertyMaps::from_flat(6, 6, y).unwrap()).unwrap();
    for _ in 0..10 {
        let u = unit(&mut rng, x.len());
        let fd = directional(value, &x, &u);
        let an = dot(&g.to_flat(), &u);
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-12), "fd {fd} vs {an}");
    }
}

fn check_latent<L: LogLikelihood>(l: &L, rng: &mut ChaCha8Rng, z_scale: f64, tol: f64) {
    for _ in 0..20 {
        let z: Vec<f64> = (0..l.dim()).map(|_| z_scale * rng.random_range(-1.0..1.0)).collect();
        let u = unit(rng, l.dim());
        let (_, g) = l.value_and_grad(&z).unwrap();
        let fd = directional(|y| l.value(y).unwrap(), &z, &u);
        let an = dot(&g, &u);
        assert!((fd - an).abs() <= tol * an.abs(), "fd {fd} vs {an}");
    }
}

#[test]
fn latent_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let bg = BackgroundSpec::new(Complex64::new(2.0, -0.4)).unwrap();
    let s = scene(8, bg);
    let sigma = 0.1;

    let dec = ContrastDecoder::new(8, 8, bg, 1e9, false).unwrap();
    let l = DecodedLikelihood::new(dec, misfit_for(&s, &mut rng), sigma).unwrap();
    check_latent(&l, &mut rng, 0.3, 1e-3);

    let n = 2 * s.grid.len();
    let k = 5;
    let a: Vec<f64> = (0..n * k).map(|i| if i % k < 3 { 0.3 * rng.random_range(-1.0..1.0) } else { 0.01 * rng.random_range(-1.0..1.0) }).collect();
    let mut b = vec![1.5; n];
    b[n / 2..].iter_mut().for_each(|v| *v = 0.05);
    let dec = LinearDecoder::new(8, 8, a, b).unwrap();
    let l = DecodedLikelihood::new(dec, misfit_for(&s, &mut rng), sigma).unwrap();
    check_latent(&l, &mut rng, 0.5, 1e-3);

    // A randomly initialised network decoding a 2×2 latent onto the 8×8 grid.
    let meta = NetMetadata::decoder([2, 2], vec![[1.0, 3.0], [0.0, 0.2]]);
    let dec = NeuralDecoder::new(&random_container(meta, 5, 1.0).unwrap()).unwrap();
    let l = DecodedLikelihood::new(dec, misfit_for(&s, &mut rng), sigma).unwrap();
    check_latent(&l, &mut rng, 1.0, 1e-3);
}

#[test]
fn identity_decoder_gradient_is_property_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = scene(4, BackgroundSpec::vacuum());
    let misfit = misfit_for(&s, &mut rng);
    let props = random_props(&s.grid, &mut rng);
    let (_, g) = misfit.misfit_and_grad(&props).unwrap();
    let l = DecodedLikelihood::new(IdentityDecoder { nx: 4, ny: 4 }, misfit, 0.2).unwrap();
    let (_, gl) = l.value_and_grad(&props.to_flat()).unwrap();
    for (a, b) in gl.iter().zip(g.to_flat()) {
        assert!((a + b / (2.0 * 0.04)).abs() <= 1e-12 * b.abs().max(1e-300));
    }
}

#[test]
fn linear_decoder_gradient_is_transpose_product() {
    let grid = GridSpec::new(2, 1, 0.01).unwrap();
    let bmat = vec![1.0, 0.0, 2.0, -1.0, 0.5, 1.0, 0.0, 3.0];
    let misfit = LinearMisfit::new(grid, bmat, vec![1.0, -2.0]).unwrap();
    let props = PropertyMaps::from_flat(2, 1, &[0.3, 0.1, 0.2, 0.4]).unwrap();
    let (_, pixel) = misfit.misfit_and_grad(&props).unwrap();
    let a = vec![1.0, 2.0, 0.0, 1.0, -1.0, 0.5, 2.0, 0.0];
    let dec = LinearDecoder::new(2, 1, a.clone(), vec![0.0; 4]).unwrap();
    let z = [0.1, 0.2];
    let g = dec.vjp(&z, &pixel).unwrap();
    let pf = pixel.to_flat();
    for j in 0..2 {
        let expected: f64 = (0..4).map(|i| a[i * 2 + j] * pf[i]).sum();
        assert!((g[j] - expected).abs() < 1e-14);
    }
}
