
use isp_core::fixtures::cylinder;
use isp_core::forward::{ForwardModel, SolverOptions};
use isp_core::scene::{BackgroundSpec, GridSpec, PropertyMaps, Scene};
use isp_core::SPEED_OF_LIGHT;
use num_complex::Complex64;
use std::f64::consts::PI;

fn disk(grid: &GridSpec, radius: f64, eps: f64) -> PropertyMaps {
    let mut p = PropertyMaps::uniform(grid, 1.0, 0.0);
    for (i, c) in grid.centers().enumerate() {
        if c[0].hypot(c[1]) <= radius {
            p.eps_r[i] = eps;
        }
    }
    p
}

fn rel_rmse(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn dielectric_cylinder_matches_partial_waves() {
    let f = 1e9;
    let grid = GridSpec::new(64, 64, 0.3 / 64.0).unwrap();
    let scene = Scene::ring(grid, BackgroundSpec::vacuum(), 4, 32, 2.0, vec![f]).unwrap();
    let model = ForwardModel::new(scene.clone(), SolverOptions::default()).unwrap();
    let data = model.simulate(&disk(&grid, 0.09, 1.5)).unwrap();
    let k = 2.0 * PI * f / SPEED_OF_LIGHT;
    let reference: Vec<Complex64> = scene
        .tx_positions
        .iter()
        .flat_map(|&tx| scene.rx_positions.iter().map(move |&rx| cylinder::scattered(k, 1.5, 0.09, [0.0, 0.0], tx, rx)))
        .collect();
    let err = rel_rmse(&data, &reference);
    eprintln!("cylinder relative RMSE {err:.4e}");
    assert!(err < 0.02, "relative RMSE {err}");
}

#[test]
fn dense_and_iterative_total_fields_agree() {
    use isp_core::forward::{build_contrast, incident_fields, GreensOperators, SystemSolver};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let grid = GridSpec::new(16, 16, 0.005).unwrap();
    let scene = Scene::ring(grid, BackgroundSpec::vacuum(), 2, 4, 0.5, vec![2e9]).unwrap();
    let ops = GreensOperators::assemble(&scene, 2e9).unwrap();
    let inc = incident_fields(&scene, 2e9).unwrap();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = (0..grid.len()).map(|_| rng.random_range(1.0..4.0)).collect();
        let sig = (0..grid.len()).map(|_| rng.random_range(0.0..0.2)).collect();
        let props = PropertyMaps::new(16, 16, eps, sig).unwrap();
        let chi = build_contrast(&props, &scene.background, 2e9).unwrap();
        let dense = SystemSolver::new(&ops, &chi.chi, &SolverOptions::dense()).unwrap();
        let iter = SystemSolver::new(&ops, &chi.chi, &SolverOptions::iterative(1e-12)).unwrap();
        for e in &inc {
            let a = dense.solve(e).unwrap();
            let b = iter.solve(e).unwrap();
            assert!(rel_rmse(&b, &a) < 1e-8, "seed {seed}");
        }
    }
}
