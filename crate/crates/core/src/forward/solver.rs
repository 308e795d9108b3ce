//! Solvers for the state equation `(I - G_D diag(chi)) E = b` and its transpose.

use super::greens::{GreensOperators, DENSE_CELL_LIMIT};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    /// Dense LU up to [`DENSE_CELL_LIMIT`] cells, BiCGStab beyond.
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub mode: SolverMode,
    /// Relative residual target of the iterative solver, also the bound every
    /// accepted solution is checked against.
    pub tol: f64,
    pub max_iter: usize,
    /// Run independent (transmitter, frequency) solves on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { mode: SolverMode::Auto, tol: 1e-6, max_iter: 2000, parallel: true }
    }
}

impl SolverOptions {
    pub fn dense() -> Self {
        SolverOptions { mode: SolverMode::Dense, ..Default::default() }
    }

    pub fn iterative(tol: f64) -> Self {
        SolverOptions { mode: SolverMode::Iterative, tol, ..Default::default() }
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }
}

enum Kind {
    Zero,
    Dense {
        lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
        l: DMatrix<Complex64>,
        u: DMatrix<Complex64>,
    },
    Iterative,
}

/// State-equation solver for a fixed operator set and contrast.
///
/// Dense mode factors once; every right-hand side (forward or transposed)
/// reuses the factors.
pub struct SystemSolver<'a> {
    ops: &'a GreensOperators,
    chi: &'a [Complex64],
    kind: Kind,
    tol: f64,
    max_iter: usize,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl<'a> SystemSolver<'a> {
    pub fn new(ops: &'a GreensOperators, chi: &'a [Complex64], opts: &SolverOptions) -> Result<Self> {
        let n = ops.n_cells();
        if chi.len() != n {
            return Err(Error::shape(format!("contrast has {} cells, grid {}", chi.len(), n)));
        }
        if chi.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("contrast".into()));
        }
        let dense = match opts.mode {
            SolverMode::Auto => n <= DENSE_CELL_LIMIT,
            SolverMode::Dense => true,
            SolverMode::Iterative => false,
        };
        let kind = if chi.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
            Kind::Zero
        } else if dense {
            let gd = ops.dense_gd()?;
            let a = DMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                Complex64::new(id, 0.0) - gd[i * n + j] * chi[j]
            });
            let lu = a.lu();
            if !lu.is_invertible() {
                return Err(Error::Singular);
            }
            let (l, u) = (lu.l(), lu.u());
            Kind::Dense { lu, l, u }
        } else {
            Kind::Iterative
        };
        Ok(SystemSolver { ops, chi, kind, tol: opts.tol, max_iter: opts.max_iter })
    }

    /// `(I - G_D X) x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let cx: Vec<Complex64> = x.iter().zip(self.chi).map(|(a, c)| a * c).collect();
        let g = self.ops.apply_gd(&cx);
        x.iter().zip(g).map(|(a, b)| a - b).collect()
    }

    /// `(I - X G_D) y`, the transpose (`G_D` is symmetric).
    pub fn apply_transposed(&self, y: &[Complex64]) -> Vec<Complex64> {
        let g = self.ops.apply_gd(y);
        y.iter().zip(g).zip(self.chi).map(|((a, b), c)| a - c * b).collect()
    }

    /// Relative residual `‖A x - b‖ / ‖b‖`.
    pub fn residual(&self, x: &[Complex64], b: &[Complex64], transposed: bool) -> f64 {
        let ax = if transposed { self.apply_transposed(x) } else { self.apply(x) };
        let r: Vec<Complex64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
        let nb = norm(b);
        if nb == 0.0 {
            norm(&r)
        } else {
            norm(&r) / nb
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.solve_impl(b, false)
    }

    pub fn solve_transposed(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.solve_impl(b, true)
    }

    fn solve_impl(&self, b: &[Complex64], transposed: bool) -> Result<Vec<Complex64>> {
        if b.len() != self.chi.len() {
            return Err(Error::shape("right-hand side does not match grid"));
        }
        let x = match &self.kind {
            Kind::Zero => return Ok(b.to_vec()),
            Kind::Dense { lu, l, u } => {
                let rhs = DVector::from_column_slice(b);
                let sol = if transposed {
                    // P A = L U, so Aᵀ y = b is Uᵀ Lᵀ (P y) = b.
                    let w = u.tr_solve_upper_triangular(&rhs).ok_or(Error::Singular)?;
                    let mut v = l.tr_solve_lower_triangular(&w).ok_or(Error::Singular)?;
                    lu.p().inv_permute_rows(&mut v);
                    v
                } else {
                    lu.solve(&rhs).ok_or(Error::Singular)?
                };
                sol.as_slice().to_vec()
            }
            Kind::Iterative => self.bicgstab(b, transposed)?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("total field".into()));
        }
        let res = self.residual(&x, b, transposed);
        if res > self.tol {
            return Err(Error::NotConverged { iterations: self.max_iter, residual: res });
        }
        Ok(x)
    }

    fn matvec(&self, x: &[Complex64], transposed: bool) -> Vec<Complex64> {
        if transposed {
            self.apply_transposed(x)
        } else {
            self.apply(x)
        }
    }

    /// Unpreconditioned BiCGStab. The recurrence residual can drift from the
    /// true one, so convergence is confirmed against `b - A x` and the
    /// iteration restarts from the current iterate when they disagree.
    fn bicgstab(&self, b: &[Complex64], transposed: bool) -> Result<Vec<Complex64>> {
        let n = b.len();
        let nb = norm(b);
        let zero = Complex64::new(0.0, 0.0);
        let mut x = vec![zero; n];
        if nb == 0.0 {
            return Ok(x);
        }
        // Aim slightly below the acceptance bound so the true residual check passes.
        let target = 0.5 * self.tol;
        let mut iterations = 0;
        let mut last = f64::INFINITY;
        while iterations < self.max_iter {
            let ax = self.matvec(&x, transposed);
            let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            last = norm(&r) / nb;
            if last <= target {
                return Ok(x);
            }
            let r_hat = r.clone();
            let (mut rho, mut alpha, mut omega) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
            let mut v = vec![zero; n];
            let mut p = vec![zero; n];
            while iterations < self.max_iter {
                iterations += 1;
                let rho_new = dot(&r_hat, &r);
                if rho_new.norm() == 0.0 {
                    break;
                }
                let beta = (rho_new / rho) * (alpha / omega);
                rho = rho_new;
                for i in 0..n {
                    p[i] = r[i] + beta * (p[i] - omega * v[i]);
                }
                v = self.matvec(&p, transposed);
                let denom = dot(&r_hat, &v);
                if denom.norm() == 0.0 {
                    break;
                }
                alpha = rho / denom;
                let s: Vec<Complex64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
                if norm(&s) / nb <= target {
                    for i in 0..n {
                        x[i] += alpha * p[i];
                    }
                    break;
                }
                let t = self.matvec(&s, transposed);
                let tt = dot(&t, &t);
                if tt.norm() == 0.0 {
                    break;
                }
                omega = dot(&t, &s) / tt;
                for i in 0..n {
                    x[i] += alpha * p[i] + omega * s[i];
                    r[i] = s[i] - omega * t[i];
                }
                if norm(&r) / nb <= target || omega.norm() == 0.0 {
                    break;
                }
            }
        }
        let ax = self.matvec(&x, transposed);
        let res = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt() / nb;
        if res <= target {
            return Ok(x);
        }
        Err(Error::NotConverged { iterations, residual: res.min(last) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{BackgroundSpec, GridSpec, Scene};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(n: usize) -> GreensOperators {
        let grid = GridSpec::new(n, n, 0.01).unwrap();
        let scene = Scene::ring(grid, BackgroundSpec::vacuum(), 2, 4, 0.5, vec![2e9]).unwrap();
        GreensOperators::assemble(&scene, 2e9).unwrap()
    }

    fn random(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(scale * rng.random::<f64>(), -0.3 * scale * rng.random::<f64>())).collect()
    }

    #[test]
    fn zero_contrast_returns_rhs_exactly() {
        let o = ops(4);
        let chi = vec![Complex64::new(0.0, 0.0); 16];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = random(16, 1.0, &mut rng);
        for opts in [SolverOptions::dense(), SolverOptions::iterative(1e-6)] {
            let s = SystemSolver::new(&o, &chi, &opts).unwrap();
            assert_eq!(s.solve(&b).unwrap(), b);
        }
    }

    #[test]
    fn single_cell_closed_form() {
        let o = ops(1);
        let chi = [Complex64::new(0.8, -0.2)];
        let b = [Complex64::new(0.3, 0.7)];
        let expected = b[0] / (1.0 - o.kernel.self_term * chi[0]);
        for opts in [SolverOptions::dense(), SolverOptions::iterative(1e-12)] {
            let s = SystemSolver::new(&o, &chi, &opts).unwrap();
            let x = s.solve(&b).unwrap();
            assert!((x[0] - expected).norm() < 1e-12 * expected.norm());
        }
    }

    #[test]
    fn dense_and_iterative_agree_with_transpose() {
        let o = ops(10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let chi = random(100, 1.0, &mut rng);
        let b = random(100, 1.0, &mut rng);
        let dense = SystemSolver::new(&o, &chi, &SolverOptions::dense()).unwrap();
        let iter = SystemSolver::new(&o, &chi, &SolverOptions::iterative(1e-12)).unwrap();
        for transposed in [false, true] {
            let (xd, xi) = if transposed {
                (dense.solve_transposed(&b).unwrap(), iter.solve_transposed(&b).unwrap())
            } else {
                (dense.solve(&b).unwrap(), iter.solve(&b).unwrap())
            };
            let diff: Vec<Complex64> = xd.iter().zip(&xi).map(|(a, c)| a - c).collect();
            assert!(norm(&diff) / norm(&xd) < 1e-10, "transposed = {transposed}");
            assert!(dense.residual(&xd, &b, transposed) < 1e-12);
        }
    }

    #[test]
    fn transposed_solution_satisfies_bilinear_identity() {
        // yᵀ A x = (Aᵀ y)ᵀ x for the operator pair used by the adjoint.
        let o = ops(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chi = random(25, 2.0, &mut rng);
        let s = SystemSolver::new(&o, &chi, &SolverOptions::dense()).unwrap();
        let x = random(25, 1.0, &mut rng);
        let y = random(25, 1.0, &mut rng);
        let lhs: Complex64 = y.iter().zip(s.apply(&x)).map(|(a, b)| a * b).sum();
        let rhs: Complex64 = s.apply_transposed(&y).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let o = ops(12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chi = random(144, 40.0, &mut rng);
        let b = random(144, 1.0, &mut rng);
        let opts = SolverOptions { max_iter: 2, ..SolverOptions::iterative(1e-14) };
        let s = SystemSolver::new(&o, &chi, &opts).unwrap();
        match s.solve(&b) {
            Err(Error::NotConverged { residual, .. }) => assert!(residual > 1e-14),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn dense_mode_rejects_large_grids() {
        let o = ops(25);
        let chi = vec![Complex64::new(0.1, 0.0); 625];
        assert!(matches!(
            SystemSolver::new(&o, &chi, &SolverOptions::dense()),
            Err(Error::DenseTooLarge { .. })
        ));
    }
}
