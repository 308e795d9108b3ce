use crate::error::{Error, Result};
use crate::forward::{contrast_jacobian, ContrastMap, ForwardModel, SystemSolver};
use crate::measurement::MeasurementSet;
use crate::scene::{GridSpec, PropertyGradient, PropertyMaps};
use num_complex::Complex64;

/// Squared data misfit `‖d_obs - F(props)‖²` with its gradient.
pub trait Misfit: Sync {
    fn grid(&self) -> GridSpec;

    /// `‖d_obs‖²`, used to normalize the misfit.
    fn data_norm_sq(&self) -> f64;

    fn misfit(&self, props: &PropertyMaps) -> Result<f64>;

    /// Misfit and its gradient with respect to `eps_r` and `sigma_e`.
    fn misfit_and_grad(&self, props: &PropertyMaps) -> Result<(f64, PropertyGradient)>;
}

/// Misfit of the full nonlinear scattering model, differentiated by the adjoint-state method.
#[derive(Debug)]
pub struct ScatteringMisfit {
    model: ForwardModel,
    d_obs: Vec<Complex64>,
    data_norm_sq: f64,
}

impl ScatteringMisfit {
    pub fn new(model: ForwardModel, d_obs: &MeasurementSet) -> Result<Self> {
        d_obs.check_scene(model.scene())?;
        let data_norm_sq = d_obs.data.iter().map(|c| c.norm_sqr()).sum();
        Ok(ScatteringMisfit { model, d_obs: d_obs.data.clone(), data_norm_sq })
    }

    pub fn model(&self) -> &ForwardModel {
        &self.model
    }

    pub fn observed(&self) -> &[Complex64] {
        &self.d_obs
    }

    /// `d_obs - F(props)`.
    pub fn residual(&self, props: &PropertyMaps) -> Result<Vec<Complex64>> {
        let pred = self.model.simulate(props)?;
        Ok(self.d_obs.iter().zip(pred).map(|(d, p)| d - p).collect())
    }

    /// Misfit and `∂M/∂Re chi + j ∂M/∂Im chi` per frequency.
    ///
    /// With residual `r` the data perturb as `dF = G_S (I - X G_D)⁻¹ diag(E) dchi`.
    /// Back-propagating `u = G_Sᵀ conj(r)` needs one solve with the transposed
    /// system `(I - X G_D) y = X u`, after which `w = u + G_D y` and the
    /// sensitivity is `q = Σ_p w ⊙ E_p`. Then `dM = -2 Re(q · dchi)`, so the
    /// complex gradient is `-2 conj(q)`.
    pub fn contrast_gradient(&self, chis: &[ContrastMap]) -> Result<(f64, Vec<Vec<Complex64>>)> {
        let scene = self.model.scene();
        if chis.len() != scene.n_freq() {
            return Err(Error::shape("one contrast map per frequency expected"));
        }
        let (n_tx, n_rx) = (scene.n_tx(), scene.n_rx());
        let mut misfit = 0.0;
        let mut grads = Vec::with_capacity(chis.len());
        for (g, chi) in chis.iter().enumerate() {
            let ops = self.model.operators(g);
            let solver = SystemSolver::new(ops, &chi.chi, self.model.options())
                .map_err(|e| Error::Solve { tx: 0, freq: g, source: Box::new(e) })?;
            let per_tx = self.model.per_tx(g, |p| {
                let e = solver.solve(self.model.incident(g, p))?;
                let current: Vec<Complex64> = chi.chi.iter().zip(&e).map(|(c, v)| c * v).collect();
                let pred = ops.apply_gs(&current);
                let offset = scene.data_index(g, p, 0);
                let res: Vec<Complex64> = self.d_obs[offset..offset + n_rx]
                    .iter()
                    .zip(&pred)
                    .map(|(d, f)| d - f)
                    .collect();
                let m: f64 = res.iter().map(|r| r.norm_sqr()).sum();
                let conj_res: Vec<Complex64> = res.iter().map(|r| r.conj()).collect();
                let u = ops.apply_gs_transpose(&conj_res);
                let xu: Vec<Complex64> = u.iter().zip(&chi.chi).map(|(a, c)| a * c).collect();
                let y = solver.solve_transposed(&xu)?;
                let gy = ops.apply_gd(&y);
                let q: Vec<Complex64> = u.iter().zip(&gy).zip(&e).map(|((a, b), ev)| (a + b) * ev).collect();
                Ok((m, q))
            })?;
            debug_assert_eq!(per_tx.len(), n_tx);
            let mut grad = vec![Complex64::new(0.0, 0.0); chi.len()];
            for (m, q) in per_tx {
                misfit += m;
                for (gi, qi) in grad.iter_mut().zip(q) {
                    *gi += -2.0 * qi.conj();
                }
            }
            grads.push(grad);
        }
        Ok((misfit, grads))
    }
}

impl Misfit for ScatteringMisfit {
    fn grid(&self) -> GridSpec {
        self.model.scene().grid
    }

    fn data_norm_sq(&self) -> f64 {
        self.data_norm_sq
    }

    fn misfit(&self, props: &PropertyMaps) -> Result<f64> {
        Ok(self.residual(props)?.iter().map(|r| r.norm_sqr()).sum())
    }

    fn misfit_and_grad(&self, props: &PropertyMaps) -> Result<(f64, PropertyGradient)> {
        let chis = self.model.contrasts(props)?;
        let (m, grads) = self.contrast_gradient(&chis)?;
        let scene = self.model.scene();
        let mut out = PropertyGradient::zeros(props.len());
        for (g, grad) in grads.iter().enumerate() {
            let (de, ds) = contrast_jacobian(&scene.background, scene.frequencies[g])?;
            // dM = Re(conj(G) dchi) for the complex gradient G.
            for (i, gc) in grad.iter().enumerate() {
                out.d_eps_r[i] += (gc.conj() * de).re;
                out.d_sigma_e[i] += (gc.conj() * ds).re;
            }
        }
        Ok((m, out))
    }
}

/// Misfit of a real linear forward map `d = B [eps_r..., sigma_e...]`.
#[derive(Debug, Clone)]
pub struct LinearMisfit {
    grid: GridSpec,
    /// Row-major `m × (2·nx·ny)`.
    matrix: Vec<f64>,
    d_obs: Vec<f64>,
}

impl LinearMisfit {
    pub fn new(grid: GridSpec, matrix: Vec<f64>, d_obs: Vec<f64>) -> Result<Self> {
        if matrix.len() != d_obs.len() * 2 * grid.len() || d_obs.is_empty() {
            return Err(Error::shape(format!(
                "forward matrix has {} entries, expected {} × {}",
                matrix.len(),
                d_obs.len(),
                2 * grid.len()
            )));
        }
        Ok(LinearMisfit { grid, matrix, d_obs })
    }

    pub fn predict(&self, props: &PropertyMaps) -> Result<Vec<f64>> {
        props.check_grid(&self.grid)?;
        let x = props.to_flat();
        Ok(self
            .matrix
            .chunks_exact(x.len())
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn observed(&self) -> &[f64] {
        &self.d_obs
    }
}

impl Misfit for LinearMisfit {
    fn grid(&self) -> GridSpec {
        self.grid
    }

    fn data_norm_sq(&self) -> f64 {
        self.d_obs.iter().map(|v| v * v).sum()
    }

    fn misfit(&self, props: &PropertyMaps) -> Result<f64> {
        Ok(self.predict(props)?.iter().zip(&self.d_obs).map(|(p, d)| (d - p).powi(2)).sum())
    }

    fn misfit_and_grad(&self, props: &PropertyMaps) -> Result<(f64, PropertyGradient)> {
        let res: Vec<f64> = self.predict(props)?.iter().zip(&self.d_obs).map(|(p, d)| d - p).collect();
        let n = 2 * self.grid.len();
        let mut g = vec![0.0; n];
        for (row, r) in self.matrix.chunks_exact(n).zip(&res) {
            for (gi, a) in g.iter_mut().zip(row) {
                *gi -= 2.0 * a * r;
            }
        }
        Ok((res.iter().map(|r| r * r).sum(), PropertyGradient::from_flat(&g)))
    }
}
