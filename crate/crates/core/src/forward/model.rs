use super::contrast::{build_contrast, ContrastMap};
use super::greens::{incident_fields, GreensOperators};
use super::solver::{SolverOptions, SystemSolver};
use crate::error::{Error, Result};
use crate::measurement::MeasurementSet;
use crate::scene::{PropertyMaps, Scene};
use num_complex::Complex64;
use rayon::prelude::*;

/// Incident and total fields of every transmitter at one frequency.
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub frequency: f64,
    pub e_inc: Vec<Vec<Complex64>>,
    pub e_tot: Vec<Vec<Complex64>>,
}

/// Solves `(I - G_D diag(chi)) E = e_inc`.
pub fn solve_total_field(
    ops: &GreensOperators,
    chi: &ContrastMap,
    e_inc: &[Complex64],
    opts: &SolverOptions,
) -> Result<Vec<Complex64>> {
    SystemSolver::new(ops, &chi.chi, opts)?.solve(e_inc)
}

/// `G_S diag(chi) e_tot`.
pub fn scattered_field(ops: &GreensOperators, chi: &ContrastMap, e_tot: &[Complex64]) -> Result<Vec<Complex64>> {
    if chi.len() != ops.n_cells() || e_tot.len() != ops.n_cells() {
        return Err(Error::shape("contrast or field does not match the grid"));
    }
    let current: Vec<Complex64> = chi.chi.iter().zip(e_tot).map(|(c, e)| c * e).collect();
    Ok(ops.apply_gs(&current))
}

/// Forward operator of a fixed scene with all per-frequency state precomputed.
#[derive(Debug)]
pub struct ForwardModel {
    scene: Scene,
    opts: SolverOptions,
    ops: Vec<GreensOperators>,
    // [frequency][transmitter][cell]
    incident: Vec<Vec<Vec<Complex64>>>,
}

impl ForwardModel {
    pub fn new(scene: Scene, opts: SolverOptions) -> Result<Self> {
        scene.validate()?;
        let mut ops = Vec::with_capacity(scene.n_freq());
        let mut incident = Vec::with_capacity(scene.n_freq());
        for &f in &scene.frequencies {
            ops.push(GreensOperators::assemble(&scene, f)?);
            incident.push(incident_fields(&scene, f)?);
        }
        Ok(ForwardModel { scene, opts, ops, incident })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn operators(&self, freq: usize) -> &GreensOperators {
        &self.ops[freq]
    }

    pub fn incident(&self, freq: usize, tx: usize) -> &[Complex64] {
        &self.incident[freq][tx]
    }

    pub fn contrasts(&self, props: &PropertyMaps) -> Result<Vec<ContrastMap>> {
        props.check_grid(&self.scene.grid)?;
        self.scene
            .frequencies
            .iter()
            .map(|&f| build_contrast(props, &self.scene.background, f))
            .collect()
    }

    /// Runs `solve` for every transmitter at frequency `g`, in parallel when enabled.
    /// Results are always ordered by transmitter, so scheduling never changes them.
    pub(crate) fn per_tx<T: Send>(
        &self,
        g: usize,
        solve: impl Fn(usize) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        let tag = |p: usize, r: Result<T>| {
            r.map_err(|e| Error::Solve { tx: p, freq: g, source: Box::new(e) })
        };
        if self.opts.parallel {
            (0..self.scene.n_tx()).into_par_iter().map(|p| tag(p, solve(p))).collect()
        } else {
            (0..self.scene.n_tx()).map(|p| tag(p, solve(p))).collect()
        }
    }

    /// Noise-free data and the fields that produced them.
    pub fn simulate_contrast(&self, chis: &[ContrastMap]) -> Result<(Vec<Complex64>, Vec<FieldSet>)> {
        if chis.len() != self.scene.n_freq() {
            return Err(Error::shape("one contrast map per frequency expected"));
        }
        let mut data = Vec::with_capacity(self.scene.data_len());
        let mut fields = Vec::with_capacity(chis.len());
        for (g, chi) in chis.iter().enumerate() {
            let ops = &self.ops[g];
            let solver = SystemSolver::new(ops, &chi.chi, &self.opts)
                .map_err(|e| Error::Solve { tx: 0, freq: g, source: Box::new(e) })?;
            let e_tot = self.per_tx(g, |p| solver.solve(&self.incident[g][p]))?;
            for e in &e_tot {
                data.extend(scattered_field(ops, chi, e)?);
            }
            fields.push(FieldSet { frequency: chi.frequency, e_inc: self.incident[g].clone(), e_tot });
        }
        Ok((data, fields))
    }

    pub fn simulate_with_fields(&self, props: &PropertyMaps) -> Result<(Vec<Complex64>, Vec<FieldSet>)> {
        self.simulate_contrast(&self.contrasts(props)?)
    }

    /// Noise-free data in (frequency, transmitter, receiver) order.
    pub fn simulate(&self, props: &PropertyMaps) -> Result<Vec<Complex64>> {
        Ok(self.simulate_with_fields(props)?.0)
    }
}

/// Noise-free measurements of `props` in `scene`.
pub fn forward_simulate(props: &PropertyMaps, scene: &Scene, opts: &SolverOptions) -> Result<MeasurementSet> {
    let model = ForwardModel::new(scene.clone(), *opts)?;
    let data = model.simulate(props)?;
    Ok(MeasurementSet::new(data, 0.0, scene.fingerprint()))
}
