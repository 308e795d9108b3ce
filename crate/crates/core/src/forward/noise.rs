use crate::error::{Error, Result};
use crate::measurement::MeasurementSet;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn population_std(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Adds `nl·std(Re d)·n1 + j·nl·std(Im d)·n2` with independent standard normal
/// `n1`, `n2` drawn in element order (real draw first).
pub fn add_noise<R: Rng + ?Sized>(d: &MeasurementSet, nl: f64, rng: &mut R) -> Result<MeasurementSet> {
    if !(nl >= 0.0 && nl.is_finite()) {
        return Err(Error::config(format!("noise level must be non-negative, got {nl}")));
    }
    let mut out = d.clone();
    out.noise_level = nl;
    if nl == 0.0 {
        return Ok(out);
    }
    let sr = nl * population_std(d.data.iter().map(|c| c.re));
    let si = nl * population_std(d.data.iter().map(|c| c.im));
    for v in out.data.iter_mut() {
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(sr * n1, si * n2);
    }
    Ok(out)
}
