//! Complex scattered-field observations and their on-disk container.
//!
//! Binary layout, all little-endian:
//!
//! | field    | type          |
//! |----------|---------------|
//! | magic    | `b"ISPD"`     |
//! | version  | `u32` (1)     |
//! | nl       | `f64`         |
//! | length   | `u64`         |
//! | data     | `length × (re: f64, im: f64)` |

use crate::error::{Error, Result};
use crate::scene::Scene;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"ISPD";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub data: Vec<Complex64>,
    /// Relative noise level the data were corrupted with (0 for clean data).
    pub noise_level: f64,
    /// Fingerprint of the scene that produced the data; empty when unknown.
    pub scene_fingerprint: String,
}

impl MeasurementSet {
    pub fn new(data: Vec<Complex64>, noise_level: f64, scene_fingerprint: String) -> Self {
        MeasurementSet { data, noise_level, scene_fingerprint }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn check_scene(&self, scene: &Scene) -> Result<()> {
        if self.data.len() != scene.data_len() {
            return Err(Error::shape(format!(
                "scene expects {} samples, measurement has {}",
                scene.data_len(),
                self.data.len()
            )));
        }
        // Data saved without a fingerprint (hand-made or external) are trusted.
        if !self.scene_fingerprint.is_empty() && self.scene_fingerprint != scene.fingerprint() {
            return Err(Error::shape("measurements were simulated for a different scene"));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Likelihood noise scale `nl · std(Re d)`, or `None` for clean data.
    pub fn default_sigma(&self) -> Option<f64> {
        if self.noise_level <= 0.0 || self.data.is_empty() {
            return None;
        }
        let n = self.data.len() as f64;
        let mean = self.data.iter().map(|c| c.re).sum::<f64>() / n;
        let var = self.data.iter().map(|c| (c.re - mean).powi(2)).sum::<f64>() / n;
        Some(self.noise_level * var.sqrt())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.noise_level.to_le_bytes())?;
        w.write_all(&(self.data.len() as u64).to_le_bytes())?;
        for c in &self.data {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::BadMagic { expected: MAGIC, found: magic });
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let nl = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            data.push(Complex64::new(re, f64::from_le_bytes(b8)));
        }
        Ok(MeasurementSet::new(data, nl, String::new()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::with_capacity(24 + 16 * self.data.len());
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// CSV with one row per sample: `freq_hz,tx,rx,re,im`.
    pub fn write_csv<W: Write>(&self, scene: &Scene, mut w: W) -> Result<()> {
        self.check_scene(scene)?;
        writeln!(w, "freq_hz,tx,rx,re,im")?;
        for (g, &f) in scene.frequencies.iter().enumerate() {
            for p in 0..scene.n_tx() {
                for q in 0..scene.n_rx() {
                    let c = self.data[scene.data_index(g, p, q)];
                    writeln!(w, "{f:e},{p},{q},{:e},{:e}", c.re, c.im)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_foreign_magic_and_version() {
        let mut buf = Vec::new();
        MeasurementSet::new(vec![Complex64::new(1.0, 2.0)], 0.04, String::new()).write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(MeasurementSet::read_from(&bad[..]), Err(Error::BadMagic { .. })));
        let mut bad = buf;
        bad[4] = 9;
        assert!(matches!(MeasurementSet::read_from(&bad[..]), Err(Error::UnsupportedVersion(9))));
    }

    #[test]
    fn truncated_file_is_io_error() {
        let mut buf = Vec::new();
        MeasurementSet::new(vec![Complex64::new(1.0, 2.0); 3], 0.0, String::new()).write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(matches!(MeasurementSet::read_from(&buf[..]), Err(Error::Io(_))));
    }

    #[test]
    fn default_sigma_uses_real_part_spread() {
        let d = MeasurementSet::new(vec![Complex64::new(1.0, 5.0), Complex64::new(3.0, -5.0)], 0.1, String::new());
        assert!((d.default_sigma().unwrap() - 0.1).abs() < 1e-15);
        assert!(MeasurementSet::new(d.data.clone(), 0.0, String::new()).default_sigma().is_none());
    }

    #[test]
    fn fingerprint_ties_data_to_its_scene() {
        use crate::scene::{BackgroundSpec, GridSpec};
        let ring = |radius| Scene::ring(GridSpec::new(4, 4, 0.01).unwrap(), BackgroundSpec::vacuum(), 2, 3, radius, vec![1e9]).unwrap();
        let (a, b) = (ring(0.3), ring(0.4));
        let m = MeasurementSet::new(vec![Complex64::new(0.0, 0.0); 6], 0.0, a.fingerprint());
        assert!(m.check_scene(&a).is_ok());
        assert!(m.check_scene(&b).is_err());
        assert!(MeasurementSet::new(m.data.clone(), 0.0, String::new()).check_scene(&b).is_ok());
    }

    proptest! {
        #[test]
        fn binary_roundtrip_is_bit_exact(v in prop::collection::vec((any::<f64>(), any::<f64>()), 0..40),
                                        nl in 0.0f64..1.0) {
            let data: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let m = MeasurementSet::new(data, nl, String::new());
            let mut buf = Vec::new();
            m.write_to(&mut buf).unwrap();
            let back = MeasurementSet::read_from(&buf[..]).unwrap();
            prop_assert_eq!(back.data.len(), m.data.len());
            for (a, b) in back.data.iter().zip(&m.data) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
            prop_assert_eq!(back.noise_level, nl);
        }
    }
}
