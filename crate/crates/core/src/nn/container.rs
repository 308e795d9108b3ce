//! The `LDWT` weight container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "LDWT" | u32 version | u32 n | n bytes of JSON metadata | u32 tensor count
//! per tensor: u16 name length | name (UTF-8) | u8 ndim | u32 dims[ndim] | f32 data
//! ```

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"LDWT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Encoder,
    Decoder,
    Score,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Encoder => "encoder",
            Architecture::Decoder => "decoder",
            Architecture::Score => "score",
        }
    }
}

/// Everything besides the tensors themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetMetadata {
    pub architecture: Architecture,
    /// `[N_u, N_v]`: latent rows and columns.
    pub latent_shape: [usize; 2],
    /// Image channels `C`; 1 means permittivity only, 2 adds conductivity.
    pub channels: usize,
    /// Physical `[lo, hi]` per channel, the image of `[-1, 1]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channel_ranges: Vec<[f64; 2]>,
    /// Conductivity assigned everywhere when `channels == 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_e_fixed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_d: Option<f64>,
    /// Fixed Gaussian Fourier projection frequencies of the score net.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fourier_w: Vec<f64>,
}

impl NetMetadata {
    pub fn decoder(latent_shape: [usize; 2], channel_ranges: Vec<[f64; 2]>) -> Self {
        NetMetadata {
            architecture: Architecture::Decoder,
            latent_shape,
            channels: channel_ranges.len(),
            channel_ranges,
            sigma_e_fixed: None,
            sigma_d: None,
            fourier_w: Vec::new(),
        }
    }

    pub fn encoder(latent_shape: [usize; 2], channel_ranges: Vec<[f64; 2]>) -> Self {
        NetMetadata { architecture: Architecture::Encoder, ..Self::decoder(latent_shape, channel_ranges) }
    }

    pub fn score(latent_shape: [usize; 2], sigma_d: f64, fourier_w: Vec<f64>) -> Self {
        NetMetadata {
            architecture: Architecture::Score,
            latent_shape,
            channels: 1,
            channel_ranges: Vec::new(),
            sigma_e_fixed: None,
            sigma_d: Some(sigma_d),
            fourier_w,
        }
    }

    /// Image-space `(height, width)` produced by the decoder or consumed by the encoder.
    pub fn image_shape(&self) -> (usize, usize) {
        (4 * self.latent_shape[0], 4 * self.latent_shape[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct WeightsContainer {
    pub metadata: NetMetadata,
    tensors: Vec<NamedTensor>,
    index: HashMap<String, usize>,
    /// SHA-256 of the serialized container.
    pub hash: String,
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

impl WeightsContainer {
    pub fn new(metadata: NetMetadata, tensors: Vec<NamedTensor>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, t) in tensors.iter().enumerate() {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::TensorShape {
                    name: t.name.clone(),
                    expected: t.shape.clone(),
                    found: vec![t.data.len()],
                });
            }
            if index.insert(t.name.clone(), i).is_some() {
                return Err(Error::config(format!("duplicate tensor `{}`", t.name)));
            }
        }
        let mut c = WeightsContainer { metadata, tensors, index, hash: String::new() };
        let mut bytes = Vec::new();
        c.write_to(&mut bytes)?;
        c.hash = hex::encode(Sha256::digest(&bytes));
        Ok(c)
    }

    pub fn tensors(&self) -> &[NamedTensor] {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    /// The tensor `name`, checked against `shape` and widened to `f64`.
    pub fn require(&self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let t = self.get(name).ok_or_else(|| Error::MissingTensor(name.to_string()))?;
        if t.shape != shape {
            return Err(Error::TensorShape { name: name.to_string(), expected: shape.to_vec(), found: t.shape.clone() });
        }
        Ok(t.data.iter().map(|&v| v as f64).collect())
    }

    pub fn without(&self, name: &str) -> Result<Self> {
        let tensors = self.tensors.iter().filter(|t| t.name != name).cloned().collect();
        Self::new(self.metadata.clone(), tensors)
    }

    pub fn expect_architecture(&self, arch: Architecture) -> Result<()> {
        if self.metadata.architecture != arch {
            return Err(Error::Architecture {
                expected: arch.as_str().into(),
                found: self.metadata.architecture.as_str().into(),
            });
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let meta = serde_json::to_vec(&self.metadata)?;
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(meta.len() as u32).to_le_bytes())?;
        w.write_all(&meta)?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            let name = t.name.as_bytes();
            let name_len = u16::try_from(name.len()).map_err(|_| Error::config("tensor name too long"))?;
            w.write_all(&name_len.to_le_bytes())?;
            w.write_all(name)?;
            w.write_all(&[t.shape.len() as u8])?;
            for &d in &t.shape {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            let mut buf = Vec::with_capacity(4 * t.data.len());
            for v in &t.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let found = read_array::<4>(r)?;
        if found != MAGIC {
            return Err(Error::BadMagic { expected: MAGIC, found });
        }
        let version = u32::from_le_bytes(read_array(r)?);
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let meta_len = u32::from_le_bytes(read_array(r)?) as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let metadata: NetMetadata = serde_json::from_slice(&meta)?;
        let count = u32::from_le_bytes(read_array(r)?) as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = u16::from_le_bytes(read_array(r)?) as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| Error::config("tensor name is not UTF-8"))?;
            let ndim = read_array::<1>(r)?[0] as usize;
            let shape = (0..ndim)
                .map(|_| Ok(u32::from_le_bytes(read_array(r)?) as usize))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let mut raw = vec![0u8; 4 * n];
            r.read_exact(&mut raw)?;
            let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        Self::new(metadata, tensors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a container; use the network constructors to validate it against an architecture.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }
}
