//! A small convolutional network runtime: weight container, layers, and the
//! encoder, decoder and score architectures.

mod container;
mod layers;
mod nets;

pub use container::{Architecture, NamedTensor, NetMetadata, WeightsContainer, MAGIC, VERSION};
pub use layers::{Conv2d, Dense, GroupNorm, Tensor, GROUP_NORM_EPS};
pub use nets::{random_container, tensor_specs, DecoderNet, EncoderNet, ScoreNet};

use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::scene::{PropertyGradient, PropertyMaps};

/// `[-1, 1] → [lo, hi]`.
fn denormalize(x: f64, [lo, hi]: [f64; 2]) -> f64 {
    lo + 0.5 * (x + 1.0) * (hi - lo)
}

fn normalize(v: f64, [lo, hi]: [f64; 2]) -> f64 {
    2.0 * (v - lo) / (hi - lo) - 1.0
}

/// A decoder network producing physical property maps.
///
/// Channel 0 is permittivity and channel 1, when present, conductivity.
/// Single-channel decoders assign `sigma_e_fixed` (default zero) everywhere.
#[derive(Debug, Clone)]
pub struct NeuralDecoder {
    net: DecoderNet,
}

impl NeuralDecoder {
    pub fn new(weights: &WeightsContainer) -> Result<Self> {
        Ok(NeuralDecoder { net: DecoderNet::from_container(weights)? })
    }

    pub fn net(&self) -> &DecoderNet {
        &self.net
    }

    fn to_props(&self, y: &Tensor) -> Result<PropertyMaps> {
        let meta = &self.net.metadata;
        let eps = y.plane(0).iter().map(|&v| denormalize(v, meta.channel_ranges[0])).collect();
        let sig = if meta.channels == 2 {
            y.plane(1).iter().map(|&v| denormalize(v, meta.channel_ranges[1])).collect()
        } else {
            vec![meta.sigma_e_fixed.unwrap_or(0.0); y.h * y.w]
        };
        PropertyMaps::unconstrained(y.w, y.h, eps, sig)
    }
}

impl Decoder for NeuralDecoder {
    fn latent_len(&self) -> usize {
        let [nu, nv] = self.net.metadata.latent_shape;
        nu * nv
    }

    fn output_shape(&self) -> (usize, usize) {
        let (h, w) = self.net.metadata.image_shape();
        (w, h)
    }

    fn decode(&self, z: &[f64]) -> Result<PropertyMaps> {
        self.to_props(&self.net.forward(z)?)
    }

    fn vjp(&self, z: &[f64], c: &PropertyGradient) -> Result<Vec<f64>> {
        let meta = &self.net.metadata;
        let (h, w) = meta.image_shape();
        if c.d_eps_r.len() != h * w || c.d_sigma_e.len() != h * w {
            return Err(Error::shape(format!("cotangent does not match the {w}x{h} output")));
        }
        let (_, tape) = self.net.forward_taped(z)?;
        let mut data: Vec<f64> = Vec::with_capacity(meta.channels * h * w);
        let [lo, hi] = meta.channel_ranges[0];
        data.extend(c.d_eps_r.iter().map(|v| 0.5 * (hi - lo) * v));
        if meta.channels == 2 {
            let [lo, hi] = meta.channel_ranges[1];
            data.extend(c.d_sigma_e.iter().map(|v| 0.5 * (hi - lo) * v));
        }
        Ok(self.net.backward(&tape, &Tensor::from_vec(meta.channels, h, w, data)))
    }
}

/// Encoder mean head applied to physical property maps.
#[derive(Debug, Clone)]
pub struct NeuralEncoder {
    net: EncoderNet,
}

impl NeuralEncoder {
    pub fn new(weights: &WeightsContainer) -> Result<Self> {
        Ok(NeuralEncoder { net: EncoderNet::from_container(weights)? })
    }

    pub fn encode(&self, props: &PropertyMaps) -> Result<Vec<f64>> {
        let meta = &self.net.metadata;
        let mut data: Vec<f64> = props.eps_r.iter().map(|&v| normalize(v, meta.channel_ranges[0])).collect();
        if meta.channels == 2 {
            data.extend(props.sigma_e.iter().map(|&v| normalize(v, meta.channel_ranges[1])));
        }
        if data.len() != meta.channels * props.nx * props.ny {
            return Err(Error::shape("property maps do not match the encoder channels"));
        }
        self.net.forward(&Tensor::from_vec(meta.channels, props.ny, props.nx, data))
    }
}
