//! Encoder, decoder and score networks built from a weight container.
//!
//! Each network is constructed through a [`ParamSource`], so the same code
//! path both validates a loaded container and produces a freshly initialized
//! one. Tensor names follow `block.layer.{weight,bias}`.

use super::container::{Architecture, NamedTensor, NetMetadata, WeightsContainer};
use super::layers::{
    add_channel_bias, silu, silu_backward, upsample2, upsample2_backward, Conv2d, Dense, GroupNorm, GroupNormCache,
    Tensor,
};
use crate::error::{Error, Result};
use crate::priors::SdeSchedule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Residual branches are added with this weight.
const RESIDUAL_SCALE: f64 = 0.1;
const EMBED_HALF: usize = 256;
const EMBED: usize = 2 * EMBED_HALF;

#[derive(Debug, Clone, Copy)]
enum Init {
    Weight { fan_in: usize },
    Zero,
    One,
}

/// Where network parameters come from.
trait ParamSource {
    fn fetch(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Vec<f64>>;
}

impl ParamSource for &WeightsContainer {
    fn fetch(&mut self, name: &str, shape: &[usize], _init: Init) -> Result<Vec<f64>> {
        self.require(name, shape)
    }
}

/// Draws fresh parameters and records them as `f32` tensors.
struct RandomSource {
    rng: ChaCha8Rng,
    gain: f64,
    tensors: Vec<NamedTensor>,
}

impl ParamSource for RandomSource {
    fn fetch(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Vec<f64>> {
        let n: usize = shape.iter().product();
        let data: Vec<f32> = match init {
            Init::Zero => vec![0.0; n],
            Init::One => vec![1.0; n],
            Init::Weight { fan_in } => {
                let std = self.gain / (fan_in as f64).sqrt();
                let normal = Normal::new(0.0, std).map_err(|e| Error::config(e.to_string()))?;
                (0..n).map(|_| normal.sample(&mut self.rng) as f32).collect()
            }
        };
        let out = data.iter().map(|&v| v as f64).collect();
        self.tensors.push(NamedTensor { name: name.to_string(), shape: shape.to_vec(), data });
        Ok(out)
    }
}

fn conv(src: &mut impl ParamSource, name: &str, cin: usize, cout: usize, stride: usize) -> Result<Conv2d> {
    let weight = src.fetch(&format!("{name}.weight"), &[cout, cin, 3, 3], Init::Weight { fan_in: 9 * cin })?;
    let bias = src.fetch(&format!("{name}.bias"), &[cout], Init::Zero)?;
    Ok(Conv2d { cin, cout, stride, weight, bias })
}

fn group_norm(src: &mut impl ParamSource, name: &str, channels: usize, groups: usize) -> Result<GroupNorm> {
    let gamma = src.fetch(&format!("{name}.weight"), &[channels], Init::One)?;
    let beta = src.fetch(&format!("{name}.bias"), &[channels], Init::Zero)?;
    Ok(GroupNorm { groups, gamma, beta })
}

fn dense(src: &mut impl ParamSource, name: &str, input: usize, output: usize) -> Result<Dense> {
    let weight = src.fetch(&format!("{name}.weight"), &[output, input], Init::Weight { fan_in: input })?;
    let bias = src.fetch(&format!("{name}.bias"), &[output], Init::Zero)?;
    Ok(Dense { input, output, weight, bias })
}

/// One `[upsample] → conv → [group norm] → [SiLU]` unit.
#[derive(Debug, Clone)]
struct Unit {
    up: bool,
    conv: Conv2d,
    norm: Option<GroupNorm>,
    act: bool,
}

#[derive(Debug, Clone)]
struct UnitTape {
    conv_in: (usize, usize),
    norm: Option<GroupNormCache>,
    pre_act: Option<Tensor>,
}

impl Unit {
    fn plain(conv: Conv2d) -> Self {
        Unit { up: false, conv, norm: None, act: false }
    }

    fn act(conv: Conv2d) -> Self {
        Unit { up: false, conv, norm: None, act: true }
    }

    fn normed(conv: Conv2d, norm: GroupNorm) -> Self {
        Unit { up: false, conv, norm: Some(norm), act: true }
    }

    fn upsampled(mut self) -> Self {
        self.up = true;
        self
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        self.forward_taped(x).0
    }

    fn forward_taped(&self, x: &Tensor) -> (Tensor, UnitTape) {
        let upsampled;
        let input = if self.up {
            upsampled = upsample2(x);
            &upsampled
        } else {
            x
        };
        let mut y = self.conv.forward(input);
        let mut tape = UnitTape { conv_in: (input.h, input.w), norm: None, pre_act: None };
        if let Some(gn) = &self.norm {
            let (n, cache) = gn.forward(&y);
            y = n;
            tape.norm = Some(cache);
        }
        if self.act {
            let a = silu(&y);
            tape.pre_act = Some(y);
            y = a;
        }
        (y, tape)
    }

    fn backward(&self, tape: &UnitTape, g: &Tensor) -> Tensor {
        let mut g = match &tape.pre_act {
            Some(pre) => silu_backward(pre, g),
            None => g.clone(),
        };
        if let (Some(gn), Some(cache)) = (&self.norm, &tape.norm) {
            g = gn.backward(cache, &g);
        }
        let g = self.conv.backward(&g, tape.conv_in.0, tape.conv_in.1);
        if self.up {
            upsample2_backward(&g)
        } else {
            g
        }
    }
}

fn chain(units: &[Unit], x: &Tensor) -> Tensor {
    units.iter().fold(x.clone(), |h, u| u.forward(&h))
}

fn chain_taped(units: &[Unit], x: &Tensor) -> (Tensor, Vec<UnitTape>) {
    let mut h = x.clone();
    let mut tapes = Vec::with_capacity(units.len());
    for u in units {
        let (y, t) = u.forward_taped(&h);
        tapes.push(t);
        h = y;
    }
    (h, tapes)
}

fn chain_backward(units: &[Unit], tapes: &[UnitTape], g: &Tensor) -> Tensor {
    units.iter().zip(tapes).rev().fold(g.clone(), |g, (u, t)| u.backward(t, &g))
}

fn three_convs(src: &mut impl ParamSource, name: &str, widths: [usize; 4]) -> Result<Vec<Unit>> {
    Ok(vec![
        Unit::act(conv(src, &format!("{name}.conv1"), widths[0], widths[1], 1)?),
        Unit::act(conv(src, &format!("{name}.conv2"), widths[1], widths[2], 1)?),
        Unit::plain(conv(src, &format!("{name}.conv3"), widths[2], widths[3], 1)?),
    ])
}

/// `X1 = f1(X)`, `X2 = f3(f2(X1))`, `Xres = X1 + 0.1 X2`, with every `f` a conv-GN-SiLU.
#[derive(Debug, Clone)]
struct ResidualStem {
    first: Unit,
    rest: [Unit; 2],
}

impl ResidualStem {
    fn build(src: &mut impl ParamSource, name: &str, cin: usize, width: usize, groups: usize) -> Result<Self> {
        let mut unit = |i: usize, cin: usize| -> Result<Unit> {
            Ok(Unit::normed(
                conv(src, &format!("{name}.conv{i}"), cin, width, 1)?,
                group_norm(src, &format!("{name}.norm{i}"), width, groups)?,
            ))
        };
        let first = unit(1, cin)?;
        let rest = [unit(2, width)?, unit(3, width)?];
        Ok(ResidualStem { first, rest })
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let x1 = self.first.forward(x);
        let x2 = chain(&self.rest, &x1);
        x1.axpy(RESIDUAL_SCALE, &x2)
    }

    fn forward_taped(&self, x: &Tensor) -> (Tensor, (UnitTape, Vec<UnitTape>)) {
        let (x1, t1) = self.first.forward_taped(x);
        let (x2, t2) = chain_taped(&self.rest, &x1);
        (x1.axpy(RESIDUAL_SCALE, &x2), (t1, t2))
    }

    fn backward(&self, tape: &(UnitTape, Vec<UnitTape>), g: &Tensor) -> Tensor {
        let g1 = g.axpy(1.0, &chain_backward(&self.rest, &tape.1, &g.scaled(RESIDUAL_SCALE)));
        self.first.backward(&tape.0, &g1)
    }
}

/// A resampling block: residual stem, then `main(Xres) + 0.1 · branch(Xres)`.
///
/// Encoder blocks downsample with stride-2 convolutions, decoder blocks
/// upsample before the first convolution of each path.
#[derive(Debug, Clone)]
struct ResampleBlock {
    stem: ResidualStem,
    main: Unit,
    branch: Vec<Unit>,
}

struct ResampleTape {
    stem: (UnitTape, Vec<UnitTape>),
    main: UnitTape,
    branch: Vec<UnitTape>,
}

impl ResampleBlock {
    fn encoder(src: &mut impl ParamSource, name: &str, cin: usize, cout: usize) -> Result<Self> {
        let stem = ResidualStem::build(src, name, cin, cout, cout / 2)?;
        let main = Unit::plain(conv(src, &format!("{name}.down1"), cout, cout, 2)?);
        let branch = vec![
            Unit::act(conv(src, &format!("{name}.conv4"), cout, cout, 1)?),
            Unit::act(conv(src, &format!("{name}.conv5"), cout, cout, 1)?),
            Unit::plain(conv(src, &format!("{name}.down2"), cout, cout, 2)?),
        ];
        Ok(ResampleBlock { stem, main, branch })
    }

    fn decoder(src: &mut impl ParamSource, name: &str, cin: usize, cout: usize) -> Result<Self> {
        let stem = ResidualStem::build(src, name, cin, 2 * cout, cout)?;
        let main = Unit::plain(conv(src, &format!("{name}.up1"), 2 * cout, cout, 1)?).upsampled();
        let branch = vec![
            Unit::act(conv(src, &format!("{name}.up2"), 2 * cout, cout, 1)?).upsampled(),
            Unit::act(conv(src, &format!("{name}.conv4"), cout, cout, 1)?),
            Unit::plain(conv(src, &format!("{name}.conv5"), cout, cout, 1)?),
        ];
        Ok(ResampleBlock { stem, main, branch })
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let r = self.stem.forward(x);
        self.main.forward(&r).axpy(RESIDUAL_SCALE, &chain(&self.branch, &r))
    }

    fn forward_taped(&self, x: &Tensor) -> (Tensor, ResampleTape) {
        let (r, stem) = self.stem.forward_taped(x);
        let (a, main) = self.main.forward_taped(&r);
        let (b, branch) = chain_taped(&self.branch, &r);
        (a.axpy(RESIDUAL_SCALE, &b), ResampleTape { stem, main, branch })
    }

    fn backward(&self, tape: &ResampleTape, g: &Tensor) -> Tensor {
        let gr = self
            .main
            .backward(&tape.main, g)
            .axpy(1.0, &chain_backward(&self.branch, &tape.branch, &g.scaled(RESIDUAL_SCALE)));
        self.stem.backward(&tape.stem, &gr)
    }
}

fn check_latent_shape(meta: &NetMetadata, multiple: usize) -> Result<()> {
    let [nu, nv] = meta.latent_shape;
    if nu == 0 || nv == 0 || nu % multiple != 0 || nv % multiple != 0 {
        return Err(Error::shape(format!("latent shape {nu}x{nv} must be positive multiples of {multiple}")));
    }
    Ok(())
}

fn check_ranges(meta: &NetMetadata) -> Result<()> {
    if meta.channels == 0 || meta.channels > 2 {
        return Err(Error::config(format!("networks map 1 or 2 property channels, got {}", meta.channels)));
    }
    if meta.channel_ranges.len() != meta.channels {
        return Err(Error::config("one denormalization range per channel required"));
    }
    if meta.channel_ranges.iter().any(|[lo, hi]| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::config("denormalization ranges need finite lo < hi"));
    }
    Ok(())
}

/// Latent-to-image network: `D-Block(3)` then `D-Block(2)`, `D-Block(1)`.
#[derive(Debug, Clone)]
pub struct DecoderNet {
    pub metadata: NetMetadata,
    head: Vec<Unit>,
    blocks: [ResampleBlock; 2],
}

/// Intermediate activations kept for the reverse pass.
pub struct DecoderTape {
    head: Vec<UnitTape>,
    blocks: Vec<ResampleTape>,
}

impl DecoderNet {
    fn build(src: &mut impl ParamSource, metadata: NetMetadata) -> Result<Self> {
        check_latent_shape(&metadata, 1)?;
        check_ranges(&metadata)?;
        let head = three_convs(src, "db3", [1, 16, 32, 64])?;
        let blocks = [
            ResampleBlock::decoder(src, "db2", 64, 16)?,
            ResampleBlock::decoder(src, "db1", 16, metadata.channels)?,
        ];
        Ok(DecoderNet { metadata, head, blocks })
    }

    pub fn from_container(w: &WeightsContainer) -> Result<Self> {
        w.expect_architecture(Architecture::Decoder)?;
        Self::build(&mut &*w, w.metadata.clone())
    }

    fn latent_tensor(&self, z: &[f64]) -> Result<Tensor> {
        let [nu, nv] = self.metadata.latent_shape;
        if z.len() != nu * nv {
            return Err(Error::shape(format!("latent has {} entries, expected {nu}x{nv}", z.len())));
        }
        Ok(Tensor::from_vec(1, nu, nv, z.to_vec()))
    }

    /// Normalized output in `[-1, 1]` units, `C × 4N_u × 4N_v`.
    pub fn forward(&self, z: &[f64]) -> Result<Tensor> {
        let x = self.latent_tensor(z)?;
        let h = chain(&self.head, &x);
        Ok(self.blocks.iter().fold(h, |h, b| b.forward(&h)))
    }

    pub fn forward_taped(&self, z: &[f64]) -> Result<(Tensor, DecoderTape)> {
        let x = self.latent_tensor(z)?;
        let (mut h, head) = chain_taped(&self.head, &x);
        let mut blocks = Vec::with_capacity(2);
        for b in &self.blocks {
            let (y, t) = b.forward_taped(&h);
            blocks.push(t);
            h = y;
        }
        Ok((h, DecoderTape { head, blocks }))
    }

    /// Pulls a gradient on the normalized output back to the latent.
    pub fn backward(&self, tape: &DecoderTape, g: &Tensor) -> Vec<f64> {
        let g = self.blocks.iter().zip(&tape.blocks).rev().fold(g.clone(), |g, (b, t)| b.backward(t, &g));
        chain_backward(&self.head, &tape.head, &g).data
    }
}

/// Image-to-latent-mean network: `E-Block(1)`, `E-Block(2)`, then the μ head.
#[derive(Debug, Clone)]
pub struct EncoderNet {
    pub metadata: NetMetadata,
    blocks: [ResampleBlock; 2],
    head: Vec<Unit>,
}

impl EncoderNet {
    fn build(src: &mut impl ParamSource, metadata: NetMetadata) -> Result<Self> {
        check_latent_shape(&metadata, 1)?;
        check_ranges(&metadata)?;
        let blocks = [
            ResampleBlock::encoder(src, "eb1", metadata.channels, 16)?,
            ResampleBlock::encoder(src, "eb2", 16, 64)?,
        ];
        let head = three_convs(src, "mu", [64, 32, 16, 1])?;
        Ok(EncoderNet { metadata, blocks, head })
    }

    pub fn from_container(w: &WeightsContainer) -> Result<Self> {
        w.expect_architecture(Architecture::Encoder)?;
        Self::build(&mut &*w, w.metadata.clone())
    }

    /// Latent mean for a normalized `C × H × W` input.
    pub fn forward(&self, x: &Tensor) -> Result<Vec<f64>> {
        let (h, w) = self.metadata.image_shape();
        if x.shape() != [self.metadata.channels, h, w] {
            return Err(Error::shape(format!(
                "encoder expects {}x{h}x{w} input, got {:?}",
                self.metadata.channels,
                x.shape()
            )));
        }
        let y = self.blocks.iter().fold(x.clone(), |h, b| b.forward(&h));
        Ok(chain(&self.head, &y).data)
    }
}

/// Down-sampling block of the score U-Net.
#[derive(Debug, Clone)]
struct DownBlock {
    pre: [Unit; 2],
    embed: Dense,
    post: [Unit; 2],
    down: Unit,
}

/// Up-sampling block of the score U-Net.
#[derive(Debug, Clone)]
struct UpBlock {
    pre: [Unit; 2],
    embed: Dense,
    post: [Unit; 2],
    up: Unit,
}

fn normed_unit(src: &mut impl ParamSource, name: &str, i: usize, cin: usize, cout: usize, groups: usize) -> Result<Unit> {
    Ok(Unit::normed(
        conv(src, &format!("{name}.conv{i}"), cin, cout, 1)?,
        group_norm(src, &format!("{name}.norm{i}"), cout, groups)?,
    ))
}

impl DownBlock {
    fn build(src: &mut impl ParamSource, name: &str, cin: usize, cout: usize) -> Result<Self> {
        let g = cout / 2;
        Ok(DownBlock {
            pre: [normed_unit(src, name, 1, cin, cout, g)?, normed_unit(src, name, 2, cout, cout, g)?],
            embed: dense(src, &format!("{name}.embed"), EMBED, cout)?,
            post: [normed_unit(src, name, 3, cout, cout, g)?, normed_unit(src, name, 4, cout, cout, g)?],
            down: Unit::act(conv(src, &format!("{name}.down"), cout, cout, 2)?),
        })
    }

    /// Returns `(downsampled output, skip)`.
    fn forward(&self, x: &Tensor, v: &[f64]) -> (Tensor, Tensor) {
        let h = add_channel_bias(&chain(&self.pre, x), &self.embed.forward(v));
        let skip = chain(&self.post, &h);
        (self.down.forward(&skip), skip)
    }
}

impl UpBlock {
    fn build(src: &mut impl ParamSource, name: &str, cin: usize, cout: usize) -> Result<Self> {
        let w = 2 * cout;
        Ok(UpBlock {
            pre: [normed_unit(src, name, 1, cin, w, cout)?, normed_unit(src, name, 2, w, w, cout)?],
            embed: dense(src, &format!("{name}.embed"), EMBED, w)?,
            post: [normed_unit(src, name, 3, w, w, cout)?, normed_unit(src, name, 4, w, w, cout)?],
            up: Unit::act(conv(src, &format!("{name}.up"), w, cout, 1)?).upsampled(),
        })
    }

    fn forward(&self, x: &Tensor, v: &[f64], skip: &Tensor) -> Tensor {
        let h = add_channel_bias(&chain(&self.pre, x), &self.embed.forward(v));
        self.up.forward(&chain(&self.post, &h)).concat(skip)
    }
}

/// Time-conditioned latent score network.
#[derive(Debug, Clone)]
pub struct ScoreNet {
    pub metadata: NetMetadata,
    schedule: SdeSchedule,
    embed: Dense,
    down: Vec<DownBlock>,
    up: Vec<UpBlock>,
    out: Vec<Unit>,
}

impl ScoreNet {
    fn build(src: &mut impl ParamSource, metadata: NetMetadata) -> Result<Self> {
        check_latent_shape(&metadata, 8)?;
        let sigma_d = metadata.sigma_d.ok_or_else(|| Error::config("score container lacks sigma_d"))?;
        let schedule = SdeSchedule::new(sigma_d)?;
        if metadata.fourier_w.len() != EMBED_HALF {
            return Err(Error::TensorShape {
                name: "fourier_w".into(),
                expected: vec![EMBED_HALF],
                found: vec![metadata.fourier_w.len()],
            });
        }
        let embed = dense(src, "embed", EMBED, EMBED)?;
        let down = vec![
            DownBlock::build(src, "ds1", 1, 32)?,
            DownBlock::build(src, "ds2", 32, 64)?,
            DownBlock::build(src, "ds3", 64, 128)?,
        ];
        let up = vec![
            UpBlock::build(src, "us3", 128, 128)?,
            UpBlock::build(src, "us2", 256, 64)?,
            UpBlock::build(src, "us1", 128, 32)?,
        ];
        let out = three_convs(src, "out", [64, 64, 64, 1])?;
        Ok(ScoreNet { metadata, schedule, embed, down, up, out })
    }

    pub fn from_container(w: &WeightsContainer) -> Result<Self> {
        w.expect_architecture(Architecture::Score)?;
        Self::build(&mut &*w, w.metadata.clone())
    }

    pub fn schedule(&self) -> &SdeSchedule {
        &self.schedule
    }

    /// `SiLU(Dense([sin 2πtW, cos 2πtW]))`.
    fn time_embedding(&self, t: f64) -> Vec<f64> {
        let two_pi_t = 2.0 * std::f64::consts::PI * t;
        let mut vp = Vec::with_capacity(EMBED);
        vp.extend(self.metadata.fourier_w.iter().map(|w| (two_pi_t * w).sin()));
        vp.extend(self.metadata.fourier_w.iter().map(|w| (two_pi_t * w).cos()));
        self.embed.forward(&vp).into_iter().map(|v| v / (1.0 + (-v).exp())).collect()
    }

    pub fn forward(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::TimeOutOfRange(t));
        }
        let [nu, nv] = self.metadata.latent_shape;
        if z.len() != nu * nv {
            return Err(Error::shape(format!("latent has {} entries, expected {nu}x{nv}", z.len())));
        }
        let v = self.time_embedding(t);
        let mut h = Tensor::from_vec(1, nu, nv, z.to_vec());
        let mut skips = Vec::with_capacity(3);
        for b in &self.down {
            let (y, s) = b.forward(&h, &v);
            skips.push(s);
            h = y;
        }
        for b in &self.up {
            h = b.forward(&h, &v, &skips.pop().expect("one skip per level"));
        }
        let beta = self.schedule.beta(t);
        Ok(chain(&self.out, &h).data.into_iter().map(|s| s / beta).collect())
    }
}

/// Deterministic random initialization of an architecture.
///
/// Weights are drawn from `N(0, gain² / fan_in)`, biases and norm shifts are
/// zero and norm scales one. Score containers also get Fourier frequencies
/// `W ~ N(0, 16²)` unless the metadata already carries them.
pub fn random_container(mut metadata: NetMetadata, seed: u64, gain: f64) -> Result<WeightsContainer> {
    let mut src = RandomSource { rng: ChaCha8Rng::seed_from_u64(seed), gain, tensors: Vec::new() };
    match metadata.architecture {
        Architecture::Decoder => {
            DecoderNet::build(&mut src, metadata.clone())?;
        }
        Architecture::Encoder => {
            EncoderNet::build(&mut src, metadata.clone())?;
        }
        Architecture::Score => {
            if metadata.fourier_w.is_empty() {
                let normal = Normal::new(0.0, 16.0).expect("finite std");
                metadata.fourier_w = (0..EMBED_HALF).map(|_| normal.sample(&mut src.rng) as f32 as f64).collect();
            }
            ScoreNet::build(&mut src, metadata.clone())?;
        }
    }
    WeightsContainer::new(metadata, src.tensors)
}

/// Every tensor name and shape an architecture reads, in construction order.
pub fn tensor_specs(metadata: &NetMetadata) -> Result<Vec<(String, Vec<usize>)>> {
    let c = random_container(metadata.clone(), 0, 0.0)?;
    Ok(c.tensors().iter().map(|t| (t.name.clone(), t.shape.clone())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn decoder_meta(n: usize, channels: usize) -> NetMetadata {
        let ranges = [[1.0, 80.0], [0.0, 2.0]];
        NetMetadata::decoder([n, n], ranges[..channels].to_vec())
    }

    #[test]
    fn decoder_quadruples_latent() {
        let w = random_container(decoder_meta(4, 2), 1, 1.0).unwrap();
        let net = DecoderNet::from_container(&w).unwrap();
        let z: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).sin()).collect();
        assert_eq!(net.forward(&z).unwrap().shape(), [2, 16, 16]);
        assert!(net.forward(&z[..15]).is_err());
    }

    #[test]
    fn encoder_divides_by_four() {
        let w = random_container(NetMetadata::encoder([6, 6], vec![[1.0, 80.0]]), 2, 1.0).unwrap();
        let net = EncoderNet::from_container(&w).unwrap();
        let x = Tensor::from_vec(1, 24, 24, (0..576).map(|i| (i as f64 * 0.1).cos()).collect());
        let a = net.forward(&x).unwrap();
        assert_eq!(a.len(), 36);
        assert_eq!(a, net.forward(&x).unwrap());
    }

    #[test]
    fn score_net_preserves_shape_and_rejects_bad_time() {
        let w = random_container(NetMetadata::score([8, 8], 20.0, Vec::new()), 3, 1.0).unwrap();
        let net = ScoreNet::from_container(&w).unwrap();
        let z: Vec<f64> = (0..64).map(|i| (i as f64).sin()).collect();
        let s = net.forward(&z, 0.5).unwrap();
        assert_eq!(s.len(), 64);
        assert!(s.iter().all(|v| v.is_finite()));
        assert!(matches!(net.forward(&z, 0.0), Err(Error::TimeOutOfRange(_))));
        assert!(matches!(net.forward(&z, 1.5), Err(Error::TimeOutOfRange(_))));
    }

    #[test]
    fn score_net_needs_multiple_of_eight() {
        assert!(random_container(NetMetadata::score([12, 12], 20.0, Vec::new()), 0, 1.0).is_err());
    }

    #[test]
    fn wrong_architecture_is_rejected() {
        let w = random_container(decoder_meta(2, 1), 0, 1.0).unwrap();
        assert!(matches!(EncoderNet::from_container(&w), Err(Error::Architecture { .. })));
    }

    #[test]
    fn specs_are_unique_and_complete() {
        let specs = tensor_specs(&decoder_meta(2, 2)).unwrap();
        let mut names: Vec<_> = specs.iter().map(|s| s.0.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), specs.len());
        assert!(specs.iter().any(|(n, s)| n == "db1.up1.weight" && s == &vec![2, 4, 3, 3]));
    }

    #[test]
    fn decoder_backward_matches_differences() {
        let w = random_container(decoder_meta(3, 2), 5, 1.0).unwrap();
        let net = DecoderNet::from_container(&w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (y, tape) = net.forward_taped(&z).unwrap();
        let c = Tensor::from_vec(y.c, y.h, y.w, (0..y.data.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let g = net.backward(&tape, &c);
        let u: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-5;
        let at = |s: f64| net.forward(&z.iter().zip(&u).map(|(a, b)| a + s * b).collect::<Vec<_>>()).unwrap();
        let (p, m) = (at(h), at(-h));
        let fd: f64 = p.data.iter().zip(&m.data).zip(&c.data).map(|((a, b), ci)| ci * (a - b) / (2.0 * h)).sum();
        let an: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{fd} vs {an}");
    }
}
