//! Forward-only multi-scale feature fusion.
//!
//! Given a high-resolution feature `F_1` and a half-resolution feature `F_2`:
//!
//! ```text
//! F_12 = conv_s1( conv_s2(F_1) ⊕ F_2 )
//! F_32 = up2x( resblock_s2(F_2) )
//! F_ms = F_2 ⊕ F_12 ⊕ F_32
//! ```
//!
//! All three outputs share `F_2`'s spatial size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ImagePlane;

pub const DEFAULT_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Elu,
    /// No non-linearity.
    Linear,
}

#[inline]
fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// Square convolution kernel with bias, stride and activation.
///
/// Weights are laid out `[c_out][c_in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlockWeights {
    c_in: usize,
    c_out: usize,
    kernel: usize,
    stride: usize,
    activation: Activation,
    weights: Vec<f32>,
    biases: Vec<f32>,
}

impl ConvBlockWeights {
    pub fn new(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
        weights: Vec<f32>,
        biases: Vec<f32>,
    ) -> Result<Self> {
        if c_in == 0 || c_out == 0 {
            return Err(Error::dim("convolution needs positive channel counts"));
        }
        if kernel != 1 && kernel != 3 {
            return Err(Error::domain(format!("kernel size must be 1 or 3, got {kernel}")));
        }
        if stride != 1 && stride != 2 {
            return Err(Error::domain(format!("stride must be 1 or 2, got {stride}")));
        }
        if weights.len() != c_out * c_in * kernel * kernel || biases.len() != c_out {
            return Err(Error::dim("weight or bias length does not match the kernel shape"));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::domain("weights must be finite"));
        }
        Ok(Self {
            c_in,
            c_out,
            kernel,
            stride,
            activation,
            weights,
            biases,
        })
    }

    /// He-style uniform initialisation, `±sqrt(6 / fan_in)`, zero bias.
    pub fn random<R: Rng + ?Sized>(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let bound = (6.0 / (c_in * kernel * kernel) as f64).sqrt();
        let weights = (0..c_out * c_in * kernel * kernel)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
            .map(|v| v as f32)
            .collect();
        let biases = (0..c_out).map(|_| (rng.random::<f64>() * 0.2 - 0.1) as f32).collect();
        Self::new(c_in, c_out, kernel, stride, activation, weights, biases)
    }

    /// `1×1` kernel copying input channel `i` to output channel `i`.
    pub fn identity_projection(channels: usize, stride: usize) -> Result<Self> {
        let mut weights = vec![0.0; channels * channels];
        for c in 0..channels {
            weights[c * channels + c] = 1.0;
        }
        Self::new(channels, channels, 1, stride, Activation::Linear, weights, vec![0.0; channels])
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn biases(&self) -> &[f32] {
        &self.biases
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    #[inline]
    fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.c_in + i) * self.kernel + ky) * self.kernel + kx] as f64
    }
}

/// Zero-padded (`kernel / 2`) convolution, bias, then activation.
/// Output size is `ceil(input / stride)`.
pub fn conv2d_forward(input: &ImagePlane, w: &ConvBlockWeights) -> Result<ImagePlane> {
    if input.channels() != w.c_in {
        return Err(Error::dim(format!(
            "convolution expects {} input channels, got {}",
            w.c_in,
            input.channels()
        )));
    }
    let (h, wd) = input.dims();
    let (oh, ow) = (h.div_ceil(w.stride), wd.div_ceil(w.stride));
    let pad = (w.kernel / 2) as isize;
    let mut out = vec![0f32; oh * ow * w.c_out];
    let mut acc = vec![0f64; w.c_out];
    for oy in 0..oh {
        for ox in 0..ow {
            acc.iter_mut()
                .zip(&w.biases)
                .for_each(|(a, &b)| *a = b as f64);
            for ky in 0..w.kernel {
                let iy = (oy * w.stride) as isize + ky as isize - pad;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..w.kernel {
                    let ix = (ox * w.stride) as isize + kx as isize - pad;
                    if ix < 0 || ix >= wd as isize {
                        continue;
                    }
                    let px = input.pixel(iy as usize, ix as usize);
                    for (o, a) in acc.iter_mut().enumerate() {
                        for (i, &v) in px.iter().enumerate() {
                            *a += w.weight(o, i, ky, kx) * v as f64;
                        }
                    }
                }
            }
            let base = (oy * ow + ox) * w.c_out;
            for (o, &a) in acc.iter().enumerate() {
                out[base + o] = match w.activation {
                    Activation::Elu => elu(a),
                    Activation::Linear => a,
                } as f32;
            }
        }
    }
    ImagePlane::from_vec(oh, ow, w.c_out, out)
}

/// Residual block: `conv2(conv1(x)) + projection(x)`, no activation after
/// the sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ResBlockWeights {
    /// 3×3, stride 2.
    pub conv1: ConvBlockWeights,
    /// 3×3, stride 1.
    pub conv2: ConvBlockWeights,
    /// 1×1, stride 2 shortcut.
    pub projection: ConvBlockWeights,
}

impl ResBlockWeights {
    pub fn random<R: Rng + ?Sized>(c_in: usize, c_out: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            conv1: ConvBlockWeights::random(c_in, c_out, 3, 2, Activation::Elu, rng)?,
            conv2: ConvBlockWeights::random(c_out, c_out, 3, 1, Activation::Elu, rng)?,
            projection: ConvBlockWeights::random(c_in, c_out, 1, 2, Activation::Linear, rng)?,
        })
    }

    fn check(&self, c_in: usize) -> Result<()> {
        let (a, b, p) = (&self.conv1, &self.conv2, &self.projection);
        let ok = a.stride == 2
            && b.stride == 1
            && p.stride == 2
            && p.kernel == 1
            && a.c_in == c_in
            && p.c_in == c_in
            && b.c_in == a.c_out
            && b.c_out == p.c_out;
        if ok {
            Ok(())
        } else {
            Err(Error::dim("residual block weights do not chain"))
        }
    }
}

pub fn resblock_forward(input: &ImagePlane, w: &ResBlockWeights) -> Result<ImagePlane> {
    w.check(input.channels())?;
    let main = conv2d_forward(&conv2d_forward(input, &w.conv1)?, &w.conv2)?;
    let shortcut = conv2d_forward(input, &w.projection)?;
    let data = main
        .data()
        .iter()
        .zip(shortcut.data())
        .map(|(&a, &b)| a + b)
        .collect();
    ImagePlane::from_vec(main.height(), main.width(), main.channels(), data)
}

#[inline]
fn half_pixel_source(dst: usize, src_len: usize) -> f64 {
    ((dst as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, (src_len - 1) as f64)
}

/// 2× bilinear upsampling with half-pixel (align-corners-false) sampling.
pub fn upsample_bilinear_2x(input: &ImagePlane) -> ImagePlane {
    let (h, w) = input.dims();
    let c = input.channels();
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        let sy = half_pixel_source(oy, h);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ay = sy - y0 as f64;
        for ox in 0..ow {
            let sx = half_pixel_source(ox, w);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let ax = sx - x0 as f64;
            for ch in 0..c {
                let v = (1.0 - ax) * (1.0 - ay) * input.get(y0, x0, ch) as f64
                    + ax * (1.0 - ay) * input.get(y0, x1, ch) as f64
                    + (1.0 - ax) * ay * input.get(y1, x0, ch) as f64
                    + ax * ay * input.get(y1, x1, ch) as f64;
                out.push(v as f32);
            }
        }
    }
    ImagePlane::from_vec(oh, ow, c, out).expect("upsampled dimensions are positive")
}

/// 2×2 box average; odd trailing rows/columns average what exists.
pub fn downsample_2x(input: &ImagePlane) -> ImagePlane {
    let (h, w) = input.dims();
    let c = input.channels();
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    ImagePlane::from_fn(oh, ow, c, |r, col, ch| {
        let mut acc = 0.0f64;
        let mut n = 0;
        for y in 2 * r..(2 * r + 2).min(h) {
            for x in 2 * col..(2 * col + 2).min(w) {
                acc += input.get(y, x, ch) as f64;
                n += 1;
            }
        }
        (acc / n as f64) as f32
    })
    .expect("downsampled dimensions are positive")
}

/// Channel widths of the fusion block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub f1_channels: usize,
    pub f2_channels: usize,
    /// Output of the stride-2 convolution on `F_1`.
    pub down_width: usize,
    pub f12_channels: usize,
    pub f32_channels: usize,
}

impl FusionConfig {
    pub fn with_inputs(f1_channels: usize, f2_channels: usize) -> Self {
        Self {
            f1_channels,
            f2_channels,
            down_width: DEFAULT_WIDTH,
            f12_channels: DEFAULT_WIDTH,
            f32_channels: DEFAULT_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    /// Stride-2 convolution on `F_1`.
    pub down: ConvBlockWeights,
    /// Stride-1 convolution on `down(F_1) ⊕ F_2`.
    pub fuse: ConvBlockWeights,
    pub res: ResBlockWeights,
}

impl FusionWeights {
    pub fn seeded(config: &FusionConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = config;
        Ok(Self {
            down: ConvBlockWeights::random(c.f1_channels, c.down_width, 3, 2, Activation::Elu, &mut rng)?,
            fuse: ConvBlockWeights::random(
                c.down_width + c.f2_channels,
                c.f12_channels,
                3,
                1,
                Activation::Elu,
                &mut rng,
            )?,
            res: ResBlockWeights::random(c.f2_channels, c.f32_channels, &mut rng)?,
        })
    }

    fn named(&self) -> [(&'static str, &ConvBlockWeights); 5] {
        [
            ("down", &self.down),
            ("fuse", &self.fuse),
            ("res_conv1", &self.res.conv1),
            ("res_conv2", &self.res.conv2),
            ("res_projection", &self.res.projection),
        ]
    }

    /// Flat little-endian f32 blob plus the manifest describing it.
    pub fn to_blob(&self) -> (Vec<u8>, WeightManifest) {
        let mut blob = Vec::new();
        let mut tensors = Vec::new();
        for (name, w) in self.named() {
            let weight_offset = blob.len() / 4;
            blob.extend(w.weights.iter().flat_map(|v| v.to_le_bytes()));
            let bias_offset = blob.len() / 4;
            blob.extend(w.biases.iter().flat_map(|v| v.to_le_bytes()));
            tensors.push(TensorEntry {
                name: name.to_string(),
                c_in: w.c_in,
                c_out: w.c_out,
                kernel: w.kernel,
                stride: w.stride,
                activation: w.activation,
                weight_offset,
                bias_offset,
            });
        }
        (blob, WeightManifest { tensors })
    }

    pub fn from_blob(blob: &[u8], manifest: &WeightManifest) -> Result<Self> {
        if !blob.len().is_multiple_of(4) {
            return Err(Error::format("weight blob length is not a multiple of 4"));
        }
        let floats: Vec<f32> = blob
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let load = |name: &str| -> Result<ConvBlockWeights> {
            let t = manifest
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::format(format!("manifest lacks tensor {name:?}")))?;
            let wlen = t.c_out * t.c_in * t.kernel * t.kernel;
            let wslice = floats
                .get(t.weight_offset..t.weight_offset + wlen)
                .ok_or_else(|| Error::format(format!("tensor {name:?} weights overrun the blob")))?;
            let bslice = floats
                .get(t.bias_offset..t.bias_offset + t.c_out)
                .ok_or_else(|| Error::format(format!("tensor {name:?} biases overrun the blob")))?;
            ConvBlockWeights::new(
                t.c_in,
                t.c_out,
                t.kernel,
                t.stride,
                t.activation,
                wslice.to_vec(),
                bslice.to_vec(),
            )
        };
        Ok(Self {
            down: load("down")?,
            fuse: load("fuse")?,
            res: ResBlockWeights {
                conv1: load("res_conv1")?,
                conv2: load("res_conv2")?,
                projection: load("res_projection")?,
            },
        })
    }
}

/// Shape manifest for a weight blob; offsets count f32 elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightManifest {
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub activation: Activation,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeatures {
    pub f12: ImagePlane,
    pub f32: ImagePlane,
    /// `F_2 ⊕ F_12 ⊕ F_32`, in that channel order.
    pub fms: ImagePlane,
}

/// Requires `F_1` at exactly twice the (even) spatial size of `F_2`.
pub fn msfusion_forward(f1: &ImagePlane, f2: &ImagePlane, w: &FusionWeights) -> Result<FusedFeatures> {
    let (h2, w2) = f2.dims();
    if f1.dims() != (2 * h2, 2 * w2) {
        return Err(Error::dim(format!(
            "F_1 must be 2× F_2: got {}x{} and {h2}x{w2}",
            f1.height(),
            f1.width()
        )));
    }
    if h2 % 2 != 0 || w2 % 2 != 0 {
        return Err(Error::dim("F_2 needs even dimensions so the residual path upsamples back"));
    }
    let down = conv2d_forward(f1, &w.down)?;
    let f12 = conv2d_forward(&ImagePlane::concat(&[&down, f2])?, &w.fuse)?;
    let f32 = upsample_bilinear_2x(&resblock_forward(f2, &w.res)?);
    let fms = ImagePlane::concat(&[f2, &f12, &f32])?;
    Ok(FusedFeatures { f12, f32, fms })
}
