//! Teacher-student gating and the final training-loss composition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costvolume::CostVolume;
use crate::error::{Error, Result};
use crate::photometric::LossMap;
use crate::raster::{BinaryMask, DepthMap, ImagePlane};

/// Smoothness weight in the final loss.
pub const DEFAULT_BETA: f64 = 1e-3;

/// `M_r`: true where the single-frame photometric loss is strictly lower
/// than the multi-frame one.
pub fn robust_mask(l_ph_single: &LossMap, l_ph_multi: &LossMap) -> Result<BinaryMask> {
    if l_ph_single.dims() != l_ph_multi.dims() {
        return Err(Error::dim("loss maps differ in size"));
    }
    let (h, w) = l_ph_single.dims();
    let data = l_ph_single
        .data()
        .iter()
        .zip(l_ph_multi.data())
        .map(|(s, m)| s < m)
        .collect();
    BinaryMask::from_vec(h, w, data)
}

/// Gate for the consistency loss. Augmented samples use `m ∧ m_r`; others
/// ignore `m_r`.
pub fn compose_gate(m: &BinaryMask, m_r: Option<&BinaryMask>, augmented: bool) -> Result<BinaryMask> {
    match (augmented, m_r) {
        (true, Some(r)) => m.and(r),
        (true, None) => Err(Error::domain("augmented samples need a robust mask")),
        (false, Some(r)) if r.dims() != m.dims() => Err(Error::dim("robust mask does not match")),
        (false, _) => Ok(m.clone()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the number of pixels valid in both depth maps; ungated
    /// pixels contribute zero.
    #[default]
    Mean,
    /// Divide by the number of gated valid pixels.
    GatedMean,
    /// Plain sum over gated valid pixels.
    Sum,
}

/// `Σ gate·|d_multi − d_single|` over pixels valid in both maps.
///
/// `d_single` is a fixed regression target: a trainer must not propagate
/// gradients into it.
pub fn consistency_loss(
    d_multi: &DepthMap,
    d_single: &DepthMap,
    gate: &BinaryMask,
    normalization: Normalization,
) -> Result<f64> {
    if d_multi.dims() != d_single.dims() || gate.dims() != d_multi.dims() {
        return Err(Error::dim("consistency loss inputs differ in size"));
    }
    let mut sum = 0.0;
    let mut gated = 0usize;
    let mut valid = 0usize;
    for (i, &g) in gate.data().iter().enumerate() {
        if let (Some(a), Some(b)) = (d_multi.at(i), d_single.at(i)) {
            valid += 1;
            if g {
                sum += (a as f64 - b as f64).abs();
                gated += 1;
            }
        }
    }
    let denom = match normalization {
        Normalization::Sum => return Ok(sum),
        Normalization::Mean => valid,
        Normalization::GatedMean => gated,
    };
    Ok(if denom == 0 { 0.0 } else { sum / denom as f64 })
}

/// Colour jitter ranges for the static-frame augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterConfig {
    /// Gains drawn from `[1 − gain, 1 + gain]`.
    pub gain: f64,
    /// Biases drawn from `[−bias, bias]`.
    pub bias: f64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        Self { gain: 0.1, bias: 0.05 }
    }
}

impl JitterConfig {
    pub fn none() -> Self {
        Self { gain: 0.0, bias: 0.0 }
    }
}

/// Jittered copy of the target standing in for the source frame, simulating
/// a camera that did not move.
pub fn static_frame_augment(target: &ImagePlane, jitter_seed: u64, jitter: &JitterConfig) -> Result<ImagePlane> {
    let mut rng = ChaCha8Rng::seed_from_u64(jitter_seed);
    let params: Vec<(f64, f64)> = (0..target.channels())
        .map(|_| {
            let g = 1.0 + jitter.gain * (2.0 * rng.random::<f64>() - 1.0);
            let b = jitter.bias * (2.0 * rng.random::<f64>() - 1.0);
            (g, b)
        })
        .collect();
    let c = target.channels();
    let data = target
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (g, b) = params[i % c];
            (v as f64 * g + b).clamp(0.0, 1.0) as f32
        })
        .collect();
    ImagePlane::from_vec(target.height(), target.width(), c, data)
}

/// Same shape, every cost zero and valid.
pub fn zero_cost_volume_augment(volume: &CostVolume) -> CostVolume {
    let n = volume.costs().len();
    CostVolume::from_parts(
        volume.bins().clone(),
        volume.height(),
        volume.width(),
        vec![0.0; n],
        vec![true; n],
    )
    .expect("shape is unchanged")
}

/// Inputs to the final loss.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    /// Multi-frame photometric loss (already min-reduced over sources).
    pub l_ph: &'a LossMap,
    /// Teacher photometric loss.
    pub l_ph_s: &'a LossMap,
    /// Consistency mask `M`.
    pub m: &'a BinaryMask,
    /// Depth inconsistency mask `M_i`.
    pub m_i: &'a BinaryMask,
    /// Pixels where the photometric maps are defined; all pixels when `None`.
    pub valid: Option<&'a BinaryMask>,
    pub l_c: f64,
    pub l_sm: f64,
    pub l_sm_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Mean of `L_ph` over `(¬M ∧ ¬M_i)`.
    pub l_ph: f64,
    pub l_c: f64,
    pub l_sm: f64,
    /// Mean of `L_ph,s` over `¬M_i`.
    pub l_ph_s: f64,
    pub l_sm_s: f64,
    pub beta: f64,
    pub total: f64,
    pub ph_gate_pixels: usize,
    pub ph_s_gate_pixels: usize,
}

impl LossBreakdown {
    pub fn recompose(&self) -> f64 {
        self.l_ph + self.l_c + self.beta * self.l_sm + self.l_ph_s + self.beta * self.l_sm_s
    }
}

fn gated_mean(loss: &LossMap, gate: &[bool]) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for (&v, &g) in loss.data().iter().zip(gate) {
        if g {
            sum += v as f64;
            count += 1;
        }
    }
    (if count == 0 { 0.0 } else { sum / count as f64 }, count)
}

/// `((1−M)∧(1−M_i))·L_ph + L_c + β·L_sm + (1−M_i)·L_ph,s + β·L_sm,s`, with
/// each photometric term averaged over its gate.
pub fn total_loss(inputs: &LossInputs<'_>, beta: f64) -> Result<LossBreakdown> {
    let dims = inputs.l_ph.dims();
    let all = [
        inputs.l_ph_s.dims(),
        inputs.m.dims(),
        inputs.m_i.dims(),
        inputs.valid.map_or(dims, |v| v.dims()),
    ];
    if all.iter().any(|&d| d != dims) {
        return Err(Error::dim("loss inputs differ in size"));
    }
    let n = dims.0 * dims.1;
    let valid = |i: usize| inputs.valid.is_none_or(|v| v.data()[i]);
    let m = inputs.m.data();
    let m_i = inputs.m_i.data();
    let gate_ph: Vec<bool> = (0..n).map(|i| valid(i) && !m[i] && !m_i[i]).collect();
    let gate_ph_s: Vec<bool> = (0..n).map(|i| valid(i) && !m_i[i]).collect();
    let (l_ph, ph_gate_pixels) = gated_mean(inputs.l_ph, &gate_ph);
    let (l_ph_s, ph_s_gate_pixels) = gated_mean(inputs.l_ph_s, &gate_ph_s);
    let mut out = LossBreakdown {
        l_ph,
        l_c: inputs.l_c,
        l_sm: inputs.l_sm,
        l_ph_s,
        l_sm_s: inputs.l_sm_s,
        beta,
        total: 0.0,
        ph_gate_pixels,
        ph_s_gate_pixels,
    };
    out.total = out.recompose();
    Ok(out)
}
