//! Plane-sweep matching costs over linearly spaced depth hypotheses.

use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, RigidPose};
use crate::error::{Error, Result};
use crate::geometry::{bilinear_sample, warp_grid_plane};
use crate::io::{decode_pfm, encode_pfm};
use crate::raster::{BinaryMask, DepthMap, ImagePlane};

/// Number of depth hypotheses used by the reference configuration.
pub const DEFAULT_BINS: usize = 96;

/// Relative disagreement above which the consistency mask fires.
pub const DEFAULT_CONSISTENCY_RATIO: f64 = 1.0;

/// `D` depths uniformly spaced over `[d_min, d_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBins {
    d_min: f64,
    d_max: f64,
    values: Vec<f64>,
}

impl DepthBins {
    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        (self.d_max - self.d_min) / (self.values.len() - 1) as f64
    }

    /// Index of the bin closest to `depth`.
    pub fn nearest(&self, depth: f64) -> usize {
        let i = ((depth - self.d_min) / self.spacing()).round();
        i.clamp(0.0, (self.values.len() - 1) as f64) as usize
    }
}

/// `d_i = d_min + i·(d_max − d_min)/(D − 1)` for `i = 0..D`.
pub fn make_depth_bins(d_min: f64, d_max: f64, count: usize) -> Result<DepthBins> {
    if count < 2 {
        return Err(Error::domain(format!("need at least 2 depth bins, got {count}")));
    }
    if !(d_min.is_finite() && d_max.is_finite() && 0.0 < d_min && d_min < d_max) {
        return Err(Error::domain(format!(
            "depth range must satisfy 0 < d_min < d_max, got [{d_min}, {d_max}]"
        )));
    }
    let step = (d_max - d_min) / (count - 1) as f64;
    let mut values: Vec<f64> = (0..count).map(|i| d_min + i as f64 * step).collect();
    values[count - 1] = d_max;
    Ok(DepthBins { d_min, d_max, values })
}

/// How per-channel absolute differences are combined into one cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelReduction {
    /// Literal L1 norm over channels.
    #[default]
    Sum,
    Mean,
}

/// `D × H × W` matching costs. Entries whose warp left the source frame are
/// invalid and hold `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    bins: DepthBins,
    height: usize,
    width: usize,
    cost: Vec<f32>,
    valid: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostVolumeHeader {
    pub d_min: f64,
    pub d_max: f64,
    #[serde(rename = "D")]
    pub count: usize,
}

impl CostVolume {
    /// Volume from raw slices (`bin`-major). Invalid entries are forced to
    /// `+∞`; valid entries must be finite and non-negative.
    pub fn from_parts(
        bins: DepthBins,
        height: usize,
        width: usize,
        cost: Vec<f32>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = bins.count() * height * width;
        if height == 0 || width == 0 || cost.len() != n || valid.len() != n {
            return Err(Error::dim("cost volume arrays do not match D×H×W"));
        }
        let cost: Vec<f32> = cost
            .into_iter()
            .zip(&valid)
            .map(|(c, &ok)| if ok { c } else { f32::INFINITY })
            .collect();
        if cost
            .iter()
            .zip(&valid)
            .any(|(&c, &ok)| ok && !(c.is_finite() && c >= 0.0))
        {
            return Err(Error::domain("valid costs must be finite and non-negative"));
        }
        Ok(Self {
            bins,
            height,
            width,
            cost,
            valid,
        })
    }

    pub fn bins(&self) -> &DepthBins {
        &self.bins
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn costs(&self) -> &[f32] {
        &self.cost
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    /// Cost at `(bin, row, col)`, or `None` if that warp was invalid.
    pub fn get(&self, bin: usize, row: usize, col: usize) -> Option<f32> {
        let i = (bin * self.height + row) * self.width + col;
        self.valid[i].then_some(self.cost[i])
    }

    pub fn slice(&self, bin: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.cost[bin * n..(bin + 1) * n]
    }

    pub fn header(&self) -> CostVolumeHeader {
        CostVolumeHeader {
            d_min: self.bins.d_min,
            d_max: self.bins.d_max,
            count: self.bins.count(),
        }
    }

    /// True when every pixel's valid costs are identical across all bins,
    /// i.e. the volume carries no depth information.
    pub fn is_degenerate(&self) -> bool {
        let n = self.height * self.width;
        (0..n).all(|p| {
            let mut first: Option<f32> = None;
            (0..self.bins.count()).all(|b| {
                let i = b * n + p;
                if !self.valid[i] {
                    return true;
                }
                match first {
                    None => {
                        first = Some(self.cost[i]);
                        true
                    }
                    Some(c) => c == self.cost[i],
                }
            })
        })
    }

    /// Serialises as one PFM with the `D` slices stacked vertically
    /// (`D·H` rows); invalid entries are written as `+∞`.
    pub fn to_pfm(&self) -> Result<Vec<u8>> {
        encode_pfm(self.bins.count() * self.height, self.width, 1, &self.cost)
    }

    pub fn from_pfm(bytes: &[u8], header: &CostVolumeHeader) -> Result<Self> {
        let pfm = decode_pfm(bytes)?;
        if pfm.channels != 1 || header.count == 0 || pfm.height % header.count != 0 {
            return Err(Error::format("PFM stack does not match the cost volume header"));
        }
        let bins = make_depth_bins(header.d_min, header.d_max, header.count)?;
        let valid = pfm.data.iter().map(|c| c.is_finite()).collect();
        Self::from_parts(bins, pfm.height / header.count, pfm.width, pfm.data, valid)
    }
}

/// Warps `f_source` onto the target view once per depth hypothesis (a
/// fronto-parallel plane at that depth) and stores the per-pixel channel L1
/// distance to `f_target`. Intrinsics must be given at feature resolution.
pub fn build_cost_volume(
    f_target: &ImagePlane,
    f_source: &ImagePlane,
    pose: &RigidPose,
    k: &CameraIntrinsics,
    bins: &DepthBins,
    reduction: ChannelReduction,
) -> Result<CostVolume> {
    if !f_target.same_shape(f_source) {
        return Err(Error::dim("target and source features differ in shape"));
    }
    let (h, w) = f_target.dims();
    let c = f_target.channels();
    let n = h * w;
    let norm = match reduction {
        ChannelReduction::Sum => 1.0,
        ChannelReduction::Mean => 1.0 / c as f64,
    };
    let mut cost = vec![f32::INFINITY; bins.count() * n];
    let mut valid = vec![false; bins.count() * n];
    for (b, &d) in bins.values().iter().enumerate() {
        let grid = warp_grid_plane(h, w, d, pose, k)?;
        let (warped, mask) = bilinear_sample(f_source, &grid);
        for p in 0..n {
            if !mask.data()[p] {
                continue;
            }
            let t = &f_target.data()[p * c..(p + 1) * c];
            let s = &warped.data()[p * c..(p + 1) * c];
            let l1: f64 = t.iter().zip(s).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum();
            cost[b * n + p] = (l1 * norm) as f32;
            valid[b * n + p] = true;
        }
    }
    CostVolume::from_parts(bins.clone(), h, w, cost, valid)
}

/// Per-pixel depth of the cheapest valid bin; ties go to the smaller depth.
/// Pixels without any valid bin are invalid.
pub fn depth_hints(volume: &CostVolume) -> DepthMap {
    let (h, w) = volume.dims();
    let n = h * w;
    let mut data = vec![0f32; n];
    let mut valid = vec![false; n];
    for p in 0..n {
        let mut best: Option<(usize, f32)> = None;
        for b in 0..volume.bins.count() {
            let i = b * n + p;
            if volume.valid[i] && best.is_none_or(|(_, c)| volume.cost[i] < c) {
                best = Some((b, volume.cost[i]));
            }
        }
        if let Some((b, _)) = best {
            data[p] = volume.bins.values[b] as f32;
            valid[p] = true;
        }
    }
    DepthMap::from_parts(h, w, data, valid).expect("bin depths are positive")
}

/// Flags pixels where the depth hints and single-frame depth disagree:
/// `max((D_cv − D)/D, (D − D_cv)/D_cv) > ratio`. False wherever either
/// depth is invalid.
pub fn consistency_mask(d_hints: &DepthMap, d_single: &DepthMap, ratio: f64) -> Result<BinaryMask> {
    if d_hints.dims() != d_single.dims() {
        return Err(Error::dim("depth hints and single-frame depth differ in size"));
    }
    let (h, w) = d_hints.dims();
    let data = (0..h * w)
        .map(|i| match (d_hints.at(i), d_single.at(i)) {
            (Some(cv), Some(d)) => {
                let (cv, d) = (cv as f64, d as f64);
                ((cv - d) / d).max((d - cv) / cv) > ratio
            }
            _ => false,
        })
        .collect();
    BinaryMask::from_vec(h, w, data)
}
