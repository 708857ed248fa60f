//! Depth-inconsistency masks for dynamic objects.
//!
//! An over-fitting multi-frame depth `D_o` inflates depth on objects moving
//! with the camera and shrinks it on objects moving against it. After median
//! alignment against a robust reference depth `D_r`, large ratios flag
//! dynamic pixels, and a ground-height band around the camera suppresses
//! false detections away from the road surface.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::geometry::{fit_ground_plane, GroundPlane};
use crate::raster::{BinaryMask, DepthMap};
use crate::stats::joint_medians;

pub const DEFAULT_CO_THRESHOLD: f64 = 2.0;
pub const DEFAULT_CON_THRESHOLD: f64 = 0.85;
/// Bottom fraction of the image sampled for the ground-plane fit.
pub const DEFAULT_GROUND_REGION: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDepth {
    pub depth: DepthMap,
    pub scale: f64,
    pub median_over: f64,
    pub median_ref: f64,
}

/// Scales `d_over` by `median(d_ref) / median(d_over)`, medians taken over
/// jointly valid pixels.
pub fn median_align(d_over: &DepthMap, d_ref: &DepthMap) -> Result<AlignedDepth> {
    let (median_over, median_ref) = joint_medians(d_over, d_ref, None)?;
    let scale = median_ref / median_over;
    Ok(AlignedDepth {
        depth: d_over.scaled(scale)?,
        scale,
        median_over,
        median_ref,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskThresholds {
    pub co: f64,
    pub con: f64,
}

impl Default for MaskThresholds {
    fn default() -> Self {
        Self {
            co: DEFAULT_CO_THRESHOLD,
            con: DEFAULT_CON_THRESHOLD,
        }
    }
}

impl MaskThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.co.is_finite() && self.co > 1.0) {
            return Err(Error::domain(format!("co-directional threshold must exceed 1, got {}", self.co)));
        }
        if !(self.con.is_finite() && self.con > 0.0 && self.con < 1.0) {
            return Err(Error::domain(format!(
                "contra-directional threshold must lie in (0, 1), got {}",
                self.con
            )));
        }
        Ok(())
    }
}

/// `(M_co, M_con)`: aligned depth above `co·D_r`, and below `con·D_r`.
/// Both are false where either depth is invalid.
pub fn directional_masks(
    d_over_aligned: &DepthMap,
    d_ref: &DepthMap,
    thresholds: &MaskThresholds,
) -> Result<(BinaryMask, BinaryMask)> {
    thresholds.validate()?;
    if d_over_aligned.dims() != d_ref.dims() {
        return Err(Error::dim("aligned and reference depth differ in size"));
    }
    let (h, w) = d_ref.dims();
    let mut co = vec![false; h * w];
    let mut con = vec![false; h * w];
    for i in 0..h * w {
        if let (Some(o), Some(r)) = (d_over_aligned.at(i), d_ref.at(i)) {
            let (o, r) = (o as f64, r as f64);
            co[i] = o > thresholds.co * r;
            con[i] = o < thresholds.con * r;
        }
    }
    Ok((BinaryMask::from_vec(h, w, co)?, BinaryMask::from_vec(h, w, con)?))
}

/// True where the camera-frame height `Ŷ` of the reference-depth point lies
/// strictly inside `(−y_g, y_g)`.
pub fn ground_mask(d_ref: &DepthMap, k: &CameraIntrinsics, plane: &GroundPlane) -> BinaryMask {
    let y_g = plane.camera_height;
    let (h, w) = d_ref.dims();
    BinaryMask::from_fn(h, w, |row, col| match d_ref.get(row, col) {
        Some(d) => {
            let y = (row as f64 - k.cy) / k.fy * d as f64;
            -y_g < y && y < y_g
        }
        None => false,
    })
    .expect("depth map dimensions are positive")
}

/// `(M_co OR M_con) AND M_ground`.
pub fn inconsistency_mask(m_co: &BinaryMask, m_con: &BinaryMask, m_ground: &BinaryMask) -> Result<BinaryMask> {
    m_co.or(m_con)?.and(m_ground)
}

/// The four masks, with `m_i` always equal to `(m_co ∨ m_con) ∧ m_ground`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InconsistencyMasks {
    m_co: BinaryMask,
    m_con: BinaryMask,
    m_ground: BinaryMask,
    m_i: BinaryMask,
}

impl InconsistencyMasks {
    pub fn compose(m_co: BinaryMask, m_con: BinaryMask, m_ground: BinaryMask) -> Result<Self> {
        let m_i = inconsistency_mask(&m_co, &m_con, &m_ground)?;
        Ok(Self {
            m_co,
            m_con,
            m_ground,
            m_i,
        })
    }

    pub fn m_co(&self) -> &BinaryMask {
        &self.m_co
    }

    pub fn m_con(&self) -> &BinaryMask {
        &self.m_con
    }

    pub fn m_ground(&self) -> &BinaryMask {
        &self.m_ground
    }

    pub fn m_i(&self) -> &BinaryMask {
        &self.m_i
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskConfig {
    pub thresholds: MaskThresholds,
    pub ground_region: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            thresholds: MaskThresholds::default(),
            ground_region: DEFAULT_GROUND_REGION,
        }
    }
}

/// Every intermediate of the mask pipeline.
#[derive(Debug, Clone)]
pub struct MaskReport {
    pub masks: InconsistencyMasks,
    pub aligned: AlignedDepth,
    pub ground: Option<GroundPlane>,
    /// Why the ground fit failed, when it did. The ground mask is then
    /// all-true and `m_i` is driven by the depth ratios alone.
    pub ground_fit_error: Option<String>,
    pub thresholds: MaskThresholds,
}

/// JSON record written next to the masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskProvenance {
    pub y_g: Option<f64>,
    pub ground_inlier_ratio: Option<f64>,
    pub median_over: f64,
    pub median_ref: f64,
    pub scale: f64,
    pub thresholds: MaskThresholds,
    pub ground_fit_ok: bool,
    pub ground_fit_error: Option<String>,
    pub m_co_pixels: usize,
    pub m_con_pixels: usize,
    pub m_ground_pixels: usize,
    pub m_i_pixels: usize,
}

impl MaskReport {
    pub fn ground_fit_ok(&self) -> bool {
        self.ground.is_some()
    }

    pub fn provenance(&self) -> MaskProvenance {
        MaskProvenance {
            y_g: self.ground.map(|g| g.camera_height),
            ground_inlier_ratio: self.ground.map(|g| g.inlier_ratio),
            median_over: self.aligned.median_over,
            median_ref: self.aligned.median_ref,
            scale: self.aligned.scale,
            thresholds: self.thresholds,
            ground_fit_ok: self.ground_fit_ok(),
            ground_fit_error: self.ground_fit_error.clone(),
            m_co_pixels: self.masks.m_co.count(),
            m_con_pixels: self.masks.m_con.count(),
            m_ground_pixels: self.masks.m_ground.count(),
            m_i_pixels: self.masks.m_i.count(),
        }
    }
}

/// median alignment → directional masks → ground fit on `d_ref` → ground
/// band → composition.
pub fn generate_masks<R: Rng + ?Sized>(
    d_over: &DepthMap,
    d_ref: &DepthMap,
    k: &CameraIntrinsics,
    config: &MaskConfig,
    rng: &mut R,
) -> Result<MaskReport> {
    config.thresholds.validate()?;
    let aligned = median_align(d_over, d_ref)?;
    let (m_co, m_con) = directional_masks(&aligned.depth, d_ref, &config.thresholds)?;
    let (ground, ground_fit_error, m_ground) = match fit_ground_plane(d_ref, k, config.ground_region, rng) {
        Ok(plane) => (Some(plane), None, ground_mask(d_ref, k, &plane)),
        Err(e @ Error::FitFailure(_)) => {
            let (h, w) = d_ref.dims();
            (None, Some(e.to_string()), BinaryMask::new(h, w, true)?)
        }
        Err(e) => return Err(e),
    };
    Ok(MaskReport {
        masks: InconsistencyMasks::compose(m_co, m_con, m_ground)?,
        aligned,
        ground,
        ground_fit_error,
        thresholds: config.thresholds,
    })
}
