//! Dense rasters shared by every stage of the pipeline.
//!
//! All rasters are row-major with the pixel at `(row, col)` stored at
//! `row * width + col`. Values are stored as `f32`; reductions accumulate in
//! `f64`.

use crate::error::{Error, Result};

/// Dense `height × width × channels` float raster.
///
/// Holds images (values in `[0, 1]`), feature maps and per-pixel losses.
/// Channels are interleaved: `data[(row * width + col) * channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImagePlane {
    pub fn new(height: usize, width: usize, channels: usize, fill: f32) -> Result<Self> {
        check_dims(height, width, channels)?;
        if !fill.is_finite() {
            return Err(Error::domain("fill value must be finite"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data: vec![fill; height * width * channels],
        })
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::dim(format!(
                "expected {} values for {height}x{width}x{channels}, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("raster contains non-finite values"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds a plane by evaluating `f(row, col, channel)` at every entry.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        check_dims(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for row in 0..height {
            for col in 0..width {
                for c in 0..channels {
                    data.push(f(row, col, c));
                }
            }
        }
        Self::from_vec(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f32) {
        debug_assert!(value.is_finite());
        self.data[(row * self.width + col) * self.channels + channel] = value;
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Copies out channel `c` as a single-channel plane.
    pub fn channel(&self, c: usize) -> Result<ImagePlane> {
        if c >= self.channels {
            return Err(Error::dim(format!(
                "channel {c} out of range for {} channels",
                self.channels
            )));
        }
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Self::from_vec(self.height, self.width, 1, data)
    }

    /// Copies out channels `[start, start + count)`.
    pub fn channel_slice(&self, start: usize, count: usize) -> Result<ImagePlane> {
        if count == 0 || start + count > self.channels {
            return Err(Error::dim(format!(
                "channel range {start}..{} out of range for {} channels",
                start + count,
                self.channels
            )));
        }
        let mut data = Vec::with_capacity(self.height * self.width * count);
        for px in self.data.chunks_exact(self.channels) {
            data.extend_from_slice(&px[start..start + count]);
        }
        Self::from_vec(self.height, self.width, count, data)
    }

    /// Channel-wise concatenation of planes sharing spatial dimensions.
    pub fn concat(planes: &[&ImagePlane]) -> Result<ImagePlane> {
        let first = planes
            .first()
            .ok_or_else(|| Error::domain("cannot concatenate zero planes"))?;
        let (h, w) = first.dims();
        if let Some(p) = planes.iter().find(|p| p.dims() != (h, w)) {
            return Err(Error::dim(format!(
                "concat: {}x{} does not match {h}x{w}",
                p.height, p.width
            )));
        }
        let channels: usize = planes.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(h * w * channels);
        for i in 0..h * w {
            for p in planes {
                data.extend_from_slice(&p.data[i * p.channels..(i + 1) * p.channels]);
            }
        }
        Self::from_vec(h, w, channels, data)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<ImagePlane> {
        Self::from_vec(
            self.height,
            self.width,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn same_shape(&self, other: &ImagePlane) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }
}

/// Per-pixel depth with an explicit validity channel.
///
/// Valid pixels always hold a finite depth `> 0`. Invalid pixels store `0.0`
/// and are skipped by every statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    data: Vec<f32>,
    valid: Vec<bool>,
}

impl DepthMap {
    /// Wraps raw depths; entries that are non-finite or `<= 0` become invalid.
    pub fn from_depths(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(height, width, 1)?;
        if data.len() != height * width {
            return Err(Error::dim(format!(
                "expected {} depths for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        let valid: Vec<bool> = data.iter().map(|&d| d.is_finite() && d > 0.0).collect();
        let data = data
            .into_iter()
            .zip(&valid)
            .map(|(d, &ok)| if ok { d } else { 0.0 })
            .collect();
        Ok(Self {
            height,
            width,
            data,
            valid,
        })
    }

    /// Depths with an explicit validity channel. A pixel marked valid must
    /// carry a finite positive depth.
    pub fn from_parts(height: usize, width: usize, data: Vec<f32>, valid: Vec<bool>) -> Result<Self> {
        check_dims(height, width, 1)?;
        if data.len() != height * width || valid.len() != height * width {
            return Err(Error::dim(format!(
                "depth/validity length mismatch for {height}x{width}"
            )));
        }
        if data
            .iter()
            .zip(&valid)
            .any(|(&d, &ok)| ok && !(d.is_finite() && d > 0.0))
        {
            return Err(Error::domain("valid pixels must have finite depth > 0"));
        }
        let data = data
            .into_iter()
            .zip(&valid)
            .map(|(d, &ok)| if ok { d } else { 0.0 })
            .collect();
        Ok(Self {
            height,
            width,
            data,
            valid,
        })
    }

    pub fn constant(height: usize, width: usize, depth: f32) -> Result<Self> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::domain("constant depth must be finite and > 0"));
        }
        Self::from_depths(height, width, vec![depth; height * width])
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Raw storage; invalid pixels read as `0.0`.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn validity_mask(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.valid.clone(),
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f32> {
        self.at(row * self.width + col)
    }

    #[inline]
    pub fn at(&self, index: usize) -> Option<f32> {
        if self.valid[index] {
            Some(self.data[index])
        } else {
            None
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Multiplies every valid depth by `factor` (which must be positive).
    pub fn scaled(&self, factor: f64) -> Result<DepthMap> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::domain("scale factor must be finite and > 0"));
        }
        let data = self
            .data
            .iter()
            .map(|&d| (d as f64 * factor) as f32)
            .collect();
        Self::from_parts(self.height, self.width, data, self.valid.clone())
    }

    /// Replaces invalid pixels with `fill`, producing an all-valid map.
    pub fn filled(&self, fill: f32) -> Result<DepthMap> {
        let data = self
            .data
            .iter()
            .zip(&self.valid)
            .map(|(&d, &ok)| if ok { d } else { fill })
            .collect();
        Self::from_depths(self.height, self.width, data)
    }

    /// Restricts validity to pixels where `mask` is true.
    pub fn masked(&self, mask: &BinaryMask) -> Result<DepthMap> {
        if mask.dims() != self.dims() {
            return Err(Error::dim("mask does not match depth map"));
        }
        let valid = self
            .valid
            .iter()
            .zip(mask.data())
            .map(|(&a, &b)| a && b)
            .collect();
        Self::from_parts(self.height, self.width, self.data.clone(), valid)
    }

    /// Valid depths in raster order.
    pub fn valid_values(&self) -> impl Iterator<Item = f32> + '_ {
        self.data
            .iter()
            .zip(&self.valid)
            .filter_map(|(&d, &ok)| ok.then_some(d))
    }

    pub fn max_valid(&self) -> Option<f32> {
        self.valid_values().fold(None, |acc, d| Some(acc.map_or(d, |m: f32| m.max(d))))
    }

    pub fn min_valid(&self) -> Option<f32> {
        self.valid_values().fold(None, |acc, d| Some(acc.map_or(d, |m: f32| m.min(d))))
    }
}

/// Per-pixel boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, fill: bool) -> Result<Self> {
        check_dims(height, width, 1)?;
        Ok(Self {
            height,
            width,
            data: vec![fill; height * width],
        })
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(height, width, 1)?;
        if data.len() != height * width {
            return Err(Error::dim(format!(
                "expected {} mask values for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(height, width, 1)?;
        let mut data = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Ok(Self {
            height,
            width,
            data,
        })
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

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        if self.dims() != other.dims() {
            return Err(Error::dim(format!(
                "mask {}x{} does not match {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(BinaryMask {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// True where every pixel in the 3×3 neighbourhood (clipped at the
    /// border) is true.
    pub fn eroded(&self) -> BinaryMask {
        let (h, w) = self.dims();
        let mut data = vec![false; h * w];
        for row in 0..h {
            for col in 0..w {
                let mut all = true;
                for r in row.saturating_sub(1)..=(row + 1).min(h - 1) {
                    for c in col.saturating_sub(1)..=(col + 1).min(w - 1) {
                        all &= self.data[r * w + c];
                    }
                }
                data[row * w + col] = all;
            }
        }
        BinaryMask {
            height: h,
            width: w,
            data,
        }
    }
}

fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::dim(format!(
            "raster dimensions must be positive, got {height}x{width}x{channels}"
        )));
    }
    Ok(())
}
