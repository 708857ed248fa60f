//! Photometric reconstruction losses.

use crate::error::{Error, Result};
use crate::raster::{DepthMap, ImagePlane};

pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Weight of the SSIM term in the photometric error.
pub const DEFAULT_ALPHA: f64 = 0.85;

/// Single-channel, non-negative, finite per-pixel loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMap(ImagePlane);

impl LossMap {
    pub fn new(plane: ImagePlane) -> Result<Self> {
        if plane.channels() != 1 {
            return Err(Error::dim("loss maps have exactly one channel"));
        }
        if plane.data().iter().any(|&v| v < 0.0) {
            return Err(Error::domain("loss values must be non-negative"));
        }
        Ok(Self(plane))
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(ImagePlane::from_vec(height, width, 1, data)?)
    }

    pub fn plane(&self) -> &ImagePlane {
        &self.0
    }

    pub fn into_plane(self) -> ImagePlane {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn data(&self) -> &[f32] {
        self.0.data()
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.0.get(row, col, 0)
    }
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

/// 3×3 box mean with reflect padding over a single-channel f64 buffer.
fn box3(values: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for dr in -1..=1isize {
                let r = reflect(row as isize + dr, h);
                for dc in -1..=1isize {
                    let c = reflect(col as isize + dc, w);
                    acc += values[r * w + c];
                }
            }
            out[row * w + col] = acc / 9.0;
        }
    }
    out
}

fn check_pair(a: &ImagePlane, b: &ImagePlane) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::dim(format!(
            "{}x{}x{} does not match {}x{}x{}",
            a.height(),
            a.width(),
            a.channels(),
            b.height(),
            b.width(),
            b.channels()
        )));
    }
    Ok(())
}

/// Channel-averaged SSIM per pixel in f64.
fn ssim_f64(a: &ImagePlane, b: &ImagePlane) -> Vec<f64> {
    let (h, w) = a.dims();
    let channels = a.channels();
    let n = h * w;
    let mut total = vec![0.0; n];
    let mut xa = vec![0.0; n];
    let mut xb = vec![0.0; n];
    let mut aa = vec![0.0; n];
    let mut bb = vec![0.0; n];
    let mut ab = vec![0.0; n];
    for c in 0..channels {
        for i in 0..n {
            let va = a.data()[i * channels + c] as f64;
            let vb = b.data()[i * channels + c] as f64;
            xa[i] = va;
            xb[i] = vb;
            aa[i] = va * va;
            bb[i] = vb * vb;
            ab[i] = va * vb;
        }
        let mu_a = box3(&xa, h, w);
        let mu_b = box3(&xb, h, w);
        let e_aa = box3(&aa, h, w);
        let e_bb = box3(&bb, h, w);
        let e_ab = box3(&ab, h, w);
        for i in 0..n {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2);
            total[i] += num / den;
        }
    }
    total
        .into_iter()
        .map(|s| (s / channels as f64).clamp(-1.0, 1.0))
        .collect()
}

/// Per-pixel SSIM over a 3×3 reflect-padded window, averaged over channels.
/// Returns a single-channel plane with values in `[-1, 1]`.
pub fn ssim(a: &ImagePlane, b: &ImagePlane) -> Result<ImagePlane> {
    check_pair(a, b)?;
    let (h, w) = a.dims();
    ImagePlane::from_vec(h, w, 1, ssim_f64(a, b).into_iter().map(|v| v as f32).collect())
}

/// `α/2·(1 − SSIM) + (1 − α)·mean_c |target − recon|` per pixel.
pub fn photometric_error(target: &ImagePlane, recon: &ImagePlane, alpha: f64) -> Result<LossMap> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    check_pair(target, recon)?;
    let (h, w) = target.dims();
    let channels = target.channels();
    let s = ssim_f64(target, recon);
    let data = (0..h * w)
        .map(|i| {
            let t = &target.data()[i * channels..(i + 1) * channels];
            let r = &recon.data()[i * channels..(i + 1) * channels];
            let l1 = t
                .iter()
                .zip(r)
                .map(|(&x, &y)| (x as f64 - y as f64).abs())
                .sum::<f64>()
                / channels as f64;
            let pe = alpha / 2.0 * (1.0 - s[i]) + (1.0 - alpha) * l1;
            pe.max(0.0) as f32
        })
        .collect();
    LossMap::from_vec(h, w, data)
}

/// Elementwise minimum across per-source losses.
pub fn min_reprojection(losses: &[LossMap]) -> Result<LossMap> {
    let (first, rest) = losses
        .split_first()
        .ok_or_else(|| Error::domain("min_reprojection needs at least one loss map"))?;
    let mut out = first.data().to_vec();
    for l in rest {
        if l.dims() != first.dims() {
            return Err(Error::dim("loss maps differ in size"));
        }
        for (o, &v) in out.iter_mut().zip(l.data()) {
            *o = o.min(v);
        }
    }
    let (h, w) = first.dims();
    LossMap::from_vec(h, w, out)
}

/// Edge-aware smoothness of mean-normalised inverse depth.
///
/// Forward differences; the x term averages over `H × (W−1)` pairs and the y
/// term over `(H−1) × W`. Image gradients are channel-averaged absolute
/// differences.
pub fn smoothness(depth: &DepthMap, image: &ImagePlane) -> Result<f64> {
    if depth.dims() != image.dims() {
        return Err(Error::dim("depth and image sizes differ"));
    }
    if depth.valid_count() != depth.len() {
        return Err(Error::domain("smoothness needs every depth valid and > 0"));
    }
    let (h, w) = depth.dims();
    let inv: Vec<f64> = depth.data().iter().map(|&d| 1.0 / d as f64).collect();
    let mean = inv.iter().sum::<f64>() / inv.len() as f64;
    let disp: Vec<f64> = inv.iter().map(|v| v / mean).collect();
    let c = image.channels();
    let img_grad = |i: usize, j: usize| {
        let a = &image.data()[i * c..(i + 1) * c];
        let b = &image.data()[j * c..(j + 1) * c];
        a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum::<f64>() / c as f64
    };

    let mut gx = 0.0;
    for row in 0..h {
        for col in 0..w.saturating_sub(1) {
            let i = row * w + col;
            gx += (disp[i] - disp[i + 1]).abs() * (-img_grad(i, i + 1)).exp();
        }
    }
    let mut gy = 0.0;
    for row in 0..h.saturating_sub(1) {
        for col in 0..w {
            let i = row * w + col;
            gy += (disp[i] - disp[i + w]).abs() * (-img_grad(i, i + w)).exp();
        }
    }
    let nx = h * (w - 1);
    let ny = (h - 1) * w;
    let tx = if nx > 0 { gx / nx as f64 } else { 0.0 };
    let ty = if ny > 0 { gy / ny as f64 } else { 0.0 };
    Ok(tx + ty)
}
