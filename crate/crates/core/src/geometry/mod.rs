//! Pinhole re-projection, inverse warping and the geometric solvers built on
//! top of it.

mod ground;
mod overfit;
mod search;

pub use ground::{fit_ground_plane, GroundPlane, RansacConfig};
pub use overfit::{classify_motion, overfit_depth, MotionDirection, OverfitDepth, OVERFIT_REL_TOL};
pub use search::{golden_section_minimize, Minimum};

use nalgebra::Vector3;

use crate::camera::{CameraIntrinsics, ObjectMotion, RigidPose};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, DepthMap, ImagePlane};

/// A point is in front of the camera when its depth exceeds this.
pub const Z_EPSILON: f64 = 1e-6;

pub type Point3 = Vector3<f64>;

/// Sub-pixel image coordinate: `u` rightward (column), `v` downward (row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// `depth · K⁻¹ · [u, v, 1]ᵀ`.
pub fn backproject(pixel: Pixel, depth: f64, k: &CameraIntrinsics) -> Result<Point3> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::domain(format!("backprojection depth must be > 0, got {depth}")));
    }
    Ok(unit_depth_ray(pixel, k) * depth)
}

/// Ray through `pixel` scaled to unit depth (`z = 1`).
#[inline]
pub fn unit_depth_ray(pixel: Pixel, k: &CameraIntrinsics) -> Vector3<f64> {
    Vector3::new((pixel.u - k.cx) / k.fx, (pixel.v - k.cy) / k.fy, 1.0)
}

/// `R·p + t + T_obj`.
#[inline]
pub fn transform_point(p: &Point3, pose: &RigidPose, motion: &ObjectMotion) -> Point3 {
    pose.apply(p) + motion.translation
}

/// Perspective projection; `None` when the point is not in front of the
/// camera.
#[inline]
pub fn project(p: &Point3, k: &CameraIntrinsics) -> Option<Pixel> {
    if p.z.is_nan() || p.z <= Z_EPSILON {
        return None;
    }
    Some(Pixel {
        u: k.fx * p.x / p.z + k.cx,
        v: k.fy * p.y / p.z + k.cy,
    })
}

/// Per-pixel source coordinates for an inverse warp.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceGrid {
    height: usize,
    width: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    /// Depth of the transformed point in the source camera.
    z: Vec<f64>,
    valid: Vec<bool>,
}

impl CorrespondenceGrid {
    /// Grid mapping every pixel onto itself.
    pub fn identity(height: usize, width: usize) -> Self {
        let n = height * width;
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for row in 0..height {
            for col in 0..width {
                u.push(col as f64);
                v.push(row as f64);
            }
        }
        Self {
            height,
            width,
            u,
            v,
            z: vec![1.0; n],
            valid: vec![true; n],
        }
    }

    /// Grid from explicit coordinates; a cell is valid when its flag is set
    /// and its coordinates are finite.
    pub fn from_coords(height: usize, width: usize, u: Vec<f64>, v: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = height * width;
        if n == 0 || u.len() != n || v.len() != n || valid.len() != n {
            return Err(Error::dim("grid coordinate arrays do not match dimensions"));
        }
        let valid = valid
            .iter()
            .zip(u.iter().zip(&v))
            .map(|(&ok, (a, b))| ok && a.is_finite() && b.is_finite())
            .collect();
        Ok(Self {
            height,
            width,
            u,
            v,
            z: vec![1.0; n],
            valid,
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

    /// Source coordinate of the pixel at `(row, col)`, if valid.
    pub fn get(&self, row: usize, col: usize) -> Option<Pixel> {
        let i = row * self.width + col;
        self.valid[i].then(|| Pixel::new(self.u[i], self.v[i]))
    }

    pub fn source_depth(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.width + col;
        self.valid[i].then_some(self.z[i])
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn validity_mask(&self) -> BinaryMask {
        BinaryMask::from_vec(self.height, self.width, self.valid.clone())
            .expect("grid dimensions are positive")
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Coordinates within `SNAP_TOL` px of an integer are rounded to it, so
/// identity warps sample pixel centres exactly.
const SNAP_TOL: f64 = 1e-9;

#[inline]
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP_TOL {
        r
    } else {
        x
    }
}

fn build_grid(
    height: usize,
    width: usize,
    depth_at: impl Fn(usize) -> Option<f64>,
    pose: &RigidPose,
    k: &CameraIntrinsics,
) -> CorrespondenceGrid {
    let n = height * width;
    let (max_u, max_v) = ((width - 1) as f64, (height - 1) as f64);
    let mut grid = CorrespondenceGrid {
        height,
        width,
        u: vec![0.0; n],
        v: vec![0.0; n],
        z: vec![0.0; n],
        valid: vec![false; n],
    };
    let zero = ObjectMotion::zero();
    for row in 0..height {
        for col in 0..width {
            let i = row * width + col;
            let Some(d) = depth_at(i) else { continue };
            let p = unit_depth_ray(Pixel::new(col as f64, row as f64), k) * d;
            let q = transform_point(&p, pose, &zero);
            if let Some(px) = project(&q, k) {
                let (u, v) = (snap(px.u), snap(px.v));
                grid.u[i] = u;
                grid.v[i] = v;
                grid.z[i] = q.z;
                grid.valid[i] = (0.0..=max_u).contains(&u) && (0.0..=max_v).contains(&v);
            }
        }
    }
    grid
}

/// Source-view coordinates of every target pixel under `depth` and the
/// target→source `pose`. Source and target share `depth`'s dimensions.
pub fn warp_grid(depth: &DepthMap, pose: &RigidPose, k: &CameraIntrinsics) -> CorrespondenceGrid {
    build_grid(depth.height(), depth.width(), |i| depth.at(i).map(f64::from), pose, k)
}

/// Warp grid for a fronto-parallel plane at constant `depth`.
pub fn warp_grid_plane(
    height: usize,
    width: usize,
    depth: f64,
    pose: &RigidPose,
    k: &CameraIntrinsics,
) -> Result<CorrespondenceGrid> {
    if height == 0 || width == 0 {
        return Err(Error::dim("plane warp needs positive dimensions"));
    }
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::domain("plane depth must be > 0"));
    }
    Ok(build_grid(height, width, |_| Some(depth), pose, k))
}

/// Bilinear interpolation of `source` at the grid coordinates. Cells that are
/// invalid or fall outside `source` produce 0 with a false mask entry.
pub fn bilinear_sample(source: &ImagePlane, grid: &CorrespondenceGrid) -> (ImagePlane, BinaryMask) {
    let (h, w) = grid.dims();
    let c = source.channels();
    let (sh, sw) = source.dims();
    let (max_u, max_v) = ((sw - 1) as f64, (sh - 1) as f64);
    let mut out = vec![0f32; h * w * c];
    let mut mask = vec![false; h * w];
    for i in 0..h * w {
        if !grid.valid[i] {
            continue;
        }
        let (u, v) = (grid.u[i], grid.v[i]);
        if !((0.0..=max_u).contains(&u) && (0.0..=max_v).contains(&v)) {
            continue;
        }
        let x0 = u.floor() as usize;
        let y0 = v.floor() as usize;
        let x1 = (x0 + 1).min(sw - 1);
        let y1 = (y0 + 1).min(sh - 1);
        let ax = u - x0 as f64;
        let ay = v - y0 as f64;
        let w00 = (1.0 - ax) * (1.0 - ay);
        let w01 = ax * (1.0 - ay);
        let w10 = (1.0 - ax) * ay;
        let w11 = ax * ay;
        for ch in 0..c {
            let val = w00 * source.get(y0, x0, ch) as f64
                + w01 * source.get(y0, x1, ch) as f64
                + w10 * source.get(y1, x0, ch) as f64
                + w11 * source.get(y1, x1, ch) as f64;
            out[i * c + ch] = val as f32;
        }
        mask[i] = true;
    }
    (
        ImagePlane::from_vec(h, w, c, out).expect("grid dimensions are positive"),
        BinaryMask::from_vec(h, w, mask).expect("grid dimensions are positive"),
    )
}

/// Reconstructs the target view from `source` using the target depth and
/// the target→source pose.
pub fn inverse_warp(
    source: &ImagePlane,
    depth: &DepthMap,
    pose: &RigidPose,
    k: &CameraIntrinsics,
) -> Result<(ImagePlane, BinaryMask)> {
    if source.dims() != depth.dims() {
        return Err(Error::dim(format!(
            "source image {}x{} does not match depth {}x{}",
            source.height(),
            source.width(),
            depth.height(),
            depth.width()
        )));
    }
    Ok(bilinear_sample(source, &warp_grid(depth, pose, k)))
}
