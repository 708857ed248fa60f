//! Depth a photometrically trained network converges to on a moving object.
//!
//! Under the static-world assumption the network can only match the moved
//! point's pixel by sliding its depth along the target ray. The over-fit
//! depth is the ray depth whose static re-projection lands closest to where
//! the object actually moved.

use crate::camera::{CameraIntrinsics, ObjectMotion, RigidPose};
use crate::error::{Error, Result};

use super::search::golden_section_minimize;
use super::{backproject, project, transform_point, unit_depth_ray, Pixel, Z_EPSILON};

/// Relative bracket width at which the depth search stops.
pub const OVERFIT_REL_TOL: f64 = 1e-6;

/// The search bracket is `[true_depth / SPAN, true_depth · SPAN]`.
const BRACKET_SPAN: f64 = 10.0;

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverfitDepth {
    pub depth: f64,
    /// Pixel distance between the static re-projection at `depth` and the
    /// true moved point.
    pub residual: f64,
    /// The minimum sits on an end of the search bracket, i.e. no interior
    /// depth explains the motion.
    pub at_boundary: bool,
}

/// Motion of an object relative to the camera's own translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionDirection {
    Static,
    /// Object moves along with the camera.
    CoDirectional,
    /// Object moves against the camera.
    ContraDirectional,
    /// Object motion has no component along the camera translation.
    Perpendicular,
}

/// Classifies `motion` against the camera translation of the target→source
/// `pose`.
///
/// In the source frame the camera moves by `t` between the two frames while
/// the object moves by `-T_obj`, so the sign of `-T_obj · t` decides.
pub fn classify_motion(pose: &RigidPose, motion: &ObjectMotion) -> MotionDirection {
    if motion.is_zero() {
        return MotionDirection::Static;
    }
    let t = pose.translation();
    let dot = -motion.translation.dot(t);
    let scale = motion.translation.norm() * t.norm();
    if dot.abs() <= 1e-12 * scale || scale == 0.0 {
        MotionDirection::Perpendicular
    } else if dot > 0.0 {
        MotionDirection::CoDirectional
    } else {
        MotionDirection::ContraDirectional
    }
}

/// Searches `[true_depth/10, true_depth·10]` for the depth minimising the
/// pixel distance between the static re-projection of `pixel` and the
/// re-projection of the truly moved point.
pub fn overfit_depth(
    pixel: Pixel,
    true_depth: f64,
    pose: &RigidPose,
    k: &CameraIntrinsics,
    motion: &ObjectMotion,
) -> Result<OverfitDepth> {
    let p = backproject(pixel, true_depth, k)?;
    let moved = transform_point(&p, pose, motion);
    let target = project(&moved, k)
        .ok_or_else(|| Error::domain("moved point is not in front of the source camera"))?;

    let ray = pose.rotation() * unit_depth_ray(pixel, k);
    let t = *pose.translation();

    // Source depth is affine in d: z(d) = d·ray.z + t.z
    let mut lo = true_depth / BRACKET_SPAN;
    let mut hi = true_depth * BRACKET_SPAN;
    if ray.z > 0.0 {
        lo = lo.max((Z_EPSILON - t.z) / ray.z * (1.0 + 1e-12));
    } else if ray.z < 0.0 {
        hi = hi.min((Z_EPSILON - t.z) / ray.z * (1.0 - 1e-12));
    } else if t.z <= Z_EPSILON {
        lo = hi;
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::domain(
            "no depth in the search bracket projects in front of the source camera",
        ));
    }

    let residual = |d: f64| match project(&(ray * d + t), k) {
        Some(px) => px.distance(&target),
        None => f64::INFINITY,
    };
    let best = golden_section_minimize(residual, lo, hi, OVERFIT_REL_TOL, MAX_ITER);
    let edge = 2.0 * OVERFIT_REL_TOL * best.x;
    Ok(OverfitDepth {
        depth: best.x,
        residual: best.value,
        at_boundary: best.x - lo <= edge || hi - best.x <= edge,
    })
}
