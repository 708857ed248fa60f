//! Pinhole intrinsics, rigid poses and per-object motion.
//!
//! Camera frame: x right, y down, z forward. Pixel centres sit at integer
//! coordinates with the origin at the top-left pixel.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics")]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Deserialize)]
struct RawIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

impl TryFrom<RawIntrinsics> for CameraIntrinsics {
    type Error = Error;

    fn try_from(raw: RawIntrinsics) -> Result<Self> {
        CameraIntrinsics::new(raw.fx, raw.fy, raw.cx, raw.cy)
    }
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return Err(Error::domain(format!(
                "focal lengths must be finite and positive, got fx={fx} fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::domain("principal point must be finite"));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// Square-pixel camera centred on a `height × width` raster.
    pub fn centered(height: usize, width: usize, focal: f64) -> Result<Self> {
        Self::new(
            focal,
            focal,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
        )
    }

    /// Intrinsics for a raster resampled by `factor` (e.g. 0.25 for a
    /// quarter-resolution feature map), keeping pixel centres aligned.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.fx * factor,
            self.fy * factor,
            (self.cx + 0.5) * factor - 0.5,
            (self.cy + 0.5) * factor - 0.5,
        )
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }
}

/// Rigid transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose", into = "RawPose")]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl TryFrom<RawPose> for RigidPose {
    type Error = Error;

    fn try_from(raw: RawPose) -> Result<Self> {
        let r = &raw.rotation;
        RigidPose::new(
            Matrix3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]),
            Vector3::from(raw.translation),
        )
    }
}

impl From<RigidPose> for RawPose {
    fn from(pose: RigidPose) -> Self {
        let m = &pose.rotation;
        RawPose {
            rotation: [
                m[(0, 0)],
                m[(0, 1)],
                m[(0, 2)],
                m[(1, 0)],
                m[(1, 1)],
                m[(1, 2)],
                m[(2, 0)],
                m[(2, 1)],
                m[(2, 2)],
            ],
            translation: [pose.translation.x, pose.translation.y, pose.translation.z],
        }
    }
}

impl Default for RigidPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("pose contains non-finite entries"));
        }
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.abs().max() > ORTHONORMAL_TOL {
            return Err(Error::domain("rotation is not orthonormal"));
        }
        if (rotation.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::domain("rotation determinant is not +1"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation of `angle` radians about `axis`, followed by `translation`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Result<Self> {
        if axis.norm() == 0.0 {
            if angle == 0.0 {
                return Ok(Self::from_translation(translation));
            }
            return Err(Error::domain("rotation axis must be nonzero"));
        }
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        Self::new(*rot.matrix(), translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &RigidPose) -> Self {
        Self {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    /// Largest elementwise deviation of the 3×4 `[R | t]` from `other`.
    pub fn max_abs_diff(&self, other: &RigidPose) -> f64 {
        let dr = (self.rotation - other.rotation).abs().max();
        let dt = (self.translation - other.translation).abs().max();
        dr.max(dt)
    }
}

/// Translation of a moving object between the two frames, expressed in the
/// source-view frame and added after the rigid camera transform.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectMotion {
    pub translation: Vector3<f64>,
}

impl ObjectMotion {
    pub fn new(translation: Vector3<f64>) -> Result<Self> {
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("object motion must be finite"));
        }
        Ok(Self { translation })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.translation == Vector3::zeros()
    }
}
