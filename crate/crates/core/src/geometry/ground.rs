//! RANSAC plane fit over the lower part of a depth map.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::raster::DepthMap;

use super::{unit_depth_ray, Pixel, Point3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Inlier distance as a fraction of the sampled region's median depth.
    pub threshold_fraction: f64,
    pub min_inlier_ratio: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            threshold_fraction: 0.01,
            min_inlier_ratio: 0.2,
        }
    }
}

/// Plane `normal · p + offset = 0` in the camera frame, with the normal
/// oriented along +y (towards the ground in a y-down camera).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane {
    pub normal: Vector3<f64>,
    pub offset: f64,
    /// Distance of the camera centre from the plane.
    pub camera_height: f64,
    pub inlier_ratio: f64,
}

impl GroundPlane {
    /// Plane `y = height` below a level camera.
    pub fn level(height: f64) -> Result<Self> {
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::domain("camera height must be > 0"));
        }
        Ok(Self {
            normal: Vector3::y(),
            offset: -height,
            camera_height: height,
            inlier_ratio: 1.0,
        })
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        (self.normal.dot(p) + self.offset).abs()
    }
}

fn plane_through(a: &Point3, b: &Point3, c: &Point3) -> Option<(Vector3<f64>, f64)> {
    let n = (b - a).cross(&(c - a));
    let norm = n.norm();
    if norm.is_nan() || norm <= 1e-12 {
        return None;
    }
    let n = n / norm;
    Some((n, -n.dot(a)))
}

fn least_squares_plane(points: &[Point3]) -> Option<(Vector3<f64>, f64)> {
    if points.len() < 3 {
        return None;
    }
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
    let n: Vector3<f64> = eig.eigenvectors.column(idx).into_owned();
    let n = n.normalize();
    Some((n, -n.dot(&centroid)))
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    values.sort_by(|a, b| a.total_cmp(b));
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fits the ground plane to back-projected pixels from the bottom
/// `sample_region` fraction of the rows, using the default RANSAC settings.
pub fn fit_ground_plane<R: Rng + ?Sized>(
    depth: &DepthMap,
    k: &CameraIntrinsics,
    sample_region: f64,
    rng: &mut R,
) -> Result<GroundPlane> {
    fit_ground_plane_with(depth, k, sample_region, &RansacConfig::default(), rng)
}

pub fn fit_ground_plane_with<R: Rng + ?Sized>(
    depth: &DepthMap,
    k: &CameraIntrinsics,
    sample_region: f64,
    config: &RansacConfig,
    rng: &mut R,
) -> Result<GroundPlane> {
    if !(sample_region > 0.0 && sample_region <= 1.0) {
        return Err(Error::domain("sample region must be a fraction in (0, 1]"));
    }
    let (h, w) = depth.dims();
    let first_row = h - ((h as f64 * sample_region).ceil() as usize).clamp(1, h);
    let mut points = Vec::new();
    let mut depths = Vec::new();
    for row in first_row..h {
        for col in 0..w {
            if let Some(d) = depth.get(row, col) {
                let d = d as f64;
                points.push(unit_depth_ray(Pixel::new(col as f64, row as f64), k) * d);
                depths.push(d);
            }
        }
    }
    if points.len() < 3 {
        return Err(Error::FitFailure(format!(
            "{} valid pixels in the sampled region, need at least 3",
            points.len()
        )));
    }
    let threshold = config.threshold_fraction * median(&mut depths);
    let n = points.len();

    let count_inliers = |normal: &Vector3<f64>, offset: f64| {
        points
            .iter()
            .filter(|p| (normal.dot(p) + offset).abs() < threshold)
            .count()
    };

    let mut best: Option<(Vector3<f64>, f64, usize)> = None;
    for _ in 0..config.iterations {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let l = rng.random_range(0..n);
        if i == j || j == l || i == l {
            continue;
        }
        let Some((normal, offset)) = plane_through(&points[i], &points[j], &points[l]) else {
            continue;
        };
        let count = count_inliers(&normal, offset);
        if best.is_none_or(|b| count > b.2) {
            best = Some((normal, offset, count));
        }
    }
    let (normal, offset, _) = best.ok_or_else(|| Error::FitFailure("all samples were degenerate".into()))?;

    let inliers: Vec<Point3> = points
        .iter()
        .filter(|p| (normal.dot(p) + offset).abs() < threshold)
        .copied()
        .collect();
    let (mut normal, mut offset) = least_squares_plane(&inliers).unwrap_or((normal, offset));
    if normal.y < 0.0 {
        normal = -normal;
        offset = -offset;
    }
    let inlier_ratio = count_inliers(&normal, offset) as f64 / n as f64;
    if inlier_ratio < config.min_inlier_ratio {
        return Err(Error::FitFailure(format!(
            "inlier ratio {inlier_ratio:.3} below {}",
            config.min_inlier_ratio
        )));
    }
    let camera_height = offset.abs();
    if !(camera_height.is_finite() && camera_height > 0.0) {
        return Err(Error::FitFailure("plane passes through the camera centre".into()));
    }
    Ok(GroundPlane {
        normal,
        offset,
        camera_height,
        inlier_ratio,
    })
}
