//! Ray-cast synthetic scenes with exact depth, used as ground truth.
//!
//! The world frame is the target camera at time 0 (x right, y down, z
//! forward). The ground is the plane `y = ground_height`; an optional
//! backdrop wall closes the scene at `z = backdrop_depth`. Boxes are
//! axis-aligned and translate by `motion` each frame.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, ObjectMotion, RigidPose};
use crate::error::{Error, Result};
use crate::geometry::{overfit_depth, unit_depth_ray, Pixel, Point3, Z_EPSILON};
use crate::raster::{BinaryMask, DepthMap, ImagePlane};

pub const RENDER_CHANNELS: usize = 3;
/// Over-fit solutions with a larger re-projection residual are treated as
/// ill-posed.
pub const MAX_OVERFIT_RESIDUAL_PX: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub center: [f64; 3],
    pub size: [f64; 3],
    /// World-frame displacement per frame.
    #[serde(default)]
    pub motion: ObjectMotion,
    #[serde(default)]
    pub texture_seed: u64,
}

impl BoxSpec {
    pub fn new(center: [f64; 3], size: [f64; 3], velocity: [f64; 3], texture_seed: u64) -> Self {
        Self {
            center,
            size,
            motion: ObjectMotion {
                translation: Vector3::from(velocity),
            },
            texture_seed,
        }
    }

    fn bounds(&self, time: f64) -> (Point3, Point3) {
        let c = Vector3::from(self.center) + self.motion.translation * time;
        let half = Vector3::from(self.size) * 0.5;
        (c - half, c + half)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub ground_height: f64,
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
    pub texture_frequency: f64,
    #[serde(default)]
    pub backdrop_depth: Option<f64>,
    /// Seed for the ground and backdrop texture. They share it so colour is
    /// continuous where they meet.
    #[serde(default)]
    pub texture_seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ground_height.is_finite() && self.ground_height > 0.0) {
            return Err(Error::domain("ground_height must be > 0"));
        }
        if !(self.texture_frequency.is_finite() && self.texture_frequency > 0.0) {
            return Err(Error::domain("texture_frequency must be > 0"));
        }
        if let Some(z) = self.backdrop_depth {
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::domain("backdrop_depth must be > 0"));
            }
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if b.size.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(Error::domain(format!("box {i} must have positive size")));
            }
            if b.center.iter().chain(b.motion.translation.iter()).any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("box {i} has non-finite geometry")));
            }
        }
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        self.boxes.iter().all(|b| b.motion.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub image: ImagePlane,
    pub depth: DepthMap,
    /// `0` for ground, backdrop and sky; `k` for box `k - 1`.
    pub object_id: Vec<u32>,
}

impl RenderedFrame {
    pub fn object_mask(&self, id: u32) -> BinaryMask {
        let (h, w) = self.depth.dims();
        BinaryMask::from_vec(h, w, self.object_id.iter().map(|&o| o == id).collect())
            .expect("object ids match the raster size")
    }

    pub fn dynamic_mask(&self, scene: &SceneSpec) -> BinaryMask {
        let (h, w) = self.depth.dims();
        let data = self
            .object_id
            .iter()
            .map(|&o| o > 0 && !scene.boxes[o as usize - 1].motion.is_zero())
            .collect();
        BinaryMask::from_vec(h, w, data).expect("object ids match the raster size")
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn lattice(ix: i64, iy: i64, iz: i64, seed: u64) -> f64 {
    let mut h = splitmix(seed);
    for v in [ix, iy, iz] {
        h = splitmix(h ^ v as u64);
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Smooth 3D value noise in `[0, 1]`; quintic interpolation keeps it `C²`.
pub fn value_noise(p: &Point3, seed: u64) -> f64 {
    let (fx, fy, fz) = (p.x.floor(), p.y.floor(), p.z.floor());
    let (ix, iy, iz) = (fx as i64, fy as i64, fz as i64);
    let (tx, ty, tz) = (fade(p.x - fx), fade(p.y - fy), fade(p.z - fz));
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let mut yz = [0.0; 4];
    for (n, (dy, dz)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
        yz[n] = lerp(
            lattice(ix, iy + dy, iz + dz, seed),
            lattice(ix + 1, iy + dy, iz + dz, seed),
            tx,
        );
    }
    lerp(lerp(yz[0], yz[1], ty), lerp(yz[2], yz[3], ty), tz)
}

/// Colour of the surface point `p` (in the surface's own frame).
pub fn texture(p: &Point3, frequency: f64, seed: u64) -> [f32; RENDER_CHANNELS] {
    let q = p * frequency;
    std::array::from_fn(|c| {
        let s = splitmix(seed.wrapping_add(c as u64 * 0x1000));
        (0.7 * value_noise(&q, s) + 0.3 * value_noise(&(q * 2.0), s ^ 0xABCD)) as f32
    })
}

struct Hit {
    depth: f64,
    id: u32,
    /// Texture coordinate: world point, shifted into the box frame for boxes.
    local: Point3,
    seed: u64,
}

fn ray_box(origin: &Point3, dir: &Point3, lo: &Point3, hi: &Point3) -> Option<f64> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < lo[a] || origin[a] > hi[a] {
                return None;
            }
            continue;
        }
        let (mut near, mut far) = ((lo[a] - origin[a]) / dir[a], (hi[a] - origin[a]) / dir[a]);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
    }
    (t0 <= t1 && t0 > Z_EPSILON).then_some(t0)
}

fn cast(scene: &SceneSpec, origin: &Point3, dir: &Point3, time: f64) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let mut offer = |hit: Hit| {
        if best.as_ref().is_none_or(|b| hit.depth < b.depth) {
            best = Some(hit);
        }
    };
    if dir.y != 0.0 {
        let s = (scene.ground_height - origin.y) / dir.y;
        if s > Z_EPSILON {
            offer(Hit {
                depth: s,
                id: 0,
                local: origin + dir * s,
                seed: scene.texture_seed,
            });
        }
    }
    if let (Some(z), true) = (scene.backdrop_depth, dir.z != 0.0) {
        let s = (z - origin.z) / dir.z;
        if s > Z_EPSILON {
            offer(Hit {
                depth: s,
                id: 0,
                local: origin + dir * s,
                seed: scene.texture_seed,
            });
        }
    }
    for (k, b) in scene.boxes.iter().enumerate() {
        let (lo, hi) = b.bounds(time);
        if let Some(s) = ray_box(origin, dir, &lo, &hi) {
            offer(Hit {
                depth: s,
                id: k as u32 + 1,
                local: origin + dir * s - b.motion.translation * time,
                seed: b.texture_seed,
            });
        }
    }
    best
}

/// Renders `scene` at `time` through a camera whose world→camera transform is
/// `pose`. Depth is the camera-frame `z` of the nearest hit; rays that hit
/// nothing are invalid with zero colour.
pub fn render(
    scene: &SceneSpec,
    pose: &RigidPose,
    k: &CameraIntrinsics,
    height: usize,
    width: usize,
    time: f64,
) -> Result<RenderedFrame> {
    scene.validate()?;
    let rt = pose.rotation().transpose();
    let origin = -(rt * pose.translation());
    let n = height * width;
    let mut image = vec![0f32; n * RENDER_CHANNELS];
    let mut depth = vec![0f32; n];
    let mut valid = vec![false; n];
    let mut object_id = vec![0u32; n];
    for row in 0..height {
        for col in 0..width {
            let i = row * width + col;
            // z = 1 in the camera frame, so the ray parameter is the depth
            let dir = rt * unit_depth_ray(Pixel::new(col as f64, row as f64), k);
            if let Some(hit) = cast(scene, &origin, &dir, time) {
                let d = hit.depth as f32;
                if d.is_finite() && d > 0.0 {
                    depth[i] = d;
                    valid[i] = true;
                    object_id[i] = hit.id;
                    image[i * RENDER_CHANNELS..(i + 1) * RENDER_CHANNELS]
                        .copy_from_slice(&texture(&hit.local, scene.texture_frequency, hit.seed));
                }
            }
        }
    }
    Ok(RenderedFrame {
        image: ImagePlane::from_vec(height, width, RENDER_CHANNELS, image)?,
        depth: DepthMap::from_parts(height, width, depth, valid)?,
        object_id,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverfitMap {
    pub depth: DepthMap,
    /// Moving-object pixels where no well-posed over-fit depth exists; they
    /// carry the true depth.
    pub ill_posed: BinaryMask,
    pub truth: RenderedFrame,
}

/// Object motion as seen by the over-fit solver for a box moving by `v` per
/// frame, when the source frame is one frame earlier than the target.
pub fn source_frame_motion(pose_t_to_prev: &RigidPose, velocity: &Vector3<f64>) -> ObjectMotion {
    ObjectMotion {
        translation: pose_t_to_prev.rotation() * -velocity,
    }
}

/// Depth a converged photometric network would predict for the target frame
/// (time 0) when trained against the previous frame: true depth on static
/// pixels, the over-fit depth on moving boxes.
pub fn overfit_depth_map(
    scene: &SceneSpec,
    pose_t_to_prev: &RigidPose,
    k: &CameraIntrinsics,
    height: usize,
    width: usize,
) -> Result<OverfitMap> {
    let truth = render(scene, &RigidPose::identity(), k, height, width, 0.0)?;
    let mut depth = truth.depth.data().to_vec();
    let mut ill = vec![false; height * width];
    for (i, &id) in truth.object_id.iter().enumerate() {
        let Some(d) = truth.depth.at(i) else { continue };
        if id == 0 {
            continue;
        }
        let v = scene.boxes[id as usize - 1].motion.translation;
        if v == Vector3::zeros() {
            continue;
        }
        let motion = source_frame_motion(pose_t_to_prev, &v);
        let px = Pixel::new((i % width) as f64, (i / width) as f64);
        match overfit_depth(px, d as f64, pose_t_to_prev, k, &motion) {
            Ok(o) if o.residual < MAX_OVERFIT_RESIDUAL_PX && !o.at_boundary => depth[i] = o.depth as f32,
            _ => ill[i] = true,
        }
    }
    Ok(OverfitMap {
        depth: DepthMap::from_parts(height, width, depth, truth.depth.validity().to_vec())?,
        ill_posed: BinaryMask::from_vec(height, width, ill)?,
        truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoVariant {
    /// One co-directional and one contra-directional mover.
    Default,
    Static,
    Co,
    Contra,
}

/// A two-frame dynamic scene: the camera drives forward one unit per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoScene {
    pub scene: SceneSpec,
    pub pose_t_to_prev: RigidPose,
    pub intrinsics: CameraIntrinsics,
    pub height: usize,
    pub width: usize,
}

pub const DEMO_HEIGHT: usize = 128;
pub const DEMO_WIDTH: usize = 256;
pub const DEMO_FOCAL: f64 = 128.0;

pub fn demo_scene(variant: DemoVariant) -> DemoScene {
    let (co, contra) = match variant {
        DemoVariant::Default => ([0.0, 0.0, 0.6], [0.0, 0.0, -0.5]),
        DemoVariant::Static => ([0.0; 3], [0.0; 3]),
        DemoVariant::Co => ([0.0, 0.0, 0.6], [0.0; 3]),
        DemoVariant::Contra => ([0.0; 3], [0.0, 0.0, -0.5]),
    };
    let scene = SceneSpec {
        ground_height: 1.5,
        boxes: vec![
            BoxSpec::new([1.4, 0.75, 8.0], [1.6, 1.5, 2.0], co, 11),
            BoxSpec::new([-2.2, 0.75, 10.0], [1.6, 1.5, 2.0], contra, 12),
            BoxSpec::new([4.5, 0.5, 16.0], [2.0, 2.0, 2.0], [0.0; 3], 13),
        ],
        texture_frequency: 1.5,
        backdrop_depth: Some(40.0),
        texture_seed: 7,
    };
    DemoScene {
        scene,
        pose_t_to_prev: RigidPose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
        intrinsics: CameraIntrinsics::centered(DEMO_HEIGHT, DEMO_WIDTH, DEMO_FOCAL)
            .expect("demo intrinsics are valid"),
        height: DEMO_HEIGHT,
        width: DEMO_WIDTH,
    }
}

impl DemoScene {
    pub fn target(&self) -> Result<RenderedFrame> {
        render(&self.scene, &RigidPose::identity(), &self.intrinsics, self.height, self.width, 0.0)
    }

    pub fn source(&self) -> Result<RenderedFrame> {
        render(&self.scene, &self.pose_t_to_prev, &self.intrinsics, self.height, self.width, -1.0)
    }
}
