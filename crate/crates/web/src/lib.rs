//! Browser front end for three views of the library:
//!
//! * the over-fit depth a photometric loss settles on for a moving object,
//!   swept over object speed;
//! * the inconsistency masks on the synthetic driving scene, with live
//!   thresholds;
//! * the plane-sweep matching cost along the depth bins at a clicked pixel.
//!
//! The plain Rust types below do the work and are tested natively; the
//! `wasm` module only converts errors and buffers for JavaScript.

use mfdepth::costvolume::{build_cost_volume, depth_hints, make_depth_bins, ChannelReduction, CostVolume};
use mfdepth::dynmask::{generate_masks, MaskConfig, MaskThresholds, DEFAULT_GROUND_REGION};
use mfdepth::geometry::{overfit_depth, Pixel};
use mfdepth::io::depth_preview;
use mfdepth::synth::{
    demo_scene, overfit_depth_map, render, source_frame_motion, BoxSpec, DemoVariant, SceneSpec,
    MAX_OVERFIT_RESIDUAL_PX,
};
use mfdepth::{BinaryMask, CameraIntrinsics, DepthMap, ImagePlane, Result, RigidPose};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod wasm;

/// Packs a 1- or 3-channel plane with values in `[0, 1]` as RGBA bytes.
pub fn to_rgba(plane: &ImagePlane) -> Vec<u8> {
    let c = plane.channels();
    let byte = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut out = Vec::with_capacity(plane.height() * plane.width() * 4);
    for px in plane.data().chunks(c) {
        let (r, g, b) = if c >= 3 { (px[0], px[1], px[2]) } else { (px[0], px[0], px[0]) };
        out.extend_from_slice(&[byte(r), byte(g), byte(b), 255]);
    }
    out
}

// Over-fit curve ---------------------------------------------------------

/// Ratio of over-fit to true depth for a point at `depth` seen at pixel
/// `(u, v)` of the demo camera, when the camera advances `camera_speed` and
/// the object `object_speed` units per frame along the optical axis.
///
/// `None` when no depth reproduces the object's image motion.
pub fn overfit_ratio(camera_speed: f64, object_speed: f64, depth: f64, u: f64, v: f64) -> Result<Option<f64>> {
    let demo = demo_scene(DemoVariant::Static);
    let pose = RigidPose::from_translation(Vector3::new(0.0, 0.0, camera_speed));
    let motion = source_frame_motion(&pose, &Vector3::new(0.0, 0.0, object_speed));
    let fit = overfit_depth(Pixel::new(u, v), depth, &pose, &demo.intrinsics, &motion)?;
    Ok((!fit.at_boundary && fit.residual < MAX_OVERFIT_RESIDUAL_PX).then_some(fit.depth / depth))
}

/// [`overfit_ratio`] at `steps` object speeds evenly spaced over
/// `[speed_min, speed_max]`. Ill-posed speeds are `NaN`.
pub fn overfit_curve(
    camera_speed: f64,
    depth: f64,
    u: f64,
    v: f64,
    speed_min: f64,
    speed_max: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let steps = steps.max(2);
    (0..steps)
        .map(|i| {
            let s = speed_min + (speed_max - speed_min) * i as f64 / (steps - 1) as f64;
            overfit_ratio(camera_speed, s, depth, u, v).map(|r| r.unwrap_or(f64::NAN))
        })
        .collect()
}

// Mask demo --------------------------------------------------------------

pub fn parse_variant(name: &str) -> Option<DemoVariant> {
    match name {
        "default" => Some(DemoVariant::Default),
        "static" => Some(DemoVariant::Static),
        "co" => Some(DemoVariant::Co),
        "contra" => Some(DemoVariant::Contra),
        _ => None,
    }
}

/// The demo scene rendered once, with its over-fit depth map.
pub struct MaskScene {
    pub height: usize,
    pub width: usize,
    pub intrinsics: CameraIntrinsics,
    pub image: ImagePlane,
    pub d_ref: DepthMap,
    pub d_over: DepthMap,
    pub movers: BinaryMask,
}

/// Masks for one threshold setting.
pub struct MaskView {
    /// Target image dimmed, with `M_co ∧ M_ground` red, `M_con ∧ M_ground`
    /// blue, ratio hits outside the ground band yellow and missed mover
    /// pixels green.
    pub rgba: Vec<u8>,
    pub m_co: usize,
    pub m_con: usize,
    pub m_i: usize,
    pub movers: usize,
    pub recall: f64,
    pub precision: f64,
}

impl MaskScene {
    pub fn new(variant: DemoVariant) -> Result<Self> {
        let demo = demo_scene(variant);
        let target = demo.target()?;
        let over = overfit_depth_map(&demo.scene, &demo.pose_t_to_prev, &demo.intrinsics, demo.height, demo.width)?;
        Ok(Self {
            height: demo.height,
            width: demo.width,
            intrinsics: demo.intrinsics,
            movers: target.dynamic_mask(&demo.scene),
            image: target.image,
            d_ref: target.depth,
            d_over: over.depth,
        })
    }

    pub fn overfit_preview(&self) -> Result<Vec<u8>> {
        Ok(to_rgba(&depth_preview(&self.d_over)?))
    }

    pub fn view(&self, co: f64, con: f64) -> Result<MaskView> {
        let config = MaskConfig {
            thresholds: MaskThresholds { co, con },
            ground_region: DEFAULT_GROUND_REGION,
        };
        let report = generate_masks(&self.d_over, &self.d_ref, &self.intrinsics, &config, &mut ChaCha8Rng::seed_from_u64(0))?;
        let m = &report.masks;
        let mut rgba = to_rgba(&self.image);
        for (i, px) in rgba.chunks_mut(4).enumerate() {
            let (co, con, ground, mover) =
                (m.m_co().data()[i], m.m_con().data()[i], m.m_ground().data()[i], self.movers.data()[i]);
            let tint = if co && ground {
                Some([230, 40, 40])
            } else if con && ground {
                Some([40, 90, 240])
            } else if co || con {
                Some([230, 200, 40])
            } else if mover {
                Some([40, 200, 80])
            } else {
                None
            };
            match tint {
                Some(t) => px[..3].copy_from_slice(&t),
                None => px[..3].iter_mut().for_each(|c| *c /= 2),
            }
        }
        let hits = m.m_i().and(&self.movers)?.count();
        let ratio = |a: usize, b: usize| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
        Ok(MaskView {
            rgba,
            m_co: m.m_co().count(),
            m_con: m.m_con().count(),
            m_i: m.m_i().count(),
            movers: self.movers.count(),
            recall: ratio(hits, self.movers.count()),
            precision: ratio(hits, m.m_i().count()),
        })
    }
}

// Plane sweep ------------------------------------------------------------

pub const SWEEP_HEIGHT: usize = 96;
pub const SWEEP_WIDTH: usize = 192;
pub const SWEEP_BINS: usize = 96;

fn sweep_scene() -> SceneSpec {
    SceneSpec {
        ground_height: 1.5,
        boxes: vec![
            BoxSpec::new([-1.8, 0.75, 8.0], [1.5, 1.5, 1.5], [0.0; 3], 21),
            BoxSpec::new([2.6, 0.5, 12.0], [2.0, 2.0, 2.0], [0.0; 3], 22),
        ],
        texture_frequency: 0.25,
        backdrop_depth: Some(15.0),
        texture_seed: 5,
    }
}

/// A static scene seen from two cameras `baseline` apart sideways, with the
/// cost volume between them.
pub struct SweepScene {
    pub image: ImagePlane,
    pub depth: DepthMap,
    pub hints: DepthMap,
    pub volume: CostVolume,
}

/// Costs at one pixel; invalid bins are `NaN`.
pub struct CostProfile {
    pub depths: Vec<f64>,
    pub costs: Vec<f64>,
    pub true_depth: Option<f64>,
    pub hint: Option<f64>,
}

impl SweepScene {
    pub fn new(baseline: f64) -> Result<Self> {
        let k = CameraIntrinsics::centered(SWEEP_HEIGHT, SWEEP_WIDTH, 96.0)?;
        let scene = sweep_scene();
        let pose = RigidPose::from_translation(Vector3::new(-baseline, 0.0, 0.0));
        let target = render(&scene, &RigidPose::identity(), &k, SWEEP_HEIGHT, SWEEP_WIDTH, 0.0)?;
        let source = render(&scene, &pose, &k, SWEEP_HEIGHT, SWEEP_WIDTH, 0.0)?;
        let lo = target.depth.min_valid().unwrap_or(1.0) as f64;
        let hi = target.depth.max_valid().unwrap_or(20.0) as f64;
        let bins = make_depth_bins(lo, hi, SWEEP_BINS)?;
        let volume = build_cost_volume(&target.image, &source.image, &pose, &k, &bins, ChannelReduction::Sum)?;
        Ok(Self {
            hints: depth_hints(&volume),
            image: target.image,
            depth: target.depth,
            volume,
        })
    }

    pub fn profile(&self, row: usize, col: usize) -> CostProfile {
        let row = row.min(SWEEP_HEIGHT - 1);
        let col = col.min(SWEEP_WIDTH - 1);
        let bins = self.volume.bins();
        CostProfile {
            depths: bins.values().to_vec(),
            costs: (0..bins.count())
                .map(|b| self.volume.get(b, row, col).map_or(f64::NAN, f64::from))
                .collect(),
            true_depth: self.depth.get(row, col).map(f64::from),
            hint: self.hints.get(row, col).map(f64::from),
        }
    }
}
