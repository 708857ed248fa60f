use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mfdepth::costvolume::{
    build_cost_volume, consistency_mask, depth_hints, make_depth_bins, ChannelReduction, DEFAULT_BINS,
    DEFAULT_CONSISTENCY_RATIO,
};
use mfdepth::distill::{consistency_loss, total_loss, LossBreakdown, LossInputs, Normalization, DEFAULT_BETA};
use mfdepth::dynmask::{
    generate_masks, MaskConfig, MaskProvenance, MaskThresholds, DEFAULT_CON_THRESHOLD, DEFAULT_CO_THRESHOLD,
    DEFAULT_GROUND_REGION,
};
use mfdepth::geometry::inverse_warp;
use mfdepth::io::{depth_preview, encode_pfm};
use mfdepth::photometric::{photometric_error, smoothness, LossMap, DEFAULT_ALPHA};
use mfdepth::synth::{demo_scene, overfit_depth_map, DemoScene, DemoVariant, SceneSpec};
use mfdepth::{BinaryMask, DepthMap, ImagePlane};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::mask::Detection;
use crate::failure::{CmdResult, Failure};
use crate::load::{self, Out};
use crate::Globals;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Variant {
    Default,
    Static,
    Co,
    Contra,
}

impl From<Variant> for DemoVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Default => DemoVariant::Default,
            Variant::Static => DemoVariant::Static,
            Variant::Co => DemoVariant::Co,
            Variant::Contra => DemoVariant::Contra,
        }
    }
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Scene description (JSON); replaces the built-in scene.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Built-in scene variant, used when --scene is absent.
    #[arg(long, value_enum, default_value_t = Variant::Default)]
    pub variant: Variant,
    /// Target→previous-frame camera pose (JSON); defaults to driving forward
    /// one unit.
    #[arg(long)]
    pub pose: Option<PathBuf>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = DEFAULT_CO_THRESHOLD)]
    pub co: f64,
    #[arg(long, default_value_t = DEFAULT_CON_THRESHOLD)]
    pub con: f64,
    #[arg(long, default_value_t = DEFAULT_CONSISTENCY_RATIO)]
    pub ratio: f64,
}

/// Share of each photometric term carried by a pixel subset: the subset's
/// summed loss inside the gate divided by the gate size.
#[derive(Debug, Clone, Copy, Serialize)]
struct Contribution {
    l_ph: f64,
    l_ph_s: f64,
}

#[derive(Debug, Serialize)]
struct LossComparison {
    breakdown: LossBreakdown,
    /// Contribution of the pixels flagged by `M_i`.
    flagged_contribution: Contribution,
    /// Contribution of the pixels on moving objects.
    mover_contribution: Contribution,
}

#[derive(Debug, Serialize)]
struct MaskCounts {
    m_co: usize,
    m_con: usize,
    m_ground: usize,
    m_i: usize,
    m_consistency: usize,
}

#[derive(Debug, Serialize)]
struct DemoSummary {
    scene: SceneSpec,
    height: usize,
    width: usize,
    mover_pixels: usize,
    ill_posed_pixels: usize,
    masks: MaskCounts,
    detection: Detection,
    provenance: MaskProvenance,
    gated: LossComparison,
    ungated: LossComparison,
}

fn contribution(loss: &LossMap, gate: &[bool], subset: &[bool], gate_pixels: usize) -> f64 {
    if gate_pixels == 0 {
        return 0.0;
    }
    let sum: f64 = loss
        .data()
        .iter()
        .zip(gate.iter().zip(subset))
        .filter(|(_, (&g, &s))| g && s)
        .fold(0.0, |acc, (&v, _)| acc + v as f64);
    sum / gate_pixels as f64
}

struct Maps<'a> {
    l_ph: &'a LossMap,
    l_ph_s: &'a LossMap,
    m: &'a BinaryMask,
    valid: &'a BinaryMask,
    flagged: &'a BinaryMask,
    movers: &'a BinaryMask,
    l_c: f64,
    l_sm: f64,
    l_sm_s: f64,
}

fn compare(maps: &Maps<'_>, m_i: &BinaryMask, beta: f64) -> CmdResult<LossComparison> {
    let breakdown = total_loss(
        &LossInputs {
            l_ph: maps.l_ph,
            l_ph_s: maps.l_ph_s,
            m: maps.m,
            m_i,
            valid: Some(maps.valid),
            l_c: maps.l_c,
            l_sm: maps.l_sm,
            l_sm_s: maps.l_sm_s,
        },
        beta,
    )?;
    let n = maps.valid.len();
    let (v, m, mi) = (maps.valid.data(), maps.m.data(), m_i.data());
    let gate_ph: Vec<bool> = (0..n).map(|i| v[i] && !m[i] && !mi[i]).collect();
    let gate_ph_s: Vec<bool> = (0..n).map(|i| v[i] && !mi[i]).collect();
    let share = |subset: &BinaryMask| Contribution {
        l_ph: contribution(maps.l_ph, &gate_ph, subset.data(), breakdown.ph_gate_pixels),
        l_ph_s: contribution(maps.l_ph_s, &gate_ph_s, subset.data(), breakdown.ph_s_gate_pixels),
    };
    Ok(LossComparison {
        breakdown,
        flagged_contribution: share(maps.flagged),
        mover_contribution: share(maps.movers),
    })
}

/// Smoothness needs a dense map; holes take the farthest valid depth.
fn dense(depth: &DepthMap) -> CmdResult<DepthMap> {
    let fill = depth
        .max_valid()
        .ok_or_else(|| Failure::bad("rendered frame has no valid depth"))?;
    Ok(depth.filled(fill)?)
}

fn setup(g: &Globals, a: &DemoArgs) -> CmdResult<DemoScene> {
    let mut demo = demo_scene(a.variant.into());
    if let Some(path) = &a.scene {
        demo.scene = load::json(path)?;
        demo.scene.validate().map_err(|e| Failure::bad(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &a.pose {
        demo.pose_t_to_prev = load::pose(path)?;
    }
    if g.intrinsics.is_some() {
        demo.intrinsics = load::intrinsics(g.intrinsics.as_deref())?;
    }
    demo.height = a.height.unwrap_or(demo.height);
    demo.width = a.width.unwrap_or(demo.width);
    if demo.height < 8 || demo.width < 8 {
        return Err(Failure::bad("--height and --width must be at least 8"));
    }
    Ok(demo)
}

pub fn run(g: &Globals, a: &DemoArgs) -> CmdResult {
    let demo = setup(g, a)?;
    let config = MaskConfig {
        thresholds: MaskThresholds { co: a.co, con: a.con },
        ground_region: DEFAULT_GROUND_REGION,
    };
    config.thresholds.validate()?;
    let (k, pose) = (&demo.intrinsics, &demo.pose_t_to_prev);

    let over = overfit_depth_map(&demo.scene, pose, k, demo.height, demo.width)?;
    let target = &over.truth;
    let source = demo.source()?;
    let d_ref = &target.depth;
    let movers = target.dynamic_mask(&demo.scene);

    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let report = generate_masks(&over.depth, d_ref, k, &config, &mut rng)?;
    if let Some(e) = &report.ground_fit_error {
        eprintln!("warning: {e}; M_ground left all-true");
    }
    let masks = &report.masks;

    // Multi-frame branch uses the over-fit depth, the teacher the reference.
    let (recon, valid_multi) = inverse_warp(&source.image, &over.depth, pose, k)?;
    let (recon_s, valid_single) = inverse_warp(&source.image, d_ref, pose, k)?;
    let l_ph = photometric_error(&target.image, &recon, a.alpha)?;
    let l_ph_s = photometric_error(&target.image, &recon_s, a.alpha)?;
    let valid = valid_multi.and(&valid_single)?;

    let bins = make_depth_bins(
        d_ref.min_valid().ok_or_else(|| Failure::bad("rendered frame has no valid depth"))? as f64,
        d_ref.max_valid().unwrap_or(0.0) as f64,
        a.bins,
    )?;
    let volume = build_cost_volume(&target.image, &source.image, pose, k, &bins, ChannelReduction::Sum)?;
    let hints = depth_hints(&volume);
    let m = consistency_mask(&hints, d_ref, a.ratio)?;
    let l_c = consistency_loss(&over.depth, d_ref, &m, Normalization::Mean)?;
    let l_sm = smoothness(&dense(&over.depth)?, &target.image)?;
    let l_sm_s = smoothness(&dense(d_ref)?, &target.image)?;

    let maps = Maps {
        l_ph: &l_ph,
        l_ph_s: &l_ph_s,
        m: &m,
        valid: &valid,
        flagged: masks.m_i(),
        movers: &movers,
        l_c,
        l_sm,
        l_sm_s,
    };
    let (h, w) = (demo.height, demo.width);
    let gated = compare(&maps, masks.m_i(), a.beta)?;
    let ungated = compare(&maps, &BinaryMask::new(h, w, false)?, a.beta)?;

    let out = Out::create(&g.out)?;
    out.image("target.ppm", &target.image)?;
    out.image("source.ppm", &source.image)?;
    out.depth("d_over.pfm", &over.depth)?;
    out.depth("d_ref.pfm", d_ref)?;
    out.image("d_over.pgm", &depth_preview(&over.depth)?)?;
    out.image("d_ref.pgm", &depth_preview(d_ref)?)?;
    out.image("d_aligned.pgm", &depth_preview(&report.aligned.depth)?)?;
    out.image("hints.pgm", &depth_preview(&hints)?)?;
    out.mask("m_co.pgm", masks.m_co())?;
    out.mask("m_con.pgm", masks.m_con())?;
    out.mask("m_ground.pgm", masks.m_ground())?;
    out.mask("m_i.pgm", masks.m_i())?;
    out.mask("m_consistency.pgm", &m)?;
    out.mask("movers.pgm", &movers)?;
    let masked = |l: &LossMap| -> Vec<f32> {
        l.data()
            .iter()
            .zip(valid.data())
            .map(|(&v, &ok)| if ok { v } else { 0.0 })
            .collect()
    };
    out.bytes("pe_multi.pfm", encode_pfm(h, w, 1, &masked(&l_ph)))?;
    out.bytes("pe_single.pfm", encode_pfm(h, w, 1, &masked(&l_ph_s)))?;
    out.image("pe_multi.pgm", &ImagePlane::from_vec(h, w, 1, masked(&l_ph))?)?;

    let detection = Detection::score(masks.m_i(), &movers);
    out.json(
        "summary.json",
        &DemoSummary {
            scene: demo.scene.clone(),
            height: h,
            width: w,
            mover_pixels: movers.count(),
            ill_posed_pixels: over.ill_posed.count(),
            masks: MaskCounts {
                m_co: masks.m_co().count(),
                m_con: masks.m_con().count(),
                m_ground: masks.m_ground().count(),
                m_i: masks.m_i().count(),
                m_consistency: m.count(),
            },
            detection,
            provenance: report.provenance(),
            gated,
            ungated,
        },
    )
}
