use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mfdepth::costvolume::{
    build_cost_volume, consistency_mask, depth_hints, make_depth_bins, ChannelReduction, DEFAULT_BINS,
    DEFAULT_CONSISTENCY_RATIO,
};
use mfdepth::io::depth_preview;
use serde::Serialize;

use crate::failure::{CmdResult, Failure};
use crate::load::{self, Out};
use crate::Globals;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Debug, Args)]
pub struct CostvolArgs {
    /// Target image or feature map (PGM/PPM, or multi-channel PFM).
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub source: PathBuf,
    /// Target→source pose (JSON).
    #[arg(long)]
    pub pose: PathBuf,
    #[arg(long)]
    pub d_min: f64,
    #[arg(long)]
    pub d_max: f64,
    /// Number of depth bins `D`.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = Reduction::Sum)]
    pub reduction: Reduction,
    /// Single-frame depth (PFM); enables the consistency mask.
    #[arg(long)]
    pub single_depth: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CONSISTENCY_RATIO)]
    pub ratio: f64,
    /// True depth (PFM); enables the hint accuracy report.
    #[arg(long)]
    pub gt_depth: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct HintAccuracy {
    /// Mean `|hint − gt| / gt` over pixels with a valid hint, `gt` inside
    /// the bin range and a valid warp at the bin nearest `gt`.
    abs_rel: f64,
    /// The same mean of `(spacing / 2) / gt`: the error of perfect
    /// nearest-bin quantisation in the worst case.
    quantization_bound: f64,
    within_one_bin: f64,
    pixels: usize,
}

#[derive(Debug, Serialize)]
struct CostvolSummary {
    d_min: f64,
    d_max: f64,
    bins: usize,
    spacing: f64,
    degenerate: bool,
    hint_pixels: usize,
    consistency_pixels: Option<usize>,
    hints_vs_truth: Option<HintAccuracy>,
}

pub fn run(g: &Globals, a: &CostvolArgs) -> CmdResult {
    let k = load::intrinsics(g.intrinsics.as_deref())?;
    let bins = make_depth_bins(a.d_min, a.d_max, a.bins)?;
    if !(a.ratio.is_finite() && a.ratio > 0.0) {
        return Err(Failure::bad(format!("--ratio must be > 0, got {}", a.ratio)));
    }
    let target = load::image(&a.target)?;
    let source = load::image(&a.source)?;
    let pose = load::pose(&a.pose)?;
    let single = a.single_depth.as_deref().map(load::depth).transpose()?;
    let gt = a.gt_depth.as_deref().map(load::depth).transpose()?;
    for d in single.iter().chain(gt.iter()) {
        if d.dims() != target.dims() {
            return Err(Failure::bad("depth maps must match the target size"));
        }
    }

    let reduction = match a.reduction {
        Reduction::Sum => ChannelReduction::Sum,
        Reduction::Mean => ChannelReduction::Mean,
    };
    let volume = build_cost_volume(&target, &source, &pose, &k, &bins, reduction)?;
    let hints = depth_hints(&volume);
    let consistency = single
        .as_ref()
        .map(|d| consistency_mask(&hints, d, a.ratio))
        .transpose()?;

    let hints_vs_truth = gt.as_ref().and_then(|gt| {
        let (mut err, mut bound, mut near, mut n) = (0.0, 0.0, 0usize, 0usize);
        for i in 0..gt.len() {
            let (Some(h), Some(t)) = (hints.at(i), gt.at(i)) else { continue };
            let (h, t) = (h as f64, t as f64);
            // Only pixels whose true correspondence lands inside the source.
            let observable = volume.validity()[bins.nearest(t) * gt.len() + i];
            if t < bins.d_min() || t > bins.d_max() || !observable {
                continue;
            }
            err += (h - t).abs() / t;
            bound += 0.5 * bins.spacing() / t;
            near += usize::from(bins.nearest(h).abs_diff(bins.nearest(t)) <= 1);
            n += 1;
        }
        (n > 0).then(|| HintAccuracy {
            abs_rel: err / n as f64,
            quantization_bound: bound / n as f64,
            within_one_bin: near as f64 / n as f64,
            pixels: n,
        })
    });

    let out = Out::create(&g.out)?;
    out.bytes("cost_volume.pfm", volume.to_pfm())?;
    out.json("cost_volume.json", &volume.header())?;
    out.depth("hints.pfm", &hints)?;
    out.image("hints.pgm", &depth_preview(&hints)?)?;
    if let Some(m) = &consistency {
        out.mask("consistency.pgm", m)?;
    }
    out.json(
        "summary.json",
        &CostvolSummary {
            d_min: bins.d_min(),
            d_max: bins.d_max(),
            bins: bins.count(),
            spacing: bins.spacing(),
            degenerate: volume.is_degenerate(),
            hint_pixels: hints.valid_count(),
            consistency_pixels: consistency.as_ref().map(|m| m.count()),
            hints_vs_truth,
        },
    )
}
