use std::path::PathBuf;

use clap::Args;
use mfdepth::geometry::inverse_warp;
use mfdepth::io::{encode_pfm, image_to_pfm};
use mfdepth::photometric::{photometric_error, DEFAULT_ALPHA};
use serde::Serialize;

use crate::failure::{CmdResult, Failure};
use crate::load::{self, Out};
use crate::Globals;

#[derive(Debug, Args)]
pub struct WarpArgs {
    /// Target image (PGM/PPM, or PFM).
    #[arg(long)]
    pub target: PathBuf,
    /// Source image to warp into the target view.
    #[arg(long)]
    pub source: PathBuf,
    /// Target depth (PFM).
    #[arg(long)]
    pub depth: PathBuf,
    /// Target→source pose (JSON).
    #[arg(long)]
    pub pose: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Serialize)]
struct WarpSummary {
    /// Mean photometric error over pixels whose whole 3×3 window warped
    /// validly.
    mean_pe: f64,
    valid_pixels: usize,
    evaluated_pixels: usize,
}

pub fn run(g: &Globals, a: &WarpArgs) -> CmdResult {
    let k = load::intrinsics(g.intrinsics.as_deref())?;
    let target = load::image(&a.target)?;
    let source = load::image(&a.source)?;
    let depth = load::depth(&a.depth)?;
    let pose = load::pose(&a.pose)?;
    if !target.same_shape(&source) || target.dims() != depth.dims() {
        return Err(Failure::bad("target, source and depth must have the same size"));
    }

    let (recon, valid) = inverse_warp(&source, &depth, &pose, &k)?;
    let pe = photometric_error(&target, &recon, a.alpha)?;
    let window = valid.eroded();
    let (mut sum, mut n) = (0.0, 0usize);
    for (&v, &ok) in pe.data().iter().zip(window.data()) {
        if ok {
            sum += v as f64;
            n += 1;
        }
    }
    let pe_out: Vec<f32> = pe
        .data()
        .iter()
        .zip(valid.data())
        .map(|(&v, &ok)| if ok { v } else { 0.0 })
        .collect();

    let out = Out::create(&g.out)?;
    match recon.channels() {
        1 => out.image("recon.pgm", &recon)?,
        3 => out.image("recon.ppm", &recon)?,
        _ => out.bytes("recon.pfm", image_to_pfm(&recon))?,
    }
    out.mask("valid.pgm", &valid)?;
    out.bytes("pe.pfm", encode_pfm(pe.dims().0, pe.dims().1, 1, &pe_out))?;
    out.json(
        "summary.json",
        &WarpSummary {
            mean_pe: if n == 0 { 0.0 } else { sum / n as f64 },
            valid_pixels: valid.count(),
            evaluated_pixels: n,
        },
    )
}
