use std::path::PathBuf;

use clap::Args;
use mfdepth::dynmask::{
    generate_masks, MaskConfig, MaskProvenance, MaskThresholds, DEFAULT_CON_THRESHOLD, DEFAULT_CO_THRESHOLD,
    DEFAULT_GROUND_REGION,
};
use mfdepth::BinaryMask;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::failure::{CmdResult, Failure};
use crate::load::{self, Out};
use crate::Globals;

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Over-fitting multi-frame depth (PFM).
    #[arg(long)]
    pub d_over: PathBuf,
    /// Robust reference depth (PFM).
    #[arg(long)]
    pub d_ref: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CO_THRESHOLD)]
    pub co: f64,
    #[arg(long, default_value_t = DEFAULT_CON_THRESHOLD)]
    pub con: f64,
    /// Bottom fraction of rows used for the ground-plane fit.
    #[arg(long, default_value_t = DEFAULT_GROUND_REGION)]
    pub ground_region: f64,
    /// Ground-truth dynamic pixels (PGM); enables recall/precision.
    #[arg(long)]
    pub dynamic_gt: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Detection {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub true_positives: usize,
    pub dynamic_pixels: usize,
    pub flagged_pixels: usize,
}

impl Detection {
    pub fn score(flagged: &BinaryMask, truth: &BinaryMask) -> Self {
        let tp = flagged
            .data()
            .iter()
            .zip(truth.data())
            .filter(|(&f, &t)| f && t)
            .count();
        let (dynamic_pixels, flagged_pixels) = (truth.count(), flagged.count());
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        Self {
            recall: ratio(tp, dynamic_pixels),
            precision: ratio(tp, flagged_pixels),
            true_positives: tp,
            dynamic_pixels,
            flagged_pixels,
        }
    }
}

#[derive(Debug, Serialize)]
struct MaskSummary {
    provenance: MaskProvenance,
    detection: Option<Detection>,
}

pub fn run(g: &Globals, a: &MaskArgs) -> CmdResult {
    let k = load::intrinsics(g.intrinsics.as_deref())?;
    if !(a.ground_region > 0.0 && a.ground_region <= 1.0) {
        return Err(Failure::bad("--ground-region must lie in (0, 1]"));
    }
    let config = MaskConfig {
        thresholds: MaskThresholds { co: a.co, con: a.con },
        ground_region: a.ground_region,
    };
    config.thresholds.validate()?;
    let d_over = load::depth(&a.d_over)?;
    let d_ref = load::depth(&a.d_ref)?;
    let truth = a.dynamic_gt.as_deref().map(load::mask).transpose()?;
    if d_over.dims() != d_ref.dims() || truth.as_ref().is_some_and(|t| t.dims() != d_ref.dims()) {
        return Err(Failure::bad("input rasters differ in size"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let report = generate_masks(&d_over, &d_ref, &k, &config, &mut rng)?;
    if let Some(e) = &report.ground_fit_error {
        eprintln!("warning: {e}; M_ground left all-true");
    }
    let m = &report.masks;
    let out = Out::create(&g.out)?;
    out.mask("m_co.pgm", m.m_co())?;
    out.mask("m_con.pgm", m.m_con())?;
    out.mask("m_ground.pgm", m.m_ground())?;
    out.mask("m_i.pgm", m.m_i())?;
    let provenance = report.provenance();
    out.json("provenance.json", &provenance)?;
    let detection = truth.as_ref().map(|t| Detection::score(m.m_i(), t));
    if let Some(d) = &detection {
        println!(
            "M_i recall {} precision {}",
            d.recall.map_or("n/a".into(), |v| format!("{v:.4}")),
            d.precision.map_or("n/a".into(), |v| format!("{v:.4}"))
        );
    }
    out.json("summary.json", &MaskSummary { provenance, detection })
}
