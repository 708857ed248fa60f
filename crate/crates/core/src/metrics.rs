//! Depth evaluation: AbsRel, SqRel, RMSE, RMSE-log and the three δ
//! accuracies, with optional median scaling and a depth cap.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::DepthMap;
use crate::stats::{joint_medians, median};

pub const DEFAULT_MAX_DEPTH: f64 = 80.0;
/// Floor applied to (scaled) predictions so the log error stays finite.
pub const MIN_PRED_DEPTH: f64 = 1e-3;
pub const DELTA_BASE: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    /// Factor applied to the prediction; `1` without median scaling.
    pub scale: f64,
    pub pixel_count: usize,
}

/// Scales `pred` by `median(gt) / median(pred)` over jointly valid pixels.
pub fn median_scale(pred: &DepthMap, gt: &DepthMap) -> Result<(DepthMap, f64)> {
    let (mp, mg) = joint_medians(pred, gt, None)?;
    let scale = mg / mp;
    Ok((pred.scaled(scale)?, scale))
}

/// Evaluates over pixels valid in both maps with `gt ∈ (0, max_depth]`.
/// The median ratio, when requested, is computed over those same pixels.
pub fn evaluate(pred: &DepthMap, gt: &DepthMap, max_depth: f64, apply_median_scale: bool) -> Result<EvalReport> {
    if pred.dims() != gt.dims() {
        return Err(Error::dim(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    if !(max_depth.is_finite() && max_depth > MIN_PRED_DEPTH) {
        return Err(Error::domain(format!("max_depth must exceed {MIN_PRED_DEPTH}, got {max_depth}")));
    }
    let (mut p, mut g) = (Vec::new(), Vec::new());
    for i in 0..gt.len() {
        if let (Some(pv), Some(gv)) = (pred.at(i), gt.at(i)) {
            let gv = gv as f64;
            if gv > 0.0 && gv <= max_depth {
                p.push(pv as f64);
                g.push(gv);
            }
        }
    }
    if g.is_empty() {
        return Err(Error::domain("no evaluable pixels"));
    }
    let scale = if apply_median_scale {
        let mg = median(&mut g.clone()).expect("non-empty");
        let mp = median(&mut p.clone()).expect("non-empty");
        mg / mp
    } else {
        1.0
    };
    let n = g.len() as f64;
    let mut acc = [0f64; 7];
    let thresholds = [DELTA_BASE, DELTA_BASE.powi(2), DELTA_BASE.powi(3)];
    for (&pv, &gv) in p.iter().zip(&g) {
        let pv = (pv * scale).clamp(MIN_PRED_DEPTH, max_depth);
        let diff = pv - gv;
        acc[0] += diff.abs() / gv;
        acc[1] += diff * diff / gv;
        acc[2] += diff * diff;
        let ld = pv.ln() - gv.ln();
        acc[3] += ld * ld;
        let ratio = (pv / gv).max(gv / pv);
        for (k, t) in thresholds.iter().enumerate() {
            if ratio < *t {
                acc[4 + k] += 1.0;
            }
        }
    }
    Ok(EvalReport {
        abs_rel: acc[0] / n,
        sq_rel: acc[1] / n,
        rmse: (acc[2] / n).sqrt(),
        rmse_log: (acc[3] / n).sqrt(),
        delta1: acc[4] / n,
        delta2: acc[5] / n,
        delta3: acc[6] / n,
        scale,
        pixel_count: g.len(),
    })
}

/// Unweighted mean over frames; `pixel_count` is the total and `scale` the
/// mean scale.
pub fn aggregate(reports: &[EvalReport]) -> Result<EvalReport> {
    if reports.is_empty() {
        return Err(Error::domain("nothing to aggregate"));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(EvalReport {
        abs_rel: mean(|r| r.abs_rel),
        sq_rel: mean(|r| r.sq_rel),
        rmse: mean(|r| r.rmse),
        rmse_log: mean(|r| r.rmse_log),
        delta1: mean(|r| r.delta1),
        delta2: mean(|r| r.delta2),
        delta3: mean(|r| r.delta3),
        scale: mean(|r| r.scale),
        pixel_count: reports.iter().map(|r| r.pixel_count).sum(),
    })
}

pub const CSV_COLUMNS: [&str; 10] = [
    "frame", "abs_rel", "sq_rel", "rmse", "rmse_log", "d1", "d2", "d3", "scale", "pixels",
];
pub const AGGREGATE_LABEL: &str = "aggregate";

/// One row per frame in the given order, then the aggregate row.
pub fn write_csv<W: Write>(frames: &[(String, EvalReport)], writer: W) -> Result<()> {
    let reports: Vec<EvalReport> = frames.iter().map(|(_, r)| *r).collect();
    let total = aggregate(&reports)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    let rows = frames
        .iter()
        .map(|(name, r)| (name.as_str(), r))
        .chain(std::iter::once((AGGREGATE_LABEL, &total)));
    for (name, r) in rows {
        w.write_record([
            name.to_string(),
            r.abs_rel.to_string(),
            r.sq_rel.to_string(),
            r.rmse.to_string(),
            r.rmse_log.to_string(),
            r.delta1.to_string(),
            r.delta2.to_string(),
            r.delta3.to_string(),
            r.scale.to_string(),
            r.pixel_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
