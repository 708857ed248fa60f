use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use mfdepth::metrics::{aggregate, evaluate, write_csv, EvalReport, DEFAULT_MAX_DEPTH};
use rayon::prelude::*;
use serde::Serialize;

use crate::failure::{CmdResult, Failure};
use crate::load::{self, Out};
use crate::Globals;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of predicted depth PFMs.
    #[arg(long)]
    pub pred_dir: PathBuf,
    /// Directory of ground-truth depth PFMs with matching file names.
    #[arg(long)]
    pub gt_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: f64,
    /// Align each prediction to its ground truth by the median ratio.
    #[arg(long)]
    pub median_scale: bool,
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    frames: usize,
    skipped: Vec<String>,
    aggregate: EvalReport,
}

fn pfm_names(dir: &Path) -> CmdResult<BTreeSet<String>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| Failure::BadInput(anyhow::Error::new(e).context(format!("{}", dir.display()))))?;
    let mut names = BTreeSet::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Failure::BadInput(anyhow::Error::new(e).context(format!("{}", dir.display()))))?
            .path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm")) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.insert(name.to_string());
            }
        }
    }
    Ok(names)
}

pub fn run(g: &Globals, a: &EvalArgs) -> CmdResult {
    let pred = pfm_names(&a.pred_dir)?;
    let gt = pfm_names(&a.gt_dir)?;
    let mut skipped: Vec<String> = pred.symmetric_difference(&gt).cloned().collect();
    for name in &skipped {
        eprintln!("warning: {name} has no counterpart; skipped");
    }
    let matched: Vec<&String> = pred.intersection(&gt).collect();
    if matched.is_empty() {
        return Err(Failure::bad("no prediction matches a ground-truth file"));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.workers)
        .build()
        .map_err(|e| Failure::Internal(e.into()))?;
    let results: Vec<(String, CmdResult<EvalReport>)> = pool.install(|| {
        matched
            .par_iter()
            .map(|name| {
                let report = (|| {
                    let p = load::depth(&a.pred_dir.join(name))?;
                    let t = load::depth(&a.gt_dir.join(name))?;
                    Ok(evaluate(&p, &t, a.max_depth, a.median_scale)?)
                })();
                ((*name).clone(), report)
            })
            .collect()
    });

    let mut frames = Vec::new();
    for (name, r) in results {
        match r {
            Ok(report) => frames.push((name, report)),
            Err(e) => {
                eprintln!("warning: {name}: {e}; skipped");
                skipped.push(name);
            }
        }
    }
    if frames.is_empty() {
        return Err(Failure::bad("no frame could be evaluated"));
    }
    skipped.sort();

    let out = Out::create(&g.out)?;
    let path = out.path("metrics.csv");
    let file = fs::File::create(&path)
        .map_err(|e| Failure::Internal(anyhow::Error::new(e).context(format!("writing {}", path.display()))))?;
    write_csv(&frames, file)?;
    let reports: Vec<EvalReport> = frames.iter().map(|(_, r)| *r).collect();
    out.json(
        "summary.json",
        &EvalSummary {
            frames: frames.len(),
            skipped,
            aggregate: aggregate(&reports)?,
        },
    )
}
