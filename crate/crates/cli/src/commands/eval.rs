use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use scope_core::pgm::read_mask;
use scope_core::topology::{evaluate_pair, mean_summary, MeanSummary, TopologySummary};

use crate::dataset::{read_manifest, MANIFEST};
use crate::error::{CliError, Result};

pub const EVAL_HEADER: &str = "file,precision,recall,dice,cldice,err_b0,err_b1,err_chi";

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<(String, TopologySummary)>,
    pub mean: MeanSummary,
    /// Pairs that could not be scored, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Mask names to score: the manifest's mask column when the ground-truth
/// directory has one, otherwise every `.pgm` file in sorted order.
fn gt_names(gt: &Path) -> Result<Vec<String>> {
    if gt.join(MANIFEST).is_file() {
        return Ok(read_manifest(gt)?.into_iter().map(|e| e.mask).collect());
    }
    let mut names = Vec::new();
    for entry in std::fs::read_dir(gt).map_err(|e| CliError::io(gt, e))? {
        let entry = entry.map_err(|e| CliError::io(gt, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".pgm") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Scores every ground-truth mask against the same-named file in `pred`.
/// Pairs run on the current rayon pool; row order follows the name list.
pub fn eval_dirs(pred: &Path, gt: &Path) -> Result<EvalReport> {
    let names = gt_names(gt)?;
    if names.is_empty() {
        return Err(CliError::Dataset(format!(
            "no masks found in {}",
            gt.display()
        )));
    }
    let scored: Vec<(String, std::result::Result<TopologySummary, String>)> = names
        .par_iter()
        .map(|name| {
            let r = (|| {
                let g = read_mask(gt.join(name))?;
                let p = read_mask(pred.join(name))?;
                evaluate_pair(&p, &g)
            })();
            (name.clone(), r.map_err(|e| e.to_string()))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (name, r) in scored {
        match r {
            Ok(s) => rows.push((name, s)),
            Err(e) => failures.push((name, e)),
        }
    }
    let summaries: Vec<TopologySummary> = rows.iter().map(|(_, s)| s.clone()).collect();
    Ok(EvalReport {
        mean: mean_summary(&summaries),
        rows,
        failures,
    })
}

pub fn format_eval_csv(report: &EvalReport) -> String {
    let mut s = String::from(EVAL_HEADER);
    s.push('\n');
    for (name, r) in &report.rows {
        let _ = writeln!(
            s,
            "{name},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.precision,
            r.recall,
            r.dice,
            r.cldice,
            r.err_b0 as f64,
            r.err_b1 as f64,
            r.err_chi as f64
        );
    }
    let m = &report.mean;
    let _ = writeln!(
        s,
        "mean,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        m.precision, m.recall, m.dice, m.cldice, m.err_b0, m.err_b1, m.err_chi
    );
    s
}
