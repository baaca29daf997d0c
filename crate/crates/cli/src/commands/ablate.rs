use std::fmt::Write as _;

use rayon::prelude::*;

use scope_core::loss::LossKind;
use scope_core::nn::checkpoint;
use scope_core::pgm::write_mask;
use scope_core::topology::{evaluate_pair, mean_summary, MeanSummary};

use super::infer::predict;
use super::train::{format_log, train_samples, CHECKPOINT_FILE, LOG_FILE};
use crate::config::RunConfig;
use crate::dataset::{ensure_dir, load_samples, read_manifest, split_by_parity};
use crate::error::{CliError, Result};

pub const ABLATION_HEADER: &str =
    "cell,loss,patch_size,precision,recall,dice,cldice,err_b0,err_b1,err_chi";

/// The four compared configurations: each loss at 1×1 patches, plus clDice
/// at 2×2.
pub const CELLS: [(LossKind, usize); 4] = [
    (LossKind::Ce, 1),
    (LossKind::CePlusClDice, 1),
    (LossKind::ClDice, 1),
    (LossKind::ClDice, 2),
];

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub cell: String,
    pub loss: LossKind,
    pub patch_size: usize,
    pub mean: MeanSummary,
    pub final_loss: f64,
}

/// Trains every cell on the even half of the dataset and scores it on the
/// first `test_count` odd-index pairs. Cells run on the current rayon pool;
/// each is independent and seeded, so the table does not depend on the
/// thread count. Per-cell artefacts land in `output/<cell>/`.
pub fn ablate(base: &RunConfig) -> Result<(Vec<AblationRow>, String)> {
    base.validate()?;
    let entries = read_manifest(&base.dataset)?;
    let (train_entries, test_entries) = split_by_parity(&entries);
    if test_entries.len() < base.test_count || base.test_count == 0 {
        return Err(CliError::Dataset(format!(
            "need {} held-out pairs, dataset has {}",
            base.test_count,
            test_entries.len()
        )));
    }
    let train = load_samples(&base.dataset, &train_entries)?;
    let test = load_samples(&base.dataset, &test_entries[..base.test_count])?;
    ensure_dir(&base.output)?;

    let rows = CELLS
        .par_iter()
        .map(|&(kind, n)| {
            let mut cfg = base.clone();
            cfg.loss.kind = kind;
            cfg.patch_size = n;
            let cell = format!("{kind}_n{n}");
            let outcome = train_samples(&cfg, &train)?;
            let dir = ensure_dir(&base.output.join(&cell))?;
            checkpoint::save(&outcome.net, dir.join(CHECKPOINT_FILE))?;
            let log = dir.join(LOG_FILE);
            std::fs::write(&log, format_log(&outcome.epoch_loss))
                .map_err(|e| CliError::io(&log, e))?;
            let pred_dir = ensure_dir(&dir.join("predictions"))?;
            let mut summaries = Vec::with_capacity(test.len());
            for s in &test {
                let p = predict(&outcome.net, &s.image, n, cfg.threshold)?;
                write_mask(&p.mask, pred_dir.join(&s.name))?;
                summaries.push(evaluate_pair(&p.mask, &s.mask)?);
            }
            Ok(AblationRow {
                cell,
                loss: kind,
                patch_size: n,
                mean: mean_summary(&summaries),
                final_loss: outcome.epoch_loss.last().copied().unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from(ABLATION_HEADER);
    csv.push('\n');
    for r in &rows {
        let m = &r.mean;
        let _ = writeln!(
            csv,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.cell,
            r.loss,
            r.patch_size,
            m.precision,
            m.recall,
            m.dice,
            m.cldice,
            m.err_b0,
            m.err_b1,
            m.err_chi
        );
    }
    let path = base.output.join("ablation.csv");
    std::fs::write(&path, &csv).map_err(|e| CliError::io(&path, e))?;
    Ok((rows, csv))
}
