use std::path::Path;

use scope_core::graph::{build_grid_graph, nodes_to_gray, nodes_to_mask};
use scope_core::loss::softmax_foreground;
use scope_core::nn::{checkpoint, scope_forward, scope_forward_features, ScopeNet, Tensor};
use scope_core::pgm::{read_pgm, write_mask, write_pgm};
use scope_core::{BinaryImage, GrayImage};

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Prediction {
    /// Foreground probability, replicated over each patch.
    pub soft: GrayImage,
    pub mask: BinaryImage,
}

fn finish(
    logits: &Tensor,
    grid: &scope_core::graph::PatchGrid,
    threshold: f64,
) -> Result<Prediction> {
    let probs = softmax_foreground(logits);
    let fg: Vec<bool> = probs.iter().map(|&p| p > threshold).collect();
    Ok(Prediction {
        soft: nodes_to_gray(&probs, grid)?,
        mask: nodes_to_mask(&fg, grid)?,
    })
}

pub fn predict(
    net: &ScopeNet,
    image: &GrayImage,
    patch_size: usize,
    threshold: f64,
) -> Result<Prediction> {
    let graph = build_grid_graph(image.height(), image.width(), patch_size)?;
    let (logits, _) = scope_forward(net, image, &graph)?;
    finish(&logits, &graph.grid, threshold)
}

/// Same as [`predict`] but starting from a stored `[H, W, 64]` feature map.
pub fn predict_features(
    net: &ScopeNet,
    features: &Tensor,
    patch_size: usize,
    threshold: f64,
) -> Result<Prediction> {
    let &[h, w, _] = features.shape() else {
        return Err(CliError::Usage(format!(
            "feature map must be rank 3, got {:?}",
            features.shape()
        )));
    };
    let graph = build_grid_graph(h, w, patch_size)?;
    let (logits, _) = scope_forward_features(net, features, &graph)?;
    finish(&logits, &graph.grid, threshold)
}

/// Loads the checkpoint, predicts `input` (a PGM, or a feature map when
/// `features` is set) and writes the soft map to `out` and the thresholded
/// mask to `mask_out`.
pub fn infer_file(
    ckpt: &Path,
    input: &Path,
    features: bool,
    out: &Path,
    mask_out: &Path,
    patch_size: usize,
    threshold: f64,
) -> Result<Prediction> {
    let net = checkpoint::load(ckpt)?;
    let pred = if features {
        predict_features(
            &net,
            &checkpoint::read_feature_map(input)?,
            patch_size,
            threshold,
        )?
    } else {
        predict(&net, &read_pgm(input)?, patch_size, threshold)?
    };
    write_pgm(&pred.soft, out, 255)?;
    write_mask(&pred.mask, mask_out)?;
    Ok(pred)
}

/// `pred.pgm` → `pred_mask.pgm`.
pub fn default_mask_path(out: &Path) -> std::path::PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_mask.pgm"))
}
