use std::fmt;
use std::str::FromStr;

use super::ce::cross_entropy_loss;
use super::cldice::soft_cldice_loss;
use crate::error::{Error, Result};
use crate::graph::{pool_mask, reshape_nodes_to_grid, GridField, PatchGrid};
use crate::image::BinaryImage;
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Ce,
    ClDice,
    CePlusClDice,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Ce => "ce",
            LossKind::ClDice => "cldice",
            LossKind::CePlusClDice => "ce_plus_cldice",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(LossKind::Ce),
            "cldice" => Ok(LossKind::ClDice),
            "ce_plus_cldice" => Ok(LossKind::CePlusClDice),
            other => Err(Error::InvalidConfig(format!("unknown loss kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub kind: LossKind,
    /// soft-skeleton erosion steps
    pub k: usize,
    pub epsilon: f64,
    /// CE weight in the mixed objective
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::ClDice,
            k: 10,
            epsilon: 1e-6,
            lambda: 0.5,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("loss.k must be >= 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("loss.epsilon must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(
                "loss.lambda must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Ground truth at node resolution: a node is foreground iff its patch
/// contains any foreground pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTargets {
    pub labels: Vec<bool>,
    pub field: GridField,
}

impl NodeTargets {
    pub fn from_mask(mask: &BinaryImage, grid: &PatchGrid) -> Result<Self> {
        let labels = pool_mask(mask, grid)?;
        let field = GridField::from_mask(&labels, grid.rows, grid.cols)?;
        Ok(Self { labels, field })
    }
}

/// Foreground probability `softmax(logits)[:, 1]` per node.
pub fn softmax_foreground(logits: &Tensor) -> Vec<f64> {
    logits
        .data()
        .chunks_exact(2)
        .map(|r| 1.0 / (1.0 + (r[0] - r[1]).exp()))
        .collect()
}

/// Loss and `∂loss/∂logits` for the configured objective. The clDice part
/// works on the reshaped foreground-probability grid.
pub fn combined_loss(
    logits: &Tensor,
    targets: &NodeTargets,
    grid: &PatchGrid,
    cfg: &LossConfig,
) -> Result<(f64, Tensor)> {
    let n = grid.num_nodes();
    if logits.shape() != [n, 2] || targets.labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "logits {:?} and {} labels for {n} nodes",
            logits.shape(),
            targets.labels.len()
        )));
    }
    let (ce_w, cl_w) = match cfg.kind {
        LossKind::Ce => return cross_entropy_loss(logits, &targets.labels),
        LossKind::ClDice => (0.0, 1.0),
        LossKind::CePlusClDice => (cfg.lambda, 1.0 - cfg.lambda),
    };
    let probs = softmax_foreground(logits);
    let field = reshape_nodes_to_grid(&probs, grid)?;
    let (cl, g_field) = soft_cldice_loss(&field, &targets.field, cfg.k, cfg.epsilon)?;
    let mut grad = Vec::with_capacity(2 * n);
    for (&p, &gp) in probs.iter().zip(&g_field.data) {
        // dp/dl1 = p(1 − p) = −dp/dl0
        let d = cl_w * gp * p * (1.0 - p);
        grad.push(-d);
        grad.push(d);
    }
    let mut grad = Tensor::new(vec![n, 2], grad)?;
    let mut loss = cl_w * cl;
    if ce_w > 0.0 {
        let (ce, mut g_ce) = cross_entropy_loss(logits, &targets.labels)?;
        g_ce.scale(ce_w);
        grad.add_assign(&g_ce);
        loss += ce_w * ce;
    }
    Ok((loss, grad))
}
