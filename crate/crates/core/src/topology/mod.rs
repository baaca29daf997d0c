//! Topological and pixel-wise evaluation of binary masks.
//!
//! Foreground uses 8-connectivity and background 4-connectivity throughout,
//! which makes `χ = β0 − β1` hold exactly for every 2D mask.

mod components;
mod euler;
mod metrics;
mod skeleton;

pub use components::{connected_components, Connectivity, LabelMap};
pub use euler::{betti_numbers, euler_characteristic, euler_quads, euler_vef};
pub use metrics::{
    cldice_metric, evaluate_pair, mean_summary, pixel_metrics, MeanSummary, PixelMetrics,
    TopologySummary,
};
pub use skeleton::{is_simple, skeletonize};
