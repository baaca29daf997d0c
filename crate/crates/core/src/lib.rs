//! Patch-graph segmentation of thin tubular structures.
//!
//! The crate is split along the pipeline:
//!
//! - [`image`], [`pgm`], [`synth`]: rasters, PGM I/O and a seeded vessel generator.
//! - [`topology`]: connected components, Betti numbers, Euler characteristic,
//!   thinning, clDice and pixel metrics.
//! - [`graph`]: the patch grid graph, max-pool node features and the
//!   node/pixel mappings.
//! - [`nn`]: tensors, the conv feature generator, GCN layers, the full
//!   network with hand-written reverse pass, Adam and checkpoints.
//! - [`loss`]: soft skeleton, soft clDice, cross-entropy and their mix.
//! - [`gradcheck`]: finite-difference checks of every reverse pass.

pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod image;
pub mod loss;
pub mod nn;
pub mod pgm;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};
pub use image::{BinaryImage, GrayImage};
