//! On-disk dataset layout: `img_NNNN.pgm` / `msk_NNNN.pgm` pairs listed in
//! `manifest.txt`, one `image mask` pair per line.

use std::path::{Path, PathBuf};

use scope_core::pgm::{read_mask, read_pgm};
use scope_core::{BinaryImage, GrayImage};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairEntry {
    pub image: String,
    pub mask: String,
}

pub fn image_name(i: usize) -> String {
    format!("img_{i:04}.pgm")
}

pub fn mask_name(i: usize) -> String {
    format!("msk_{i:04}.pgm")
}

pub fn write_manifest(dir: &Path, entries: &[PairEntry]) -> Result<()> {
    let text: String = entries
        .iter()
        .map(|e| format!("{} {}\n", e.image, e.mask))
        .collect();
    let path = dir.join(MANIFEST);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Vec<PairEntry>> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Dataset(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let mut it = l.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(image), Some(mask), None) => Ok(PairEntry {
                    image: image.to_string(),
                    mask: mask.to_string(),
                }),
                _ => Err(CliError::Dataset(format!(
                    "{}:{}: expected `image mask`",
                    path.display(),
                    i + 1
                ))),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub name: String,
    pub image: GrayImage,
    pub mask: BinaryImage,
}

pub fn load_samples(dir: &Path, entries: &[PairEntry]) -> Result<Vec<Sample>> {
    entries
        .iter()
        .map(|e| {
            let image = read_pgm(dir.join(&e.image))?;
            let mask = read_mask(dir.join(&e.mask))?;
            if image.height() != mask.height() || image.width() != mask.width() {
                return Err(CliError::Dataset(format!(
                    "{} and {} differ in size",
                    e.image, e.mask
                )));
            }
            Ok(Sample {
                name: e.mask.clone(),
                image,
                mask,
            })
        })
        .collect()
}

/// Even manifest positions train, odd positions are held out.
pub fn split_by_parity(entries: &[PairEntry]) -> (Vec<PairEntry>, Vec<PairEntry>) {
    let train = entries.iter().step_by(2).cloned().collect();
    let test = entries.iter().skip(1).step_by(2).cloned().collect();
    (train, test)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}
