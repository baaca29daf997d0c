use std::path::Path;

use scope_core::pgm::{write_mask, write_pgm};
use scope_core::synth::{synth_vessels, SynthConfig};

use crate::dataset::{ensure_dir, image_name, mask_name, write_manifest, PairEntry};
use crate::error::Result;

/// Seed for pair `i`: a splitmix step so neighbouring base seeds do not
/// share images.
pub fn pair_seed(base: u64, i: usize) -> u64 {
    let mut z = base.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn synth(cfg: &SynthConfig, count: usize, out: &Path) -> Result<Vec<PairEntry>> {
    cfg.validate()?;
    ensure_dir(out)?;
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let (img, mask) = synth_vessels(&cfg.with_seed(pair_seed(cfg.seed, i)))?;
        let entry = PairEntry {
            image: image_name(i),
            mask: mask_name(i),
        };
        write_pgm(&img, out.join(&entry.image), 255)?;
        write_mask(&mask, out.join(&entry.mask))?;
        entries.push(entry);
    }
    write_manifest(out, &entries)?;
    Ok(entries)
}
