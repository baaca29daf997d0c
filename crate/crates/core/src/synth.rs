//! Seeded synthetic vessel trees.
//!
//! Each branch is a quadratic Bézier curve swept by a disk. The first branch
//! starts anywhere on the canvas; later branches fork from a point on an
//! earlier branch with probability [`FORK_PROBABILITY`] and otherwise start
//! independently, so a mask holds one or more trees and `β0 ≤ n_branches`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};

pub const FOREGROUND_INTENSITY: f64 = 0.8;
pub const FORK_PROBABILITY: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub n_branches: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub noise_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            height: 64,
            width: 64,
            n_branches: 4,
            radius_min: 1.0,
            radius_max: 2.0,
            noise_sigma: 0.25,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height < 16 || self.width < 16 {
            return Err(Error::InvalidConfig(format!(
                "synthetic canvas {}x{} smaller than 16x16",
                self.height, self.width
            )));
        }
        if !(self.radius_min >= 1.0 && self.radius_max >= self.radius_min) {
            return Err(Error::InvalidConfig(format!(
                "radius range [{}, {}] must satisfy 1 <= min <= max",
                self.radius_min, self.radius_max
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise sigma {} must be finite and >= 0",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Same geometry parameters with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    y: f64,
    x: f64,
}

struct Branch {
    samples: Vec<Point>,
    radius: f64,
}

/// Generates an `(image, mask)` pair. Identical configs give identical bytes.
pub fn synth_vessels(cfg: &SynthConfig) -> Result<(GrayImage, BinaryImage)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (h, w) = (cfg.height, cfg.width);
    let mut mask = BinaryImage::empty(h, w);
    let mut branches: Vec<Branch> = Vec::with_capacity(cfg.n_branches);

    for _ in 0..cfg.n_branches {
        loop {
            let parent = if !branches.is_empty() && rng.random_bool(FORK_PROBABILITY) {
                Some(rng.random_range(0..branches.len()))
            } else {
                None
            };
            let (start, parent_radius) = match parent {
                Some(p) => {
                    let b = &branches[p];
                    // keep away from the very ends so forks look like forks
                    let lo = b.samples.len() / 5;
                    let hi = (4 * b.samples.len() / 5).max(lo + 1);
                    (b.samples[rng.random_range(lo..hi)], Some(b.radius))
                }
                None => (random_point(&mut rng, h, w), None),
            };
            let min_len = h.min(w) as f64 / 3.0;
            let mut end = random_point(&mut rng, h, w);
            for _ in 0..32 {
                if dist(start, end) >= min_len {
                    break;
                }
                end = random_point(&mut rng, h, w);
            }
            let mid = Point {
                y: 0.5 * (start.y + end.y),
                x: 0.5 * (start.x + end.x),
            };
            let len = dist(start, end).max(1.0);
            let bend = rng.random_range(-0.5..0.5) * len;
            let ctrl = Point {
                y: mid.y + bend * (end.x - start.x) / len,
                x: mid.x - bend * (end.y - start.y) / len,
            };
            let mut radius = rng.random_range(cfg.radius_min..=cfg.radius_max);
            if let Some(pr) = parent_radius {
                radius = radius.min(pr);
            }
            let samples = bezier_samples(start, ctrl, end);
            let stamped = stamp(&mut mask, &samples, radius);
            if stamped > 0 {
                branches.push(Branch { samples, radius });
                break;
            }
            // the whole sweep fell off the canvas; draw a new branch
        }
    }

    let mut data: Vec<f64> = mask
        .data()
        .iter()
        .map(|&b| if b { FOREGROUND_INTENSITY } else { 0.0 })
        .collect();
    if cfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
        for v in data.iter_mut() {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }
    let image = GrayImage::new(h, w, data)?;
    Ok((image, mask))
}

fn random_point(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Point {
    Point {
        y: rng.random_range(0.0..(h - 1) as f64),
        x: rng.random_range(0.0..(w - 1) as f64),
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a.y - b.y).powi(2) + (a.x - b.x).powi(2)).sqrt()
}

/// Samples spaced at most a quarter pixel apart along the curve.
fn bezier_samples(p0: Point, p1: Point, p2: Point) -> Vec<Point> {
    let hull = dist(p0, p1) + dist(p1, p2);
    let n = (hull * 4.0).ceil() as usize + 1;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let (a, b, c) = ((1.0 - t) * (1.0 - t), 2.0 * (1.0 - t) * t, t * t);
            Point {
                y: a * p0.y + b * p1.y + c * p2.y,
                x: a * p0.x + b * p1.x + c * p2.x,
            }
        })
        .collect()
}

fn stamp(mask: &mut BinaryImage, samples: &[Point], radius: f64) -> usize {
    let (h, w) = (mask.height() as isize, mask.width() as isize);
    let r2 = radius * radius;
    let reach = radius.ceil() as isize;
    let mut count = 0;
    for p in samples {
        let (cy, cx) = (p.y.round() as isize, p.x.round() as isize);
        for y in (cy - reach)..=(cy + reach) {
            for x in (cx - reach)..=(cx + reach) {
                if y < 0 || x < 0 || y >= h || x >= w {
                    continue;
                }
                let d2 = (y as f64 - p.y).powi(2) + (x as f64 - p.x).powi(2);
                if d2 <= r2 {
                    mask.set(y as usize, x as usize, true);
                    count += 1;
                }
            }
        }
    }
    count
}
