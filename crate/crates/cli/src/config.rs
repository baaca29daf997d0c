//! Flat `key = value` run configuration.
//!
//! Files hold one assignment per line; `#` starts a comment. Every key can
//! also be given on the command line as `--key=value`, which wins over the
//! file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use scope_core::loss::{LossConfig, LossKind};
use scope_core::nn::AdamConfig;
use scope_core::synth::SynthConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub patch_size: usize,
    pub epochs: usize,
    pub batch_accum: usize,
    pub adam: AdamConfig,
    pub loss: LossConfig,
    pub seed: u64,
    pub dataset: PathBuf,
    pub output: PathBuf,
    pub threshold: f64,
    /// Pairs written by `synth`.
    pub count: usize,
    /// Held-out pairs used for evaluation (taken from the odd indices).
    pub test_count: usize,
    /// Compute per-image gradients on worker threads. The reduction order
    /// is fixed, so results match the single-threaded run.
    pub parallel: bool,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            patch_size: 1,
            epochs: 30,
            batch_accum: 8,
            adam: AdamConfig::default(),
            loss: LossConfig::default(),
            seed: 7,
            dataset: PathBuf::from("data"),
            output: PathBuf::from("runs"),
            threshold: 0.5,
            count: 64,
            test_count: 8,
            parallel: false,
            synth: SynthConfig::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "patch_size",
    "epochs",
    "batch_accum",
    "lr",
    "weight_decay",
    "adam.beta1",
    "adam.beta2",
    "adam.eps",
    "loss.kind",
    "loss.k",
    "loss.epsilon",
    "loss.lambda",
    "seed",
    "dataset",
    "output",
    "threshold",
    "count",
    "test_count",
    "parallel",
    "synth.seed",
    "synth.height",
    "synth.width",
    "synth.n_branches",
    "synth.radius_min",
    "synth.radius_max",
    "synth.noise_sigma",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse {key} = {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "patch_size" => self.patch_size = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "batch_accum" => self.batch_accum = parse(key, v)?,
            "lr" => self.adam.lr = parse(key, v)?,
            "weight_decay" => self.adam.weight_decay = parse(key, v)?,
            "adam.beta1" => self.adam.beta1 = parse(key, v)?,
            "adam.beta2" => self.adam.beta2 = parse(key, v)?,
            "adam.eps" => self.adam.eps = parse(key, v)?,
            "loss.kind" => {
                self.loss.kind = v
                    .parse::<LossKind>()
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
            "loss.k" => self.loss.k = parse(key, v)?,
            "loss.epsilon" => self.loss.epsilon = parse(key, v)?,
            "loss.lambda" => self.loss.lambda = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "dataset" => self.dataset = PathBuf::from(v),
            "output" => self.output = PathBuf::from(v),
            "threshold" => self.threshold = parse(key, v)?,
            "count" => self.count = parse(key, v)?,
            "test_count" => self.test_count = parse(key, v)?,
            "parallel" => self.parallel = parse(key, v)?,
            "synth.seed" => self.synth.seed = parse(key, v)?,
            "synth.height" => self.synth.height = parse(key, v)?,
            "synth.width" => self.synth.width = parse(key, v)?,
            "synth.n_branches" => self.synth.n_branches = parse(key, v)?,
            "synth.radius_min" => self.synth.radius_min = parse(key, v)?,
            "synth.radius_max" => self.synth.radius_max = parse(key, v)?,
            "synth.noise_sigma" => self.synth.noise_sigma = parse(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every assignment in `text`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.patch_size, 1 | 2) {
            return Err(CliError::Config(format!(
                "patch_size must be 1 or 2, got {}",
                self.patch_size
            )));
        }
        if self.epochs == 0 || self.batch_accum == 0 {
            return Err(CliError::Config(
                "epochs and batch_accum must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::Config(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        let a = &self.adam;
        if !(a.lr > 0.0
            && a.weight_decay >= 0.0
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && a.eps > 0.0)
        {
            return Err(CliError::Config(format!(
                "invalid optimiser settings {a:?}"
            )));
        }
        self.loss.validate()?;
        self.synth.validate()?;
        Ok(())
    }

    /// Canonical `key = value` listing of every setting; reading it back
    /// reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let a = &self.adam;
        let l = &self.loss;
        let y = &self.synth;
        let rows: Vec<(&str, String)> = vec![
            ("patch_size", self.patch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_accum", self.batch_accum.to_string()),
            ("lr", a.lr.to_string()),
            ("weight_decay", a.weight_decay.to_string()),
            ("adam.beta1", a.beta1.to_string()),
            ("adam.beta2", a.beta2.to_string()),
            ("adam.eps", a.eps.to_string()),
            ("loss.kind", l.kind.to_string()),
            ("loss.k", l.k.to_string()),
            ("loss.epsilon", l.epsilon.to_string()),
            ("loss.lambda", l.lambda.to_string()),
            ("seed", self.seed.to_string()),
            ("dataset", self.dataset.display().to_string()),
            ("output", self.output.display().to_string()),
            ("threshold", self.threshold.to_string()),
            ("count", self.count.to_string()),
            ("test_count", self.test_count.to_string()),
            ("parallel", self.parallel.to_string()),
            ("synth.seed", y.seed.to_string()),
            ("synth.height", y.height.to_string()),
            ("synth.width", y.width.to_string()),
            ("synth.n_branches", y.n_branches.to_string()),
            ("synth.radius_min", y.radius_min.to_string()),
            ("synth.radius_max", y.radius_max.to_string()),
            ("synth.noise_sigma", y.noise_sigma.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Pulls `--key=value` overrides for known config keys out of `args`,
/// leaving everything else for the argument parser.
pub fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    for a in args {
        if let Some((k, v)) = a.strip_prefix("--").and_then(|s| s.split_once('=')) {
            if KEYS.contains(&k) {
                overrides.push((k.to_string(), v.to_string()));
                continue;
            }
        }
        rest.push(a);
    }
    (rest, overrides)
}
