use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use scope_core::graph::{build_grid_graph, GridGraph};
use scope_core::loss::{combined_loss, LossConfig, NodeTargets};
use scope_core::nn::{checkpoint, init_params, scope_backward, scope_forward, AdamState, ScopeNet};

use crate::config::RunConfig;
use crate::dataset::{ensure_dir, load_samples, read_manifest, split_by_parity, Sample};
use crate::error::Result;

pub const CHECKPOINT_FILE: &str = "checkpoint.scope";
pub const LOG_FILE: &str = "train_log.csv";

/// Separates the shuffling stream from the initialisation stream.
const SHUFFLE_SALT: u64 = 0x5348_5546_464c_4500;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ScopeNet,
    /// Mean per-image loss for each epoch.
    pub epoch_loss: Vec<f64>,
}

struct Prepared<'a> {
    sample: &'a Sample,
    graph: GridGraph,
    targets: NodeTargets,
}

fn loss_and_grad(net: &ScopeNet, p: &Prepared, loss: &LossConfig) -> Result<(f64, ScopeNet)> {
    let (logits, cache) = scope_forward(net, &p.sample.image, &p.graph)?;
    let (value, grad_logits) = combined_loss(&logits, &p.targets, &p.graph.grid, loss)?;
    Ok((value, scope_backward(net, &cache, &grad_logits)?))
}

/// Trains from the seeded initialisation. Images are visited in a seeded
/// shuffle each epoch; gradients are averaged over `batch_accum` images per
/// optimiser step. With `parallel` the per-image passes run on the current
/// rayon pool but are summed in visit order, so the result is unchanged.
pub fn train_samples(cfg: &RunConfig, samples: &[Sample]) -> Result<TrainOutcome> {
    cfg.validate()?;
    let prepared = samples
        .iter()
        .map(|s| {
            let graph = build_grid_graph(s.image.height(), s.image.width(), cfg.patch_size)?;
            let targets = NodeTargets::from_mask(&s.mask, &graph.grid)?;
            Ok(Prepared {
                sample: s,
                graph,
                targets,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut net = init_params(cfg.seed);
    let mut adam = AdamState::new(cfg.adam, net.tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_SALT);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_accum) {
            let results: Vec<Result<(f64, ScopeNet)>> = if cfg.parallel {
                batch
                    .par_iter()
                    .map(|&i| loss_and_grad(&net, &prepared[i], &cfg.loss))
                    .collect()
            } else {
                batch
                    .iter()
                    .map(|&i| loss_and_grad(&net, &prepared[i], &cfg.loss))
                    .collect()
            };
            let mut sum = ScopeNet::zeros();
            for r in results {
                let (value, grad) = r?;
                total += value;
                sum.accumulate(&grad);
            }
            sum.scale(1.0 / batch.len() as f64);
            adam.update(net.tensors_mut(), sum.tensors())?;
        }
        epoch_loss.push(if prepared.is_empty() {
            0.0
        } else {
            total / prepared.len() as f64
        });
    }
    Ok(TrainOutcome { net, epoch_loss })
}

pub fn format_log(epoch_loss: &[f64]) -> String {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in epoch_loss.iter().enumerate() {
        let _ = writeln!(s, "{},{:.12}", i + 1, l);
    }
    s
}

/// Trains on the even-index half of the dataset and writes the checkpoint
/// and loss log into the output directory.
pub fn train(cfg: &RunConfig) -> Result<(TrainOutcome, PathBuf)> {
    let entries = read_manifest(&cfg.dataset)?;
    let (train_entries, _) = split_by_parity(&entries);
    let samples = load_samples(&cfg.dataset, &train_entries)?;
    let outcome = train_samples(cfg, &samples)?;
    let out = ensure_dir(&cfg.output)?;
    checkpoint::save(&outcome.net, out.join(CHECKPOINT_FILE))?;
    let log = out.join(LOG_FILE);
    std::fs::write(&log, format_log(&outcome.epoch_loss))
        .map_err(|e| crate::error::CliError::io(&log, e))?;
    Ok((outcome, out))
}
