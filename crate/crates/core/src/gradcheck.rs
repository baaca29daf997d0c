//! Central finite-difference checks of every analytic gradient path.
//!
//! Each check compares analytic derivatives against
//! `(f(θ + h) − f(θ − h)) / 2h` with `h = 1e-5`. Coordinates whose stencil
//! straddles a kink (ReLU zero, max-filter or max-pool switch) are skipped
//! or redrawn, since the function is not differentiable there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{backprop_pool, build_grid_graph, pool_node_features, GridField, PatchGrid};
use crate::image::{BinaryImage, GrayImage};
use crate::loss::{
    combined_loss, cross_entropy_loss, soft_cldice_loss, LossConfig, LossKind, NodeTargets,
};
use crate::nn::{
    conv_backward, conv_forward, gcn_backward, gcn_forward, init_params, normalized_adjacency,
    scope_backward, scope_forward, Activation, ConvLayer, GcnLayer, ScopeNet, Tensor,
};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor: below this magnitude errors are judged absolutely.
pub const FLOOR: f64 = 1e-6;
/// Largest slope jump, relative to the gradient, not treated as a kink.
pub const KINK_TOLERANCE: f64 = 2e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub component: String,
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped: usize,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel_err < TOLERANCE
    }
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// Central difference for coordinate `i` of a flat buffer, or `None` when a
/// kink lies inside the stencil.
///
/// `f` is sampled at offsets `−h, −h/2, 0, h/2, h`. On a smooth stretch the
/// four secant slopes change by a near-constant step (`≈ f''·h/2`); a kink
/// adds a jump to one step. Jumps below `KINK_TOLERANCE` (relative) can bias
/// the estimate by at most half that, well inside `TOLERANCE`.
fn central(x: &mut [f64], i: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> Option<f64> {
    let orig = x[i];
    let half = STEP / 2.0;
    let vals: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|k| {
            x[i] = orig + k * half;
            f(x)
        })
        .collect();
    x[i] = orig;
    let estimate = (vals[4] - vals[0]) / (2.0 * STEP);
    let slopes: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]) / half).collect();
    let steps: Vec<f64> = slopes.windows(2).map(|w| w[1] - w[0]).collect();
    let spread = steps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - steps.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > KINK_TOLERANCE * estimate.abs().max(FLOOR) {
        return None;
    }
    Some(estimate)
}

struct Tally {
    row: CheckRow,
}

impl Tally {
    fn new(name: &str) -> Self {
        Self {
            row: CheckRow {
                component: name.to_string(),
                max_rel_err: 0.0,
                checked: 0,
                skipped: 0,
            },
        }
    }

    fn record(&mut self, analytic: f64, numeric: Option<f64>) {
        match numeric {
            Some(n) => {
                self.row.max_rel_err = self.row.max_rel_err.max(rel_err(analytic, n));
                self.row.checked += 1;
            }
            None => self.row.skipped += 1,
        }
    }
}

fn random_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.random_range(lo..hi)).collect(),
    )
    .unwrap()
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// `scale` multiplies every analytic gradient before comparison; 1.0 for a
/// real check, anything else to prove the detector fires.
pub fn check_conv(rng: &mut ChaCha8Rng, scale: f64) -> CheckRow {
    let mut t = Tally::new("conv");
    let input = random_tensor(&[5, 6, 3], -1.0, 1.0, rng);
    let layer = ConvLayer {
        weight: random_tensor(&[3, 3, 3, 4], -0.5, 0.5, rng),
        bias: random_tensor(&[4], -0.2, 0.2, rng),
    };
    let probe = random_tensor(&[5, 6, 4], -1.0, 1.0, rng);
    let (_, cache) = conv_forward(&input, &layer).unwrap();
    let (gin, gl) = conv_backward(&cache, &layer, &probe, true).unwrap();
    let gin = gin.unwrap();

    let mut x = input.data().to_vec();
    for i in 0..x.len() {
        let shape = input.shape().to_vec();
        let num = central(&mut x, i, &mut |v| {
            let inp = Tensor::new(shape.clone(), v.to_vec()).unwrap();
            dot(&conv_forward(&inp, &layer).unwrap().0, &probe)
        });
        t.record(scale * gin.data()[i], num);
    }
    let mut w = layer.weight.data().to_vec();
    for i in 0..w.len() {
        let num = central(&mut w, i, &mut |v| {
            let l = ConvLayer {
                weight: Tensor::new(layer.weight.shape().to_vec(), v.to_vec()).unwrap(),
                bias: layer.bias.clone(),
            };
            dot(&conv_forward(&input, &l).unwrap().0, &probe)
        });
        t.record(scale * gl.weight.data()[i], num);
    }
    let mut b = layer.bias.data().to_vec();
    for i in 0..b.len() {
        let num = central(&mut b, i, &mut |v| {
            let l = ConvLayer {
                weight: layer.weight.clone(),
                bias: Tensor::new(vec![4], v.to_vec()).unwrap(),
            };
            dot(&conv_forward(&input, &l).unwrap().0, &probe)
        });
        t.record(scale * gl.bias.data()[i], num);
    }
    t.row
}

pub fn check_maxpool(rng: &mut ChaCha8Rng, scale: f64) -> CheckRow {
    let mut t = Tally::new("maxpool");
    for n in [2, 3] {
        let grid = PatchGrid::new(6, 6, n).unwrap();
        let field = random_tensor(&[6, 6, 3], -1.0, 1.0, rng);
        let probe = random_tensor(&[grid.num_nodes(), 3], -1.0, 1.0, rng);
        let (_, cache) = pool_node_features(&field, &grid).unwrap();
        let g = backprop_pool(&probe, &cache).unwrap();
        let mut x = field.data().to_vec();
        for i in 0..x.len() {
            let num = central(&mut x, i, &mut |v| {
                let f = Tensor::new(vec![6, 6, 3], v.to_vec()).unwrap();
                dot(&pool_node_features(&f, &grid).unwrap().0, &probe)
            });
            t.record(scale * g.data()[i], num);
        }
    }
    t.row
}

pub fn check_gcn_layer(rng: &mut ChaCha8Rng, scale: f64) -> CheckRow {
    let mut t = Tally::new("gcn");
    let graph = build_grid_graph(3, 4, 1).unwrap();
    let adj = normalized_adjacency(&graph);
    let input = random_tensor(&[12, 5], -1.0, 1.0, rng);
    let layer = GcnLayer {
        weight: random_tensor(&[5, 3], -0.7, 0.7, rng),
        bias: random_tensor(&[3], -0.1, 0.1, rng),
    };
    let probe = random_tensor(&[12, 3], -1.0, 1.0, rng);
    let (_, cache) = gcn_forward(&adj, &input, &layer, Activation::Relu).unwrap();
    let (gin, gl) = gcn_backward(&adj, &cache, &layer, &probe).unwrap();
    let eval = |inp: &Tensor, l: &GcnLayer| {
        dot(
            &gcn_forward(&adj, inp, l, Activation::Relu).unwrap().0,
            &probe,
        )
    };

    let mut x = input.data().to_vec();
    for i in 0..x.len() {
        let num = central(&mut x, i, &mut |v| {
            eval(&Tensor::new(vec![12, 5], v.to_vec()).unwrap(), &layer)
        });
        t.record(scale * gin.data()[i], num);
    }
    let mut w = layer.weight.data().to_vec();
    for i in 0..w.len() {
        let num = central(&mut w, i, &mut |v| {
            let l = GcnLayer {
                weight: Tensor::new(vec![5, 3], v.to_vec()).unwrap(),
                bias: layer.bias.clone(),
            };
            eval(&input, &l)
        });
        t.record(scale * gl.weight.data()[i], num);
    }
    t.row
}

pub fn check_cross_entropy(rng: &mut ChaCha8Rng, scale: f64) -> CheckRow {
    let mut t = Tally::new("cross_entropy");
    let logits = random_tensor(&[10, 2], -3.0, 3.0, rng);
    let labels: Vec<bool> = (0..10).map(|_| rng.random_bool(0.5)).collect();
    let (_, g) = cross_entropy_loss(&logits, &labels).unwrap();
    let mut x = logits.data().to_vec();
    for i in 0..x.len() {
        let num = central(&mut x, i, &mut |v| {
            cross_entropy_loss(&Tensor::new(vec![10, 2], v.to_vec()).unwrap(), &labels)
                .unwrap()
                .0
        });
        t.record(scale * g.data()[i], num);
    }
    t.row
}

fn tube_mask(h: usize, w: usize, rng: &mut ChaCha8Rng) -> BinaryImage {
    let mut m = BinaryImage::empty(h, w);
    let row = rng.random_range(2..h - 3);
    for c in 1..w - 1 {
        m.set(row, c, true);
        m.set(row + 1, c, true);
    }
    let col = rng.random_range(2..w - 2);
    for r in 1..h - 1 {
        m.set(r, col, true);
    }
    m
}

pub fn check_soft_cldice(rng: &mut ChaCha8Rng, scale: f64) -> CheckRow {
    let mut t = Tally::new("soft_cldice");
    let (h, w) = (9, 10);
    let gt = GridField::from_mask(tube_mask(h, w, rng).data(), h, w).unwrap();
    let pred = GridField::new(
        h,
        w,
        (0..h * w).map(|_| rng.random_range(0.05..0.95)).collect(),
    )
    .unwrap();
    let (k, eps) = (3, 1e-6);
    let (_, g) = soft_cldice_loss(&pred, &gt, k, eps).unwrap();
    let mut x = pred.data.clone();
    for i in 0..x.len() {
        let num = central(&mut x, i, &mut |v| {
            let p = GridField::new(h, w, v.to_vec()).unwrap();
            soft_cldice_loss(&p, &gt, k, eps).unwrap().0
        });
        t.record(scale * g.data[i], num);
    }
    t.row
}

struct EndToEnd {
    image: GrayImage,
    graph: crate::graph::GridGraph,
    targets: NodeTargets,
    cfg: LossConfig,
}

impl EndToEnd {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let (h, w) = (8, 8);
        let image = GrayImage::new(
            h,
            w,
            (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let graph = build_grid_graph(h, w, n).unwrap();
        let targets = NodeTargets::from_mask(&tube_mask(h, w, rng), &graph.grid).unwrap();
        let cfg = LossConfig {
            kind: LossKind::CePlusClDice,
            k: 3,
            ..LossConfig::default()
        };
        Self {
            image,
            graph,
            targets,
            cfg,
        }
    }

    fn loss(&self, net: &ScopeNet) -> f64 {
        let (logits, _) = scope_forward(net, &self.image, &self.graph).unwrap();
        combined_loss(&logits, &self.targets, &self.graph.grid, &self.cfg)
            .unwrap()
            .0
    }

    fn grads(&self, net: &ScopeNet) -> ScopeNet {
        let (logits, cache) = scope_forward(net, &self.image, &self.graph).unwrap();
        let (_, g) = combined_loss(&logits, &self.targets, &self.graph.grid, &self.cfg).unwrap();
        scope_backward(net, &cache, &g).unwrap()
    }
}

/// Checks `per_tensor` random coordinates of each listed parameter tensor
/// through the full network loss.
fn sample_params(
    problem: &EndToEnd,
    net: &ScopeNet,
    tensor_ids: &[usize],
    per_tensor: usize,
    rng: &mut ChaCha8Rng,
    scale: f64,
    tally: &mut Tally,
) {
    let grads = problem.grads(net);
    let grad_tensors = grads.tensors();
    for &ti in tensor_ids {
        let len = net.tensors()[ti].len();
        for _ in 0..per_tensor {
            // redraw a few times if we land on a kink
            for _ in 0..4 {
                let idx = rng.random_range(0..len);
                let mut work = net.clone();
                let mut flat = work.tensors()[ti].data().to_vec();
                let num = central(&mut flat, idx, &mut |v| {
                    work.tensors_mut()[ti].data_mut().copy_from_slice(v);
                    problem.loss(&work)
                });
                let hit = num.is_some();
                tally.record(scale * grad_tensors[ti].data()[idx], num);
                if hit {
                    break;
                }
            }
        }
    }
}

/// One row per conv layer and per graph layer, plus the whole network at
/// patch sizes 1 and 2 over 20 random parameters each.
pub fn check_network(rng: &mut ChaCha8Rng, scale: f64) -> Vec<CheckRow> {
    let net = perturbed_init(rng);
    let names = net.param_names();
    let mut rows = Vec::new();
    let problem = EndToEnd::new(1, rng);
    let groups = names.len() / 2;
    for gi in 0..groups {
        let label = names[2 * gi].trim_end_matches(".weight").to_string();
        let mut tally = Tally::new(&label);
        sample_params(
            &problem,
            &net,
            &[2 * gi, 2 * gi + 1],
            3,
            rng,
            scale,
            &mut tally,
        );
        rows.push(tally.row);
    }
    for n in [1, 2] {
        let problem = EndToEnd::new(n, rng);
        let mut tally = Tally::new(&format!("end_to_end_n{n}"));
        let total: usize = net.num_params();
        let sizes: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
        // 20 coordinates drawn uniformly over all parameters
        for _ in 0..20 {
            let mut flat = rng.random_range(0..total);
            let mut ti = 0;
            while flat >= sizes[ti] {
                flat -= sizes[ti];
                ti += 1;
            }
            let mut sub = Tally::new("");
            let mut one = ChaCha8Rng::seed_from_u64(flat as u64);
            sample_params(&problem, &net, &[ti], 1, &mut one, scale, &mut sub);
            tally.row.max_rel_err = tally.row.max_rel_err.max(sub.row.max_rel_err);
            tally.row.checked += sub.row.checked;
            tally.row.skipped += sub.row.skipped;
        }
        rows.push(tally.row);
    }
    rows
}

/// Seeded init plus small random biases so no bias gradient is trivially zero.
fn perturbed_init(rng: &mut ChaCha8Rng) -> ScopeNet {
    let mut net = init_params(rng.random());
    for (name, t) in net.param_names().into_iter().zip(net.tensors_mut()) {
        if name.ends_with(".bias") {
            for v in t.data_mut() {
                *v = rng.random_range(-0.05..0.05);
            }
        }
    }
    net
}

/// The full suite: conv, max-pool routing, a standalone GCN layer,
/// cross-entropy, soft clDice, every network layer, and end-to-end.
pub fn run_gradcheck(seed: u64, scale: f64) -> Vec<CheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![
        check_conv(&mut rng, scale),
        check_maxpool(&mut rng, scale),
        check_gcn_layer(&mut rng, scale),
        check_cross_entropy(&mut rng, scale),
        check_soft_cldice(&mut rng, scale),
    ];
    rows.extend(check_network(&mut rng, scale));
    rows
}
