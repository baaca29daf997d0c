//! The full network: conv feature generator, patch max-pool, and the
//! eleven-layer graph convolution module with skip wiring.
//!
//! Graph layer widths (1-based numbering, `o_j` is the output of layer `j`):
//!
//! | layer | input                     | width | output |
//! |-------|---------------------------|-------|--------|
//! | 1     | pooled features `f_c`     | 64    | 32     |
//! | 2–4   | `o_{j-1}`                 | 32    | 32     |
//! | 5–10  | `[o_{j-4}, o_{j-1}]`      | 64    | 32     |
//! | 11    | `[f_c, o_10]`             | 96    | 2      |
//!
//! Layer `i`'s through-input (`o_{i-1}`) is concatenated with the output of
//! layer `i+2` and fed to layer `i+3`. Layer 1's input is the 64-wide
//! `f_c`, which instead reaches the classifier through the global skip.
//! Every layer except the last applies ReLU.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conv::{conv_backward, conv_forward, ConvCache, ConvLayer};
use super::gcn::{gcn_backward, gcn_forward, Activation, GcnCache, GcnLayer, SparseOperator};
use super::Tensor;
use crate::error::{Error, Result};
use crate::graph::{backprop_pool, pool_node_features, GridGraph, PoolCache};
use crate::image::GrayImage;

pub const CONV_WIDTHS: [usize; 4] = [1, 16, 32, 64];
pub const FEATURE_WIDTH: usize = 64;
pub const HIDDEN_WIDTH: usize = 32;
pub const GRAPH_LAYERS: usize = 11;
pub const CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// The max-pooled node features `f_c`.
    Pooled,
    /// Output of graph layer `l` (0-based).
    Layer(usize),
}

/// Input composition of every graph layer, concatenated left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wiring {
    pub inputs: Vec<Vec<Source>>,
    pub widths: Vec<usize>,
}

impl Wiring {
    pub fn scope() -> Self {
        let mut inputs = Vec::with_capacity(GRAPH_LAYERS);
        for l in 0..GRAPH_LAYERS - 1 {
            inputs.push(match l {
                0 => vec![Source::Pooled],
                1..=3 => vec![Source::Layer(l - 1)],
                _ => vec![Source::Layer(l - 4), Source::Layer(l - 1)],
            });
        }
        inputs.push(vec![Source::Pooled, Source::Layer(GRAPH_LAYERS - 2)]);
        let mut widths = vec![HIDDEN_WIDTH; GRAPH_LAYERS];
        widths[GRAPH_LAYERS - 1] = CLASSES;
        Self { inputs, widths }
    }

    fn source_width(&self, s: Source) -> usize {
        match s {
            Source::Pooled => FEATURE_WIDTH,
            Source::Layer(l) => self.widths[l],
        }
    }

    pub fn input_width(&self, layer: usize) -> usize {
        self.inputs[layer]
            .iter()
            .map(|&s| self.source_width(s))
            .sum()
    }

    /// Every source must be an earlier layer.
    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.widths.len() || self.inputs.is_empty() {
            return Err(Error::InvalidConfig(
                "wiring has mismatched layer lists".into(),
            ));
        }
        for (l, srcs) in self.inputs.iter().enumerate() {
            if srcs.is_empty() {
                return Err(Error::InvalidConfig(format!("layer {l} has no inputs")));
            }
            for s in srcs {
                if let Source::Layer(k) = s {
                    if *k >= l {
                        return Err(Error::InvalidConfig(format!(
                            "layer {l} reads from later layer {k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopeNet {
    pub convs: Vec<ConvLayer>,
    pub gcn: Vec<GcnLayer>,
    pub wiring: Wiring,
}

impl ScopeNet {
    /// The architecture with all parameters zero.
    pub fn zeros() -> Self {
        let wiring = Wiring::scope();
        wiring.validate().expect("static wiring is valid");
        let convs = CONV_WIDTHS
            .windows(2)
            .map(|w| ConvLayer::zeros(w[0], w[1]))
            .collect();
        let gcn = (0..GRAPH_LAYERS)
            .map(|l| GcnLayer::zeros(wiring.input_width(l), wiring.widths[l]))
            .collect();
        Self { convs, gcn, wiring }
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.convs.len() {
            names.push(format!("fgen.conv{}.weight", i + 1));
            names.push(format!("fgen.conv{}.bias", i + 1));
        }
        for l in 0..self.gcn.len() {
            let base = if l + 1 == self.gcn.len() {
                "gcn.head".to_string()
            } else {
                format!("gcn.layer{:02}", l + 1)
            };
            names.push(format!("{base}.weight"));
            names.push(format!("{base}.bias"));
        }
        names
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for c in &self.convs {
            out.push(&c.weight);
            out.push(&c.bias);
        }
        for g in &self.gcn {
            out.push(&g.weight);
            out.push(&g.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for c in &mut self.convs {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        for g in &mut self.gcn {
            out.push(&mut g.weight);
            out.push(&mut g.bias);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// `self += other`, parameter-wise.
    pub fn accumulate(&mut self, other: &ScopeNet) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.scale(s);
        }
    }
}

/// Glorot-uniform weights and zero biases.
pub fn init_params(seed: u64) -> ScopeNet {
    let mut net = ScopeNet::zeros();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |w: &mut Tensor, fan_in: usize, fan_out: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in w.data_mut() {
            *v = rng.random_range(-bound..=bound);
        }
    };
    for c in &mut net.convs {
        let (ci, co) = (c.c_in(), c.c_out());
        fill(&mut c.weight, 9 * ci, 9 * co);
    }
    for g in &mut net.gcn {
        let (ci, co) = (g.c_in(), g.c_out());
        fill(&mut g.weight, ci, co);
    }
    net
}

/// Everything the reverse pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    adj: SparseOperator,
    conv: Vec<ConvCache>,
    pool: PoolCache,
    gcn: Vec<GcnCache>,
    num_nodes: usize,
}

impl ForwardCache {
    pub fn adjacency(&self) -> &SparseOperator {
        &self.adj
    }
}

fn gather_input(
    wiring: &Wiring,
    layer: usize,
    pooled: &Tensor,
    outputs: &[Tensor],
) -> Result<Tensor> {
    let mut parts = wiring.inputs[layer].iter().map(|s| match s {
        Source::Pooled => pooled,
        Source::Layer(k) => &outputs[*k],
    });
    let mut acc = parts.next().expect("validated non-empty").clone();
    for p in parts {
        acc = Tensor::concat_cols(&acc, p)?;
    }
    Ok(acc)
}

/// Logits `[N, 2]` for `image` on `graph`.
pub fn scope_forward(
    net: &ScopeNet,
    image: &GrayImage,
    graph: &GridGraph,
) -> Result<(Tensor, ForwardCache)> {
    let g = &graph.grid;
    if image.height() != g.height || image.width() != g.width {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} for a graph built on {}x{}",
            image.height(),
            image.width(),
            g.height,
            g.width
        )));
    }
    let mut x = Tensor::new(vec![g.height, g.width, 1], image.data().to_vec())?;
    let mut conv_caches = Vec::with_capacity(net.convs.len());
    for layer in &net.convs {
        let (y, cache) = conv_forward(&x, layer)?;
        conv_caches.push(cache);
        x = y;
    }
    let (logits, mut cache) = scope_forward_features(net, &x, graph)?;
    cache.conv = conv_caches;
    Ok((logits, cache))
}

/// Forward pass from precomputed `[H, W, 64]` pixel features, skipping the
/// conv stack. The returned cache yields no conv gradients.
pub fn scope_forward_features(
    net: &ScopeNet,
    features: &Tensor,
    graph: &GridGraph,
) -> Result<(Tensor, ForwardCache)> {
    if features.shape().len() != 3 || features.shape()[2] != FEATURE_WIDTH {
        return Err(Error::ShapeMismatch(format!(
            "pixel features {:?}, expected [H, W, {FEATURE_WIDTH}]",
            features.shape()
        )));
    }
    let (pooled, pool) = pool_node_features(features, &graph.grid)?;
    let adj = super::gcn::normalized_adjacency(graph);
    let layers = net.gcn.len();
    let mut outputs: Vec<Tensor> = Vec::with_capacity(layers);
    let mut caches = Vec::with_capacity(layers);
    for l in 0..layers {
        let input = gather_input(&net.wiring, l, &pooled, &outputs)?;
        let act = if l + 1 == layers {
            Activation::None
        } else {
            Activation::Relu
        };
        let (y, cache) = gcn_forward(&adj, &input, &net.gcn[l], act)?;
        outputs.push(y);
        caches.push(cache);
    }
    let logits = outputs.pop().expect("at least one layer");
    Ok((
        logits,
        ForwardCache {
            adj,
            conv: Vec::new(),
            pool,
            gcn: caches,
            num_nodes: graph.num_nodes(),
        },
    ))
}

/// Exact parameter gradients for `grad_logits = ∂loss/∂logits`.
pub fn scope_backward(
    net: &ScopeNet,
    cache: &ForwardCache,
    grad_logits: &Tensor,
) -> Result<ScopeNet> {
    if grad_logits.shape() != [cache.num_nodes, CLASSES] || cache.gcn.len() != net.gcn.len() {
        return Err(Error::StaleCache(format!(
            "logit gradient {:?} for a cache of {} nodes",
            grad_logits.shape(),
            cache.num_nodes
        )));
    }
    let mut grads = ScopeNet::zeros();
    let layers = net.gcn.len();
    let mut out_grads: Vec<Option<Tensor>> = vec![None; layers];
    out_grads[layers - 1] = Some(grad_logits.clone());
    let mut pooled_grad = Tensor::zeros(&[cache.num_nodes, FEATURE_WIDTH]);

    for l in (0..layers).rev() {
        let g = out_grads[l]
            .take()
            .unwrap_or_else(|| Tensor::zeros(cache.gcn[l].output().shape()));
        let (gin, gl) = gcn_backward(&cache.adj, &cache.gcn[l], &net.gcn[l], &g)?;
        grads.gcn[l] = gl;
        let mut rest = gin;
        for &src in &net.wiring.inputs[l] {
            let w = net.wiring.source_width(src);
            let (part, tail) = if rest.rows_cols().1 == w {
                (rest, Tensor::zeros(&[cache.num_nodes, 0]))
            } else {
                rest.split_cols(w)
            };
            rest = tail;
            match src {
                Source::Pooled => pooled_grad.add_assign(&part),
                Source::Layer(k) => match &mut out_grads[k] {
                    Some(acc) => acc.add_assign(&part),
                    slot @ None => *slot = Some(part),
                },
            }
        }
    }

    if cache.conv.is_empty() {
        return Ok(grads);
    }
    let mut g = backprop_pool(&pooled_grad, &cache.pool)?;
    for i in (0..net.convs.len()).rev() {
        let (gin, gl) = conv_backward(&cache.conv[i], &net.convs[i], &g, i > 0)?;
        grads.convs[i] = gl;
        if let Some(gin) = gin {
            g = gin;
        }
    }
    Ok(grads)
}
