//! Symmetric-normalised graph convolution `act(D̂^{-1/2} (A + I) D̂^{-1/2} X W + b)`.

use super::linalg::gemm;
use super::Tensor;
use crate::error::{Error, Result};
use crate::graph::GridGraph;

/// Square sparse matrix in compressed-row form; column indices sorted per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseOperator {
    /// Builds `D̂^{-1/2} (A + I) D̂^{-1/2}` from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j) in edges {
            nbrs[i].push(j);
            nbrs[j].push(i);
        }
        let inv_sqrt: Vec<f64> = nbrs.iter().map(|v| 1.0 / (v.len() as f64).sqrt()).collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, row) in nbrs.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            for &j in row.iter() {
                col_idx.push(j);
                values.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self · x` for `x` of shape `[n, c]`.
    pub fn matmul(&self, x: &Tensor) -> Result<Tensor> {
        let (rows, c) = x.rows_cols();
        if rows != self.n || x.shape().len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "operator of size {} applied to {:?}",
                self.n,
                x.shape()
            )));
        }
        let src = x.data();
        let mut out = vec![0.0; self.n * c];
        for i in 0..self.n {
            let dst = &mut out[i * c..(i + 1) * c];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let j = self.col_idx[k];
                for (o, v) in dst.iter_mut().zip(&src[j * c..(j + 1) * c]) {
                    *o += a * v;
                }
            }
        }
        Tensor::new(vec![self.n, c], out)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i * self.n + self.col_idx[k]] = self.values[k];
            }
        }
        d
    }
}

pub fn normalized_adjacency(graph: &GridGraph) -> SparseOperator {
    SparseOperator::from_edges(graph.num_nodes(), &graph.edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    /// `[C_in, C_out]`
    pub weight: Tensor,
    /// `[C_out]`
    pub bias: Tensor,
}

impl GcnLayer {
    pub fn zeros(c_in: usize, c_out: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[c_in, c_out]),
            bias: Tensor::zeros(&[c_out]),
        }
    }

    pub fn c_in(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn c_out(&self) -> usize {
        self.weight.shape()[1]
    }
}

#[derive(Debug, Clone)]
pub struct GcnCache {
    input: Tensor,
    output: Tensor,
    activation: Activation,
}

impl GcnCache {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

pub fn gcn_forward(
    adj: &SparseOperator,
    input: &Tensor,
    layer: &GcnLayer,
    activation: Activation,
) -> Result<(Tensor, GcnCache)> {
    let (n, c_in) = input.rows_cols();
    if input.shape().len() != 2 || c_in != layer.c_in() || n != adj.n {
        return Err(Error::ShapeMismatch(format!(
            "gcn input {:?} for layer {}→{} on {} vertices",
            input.shape(),
            layer.c_in(),
            layer.c_out(),
            adj.n
        )));
    }
    let c_out = layer.c_out();
    // X·W first: C_out never exceeds C_in in this network
    let mut xw = vec![0.0; n * c_out];
    gemm(
        n,
        c_in,
        c_out,
        input.data(),
        false,
        layer.weight.data(),
        false,
        0.0,
        &mut xw,
    );
    let mut out = adj.matmul(&Tensor::new(vec![n, c_out], xw)?)?;
    let b = layer.bias.data();
    for row in out.data_mut().chunks_exact_mut(c_out) {
        for (v, bv) in row.iter_mut().zip(b) {
            *v += bv;
            if activation == Activation::Relu && *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    Ok((
        out.clone(),
        GcnCache {
            input: input.clone(),
            output: out,
            activation,
        },
    ))
}

/// Returns `(grad_input, grad_layer)`.
pub fn gcn_backward(
    adj: &SparseOperator,
    cache: &GcnCache,
    layer: &GcnLayer,
    grad_out: &Tensor,
) -> Result<(Tensor, GcnLayer)> {
    if grad_out.shape() != cache.output.shape() {
        return Err(Error::StaleCache(format!(
            "gcn gradient {:?} vs cached output {:?}",
            grad_out.shape(),
            cache.output.shape()
        )));
    }
    let (n, c_in) = cache.input.rows_cols();
    let c_out = layer.c_out();
    let mut g = grad_out.clone();
    if cache.activation == Activation::Relu {
        for (gv, &o) in g.data_mut().iter_mut().zip(cache.output.data()) {
            if o <= 0.0 {
                *gv = 0.0;
            }
        }
    }
    let mut gb = vec![0.0; c_out];
    for row in g.data().chunks_exact(c_out) {
        for (b, v) in gb.iter_mut().zip(row) {
            *b += v;
        }
    }
    // the normalised operator is symmetric, so Âᵀ = Â
    let gp = adj.matmul(&g)?;
    let mut gw = vec![0.0; c_in * c_out];
    gemm(
        c_in,
        n,
        c_out,
        cache.input.data(),
        true,
        gp.data(),
        false,
        0.0,
        &mut gw,
    );
    let mut gx = vec![0.0; n * c_in];
    gemm(
        n,
        c_out,
        c_in,
        gp.data(),
        false,
        layer.weight.data(),
        true,
        0.0,
        &mut gx,
    );
    Ok((
        Tensor::new(vec![n, c_in], gx)?,
        GcnLayer {
            weight: Tensor::new(vec![c_in, c_out], gw)?,
            bias: Tensor::new(vec![c_out], gb)?,
        },
    ))
}
