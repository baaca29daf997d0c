//! The visual graph: one vertex per `n×n` patch, 8-neighbour edges.
//!
//! Vertex ids are row-major over the patch grid (`id = row * cols + col`),
//! which also fixes the node-to-grid reshape used by the losses.

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};
use crate::nn::Tensor;

/// Per-vertex features, an `[N, C]` tensor whose row `i` belongs to vertex `i`.
pub type NodeFeatures = Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub height: usize,
    pub width: usize,
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
}

impl PatchGrid {
    pub fn new(height: usize, width: usize, n: usize) -> Result<Self> {
        if n == 0
            || !height.is_multiple_of(n)
            || !width.is_multiple_of(n)
            || height == 0
            || width == 0
        {
            return Err(Error::NonDivisiblePatch { height, width, n });
        }
        Ok(Self {
            height,
            width,
            n,
            rows: height / n,
            cols: width / n,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.rows * self.cols
    }

    /// Vertex owning pixel `(r, c)`.
    #[inline]
    pub fn node_of(&self, r: usize, c: usize) -> usize {
        (r / self.n) * self.cols + c / self.n
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "{len} node values for a {}x{} patch grid",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridGraph {
    pub grid: PatchGrid,
    /// Undirected edges `(i, j)` with `i < j`, sorted lexicographically.
    pub edges: Vec<(usize, usize)>,
}

impl GridGraph {
    pub fn num_nodes(&self) -> usize {
        self.grid.num_nodes()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes()];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

pub fn build_grid_graph(height: usize, width: usize, n: usize) -> Result<GridGraph> {
    let grid = PatchGrid::new(height, width, n)?;
    let (rows, cols) = (grid.rows, grid.cols);
    let mut edges = Vec::with_capacity(4 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            // forward neighbours only, in increasing id order
            if c + 1 < cols {
                edges.push((id, id + 1));
            }
            if r + 1 < rows {
                if c > 0 {
                    edges.push((id, id + cols - 1));
                }
                edges.push((id, id + cols));
                if c + 1 < cols {
                    edges.push((id, id + cols + 1));
                }
            }
        }
    }
    debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
    Ok(GridGraph { grid, edges })
}

/// Winning pixel of every `(vertex, channel)` slot of a max-pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolCache {
    pub grid: PatchGrid,
    pub channels: usize,
    /// `argmax[v * channels + ch]` is a row-major pixel index.
    pub argmax: Vec<usize>,
}

/// Per-channel `n×n` max-pool of an `[H, W, C]` pixel field into `[N, C]`.
/// Ties go to the first pixel in row-major order within the patch.
pub fn pool_node_features(field: &Tensor, grid: &PatchGrid) -> Result<(NodeFeatures, PoolCache)> {
    let shape = field.shape();
    if shape.len() != 3 || shape[0] != grid.height || shape[1] != grid.width {
        return Err(Error::DimensionMismatch(format!(
            "pixel field {shape:?} for a {}x{} grid",
            grid.height, grid.width
        )));
    }
    let ch = shape[2];
    let src = field.data();
    let nodes = grid.num_nodes();
    let mut out = vec![f64::NEG_INFINITY; nodes * ch];
    let mut argmax = vec![usize::MAX; nodes * ch];
    // row-major sweep visits every patch's pixels in row-major order, so a
    // strict comparison keeps the first maximum
    for r in 0..grid.height {
        for c in 0..grid.width {
            let px = r * grid.width + c;
            let v = grid.node_of(r, c);
            let in_row = &src[px * ch..(px + 1) * ch];
            let out_row = &mut out[v * ch..(v + 1) * ch];
            let arg_row = &mut argmax[v * ch..(v + 1) * ch];
            for k in 0..ch {
                if in_row[k] > out_row[k] || arg_row[k] == usize::MAX {
                    out_row[k] = in_row[k];
                    arg_row[k] = px;
                }
            }
        }
    }
    Ok((
        Tensor::new(vec![nodes, ch], out)?,
        PoolCache {
            grid: *grid,
            channels: ch,
            argmax,
        },
    ))
}

/// Routes node gradients back to each slot's winning pixel.
pub fn backprop_pool(grad_nodes: &NodeFeatures, cache: &PoolCache) -> Result<Tensor> {
    let g = &cache.grid;
    if grad_nodes.shape() != [g.num_nodes(), cache.channels] {
        return Err(Error::StaleCache(format!(
            "node gradient {:?} vs cached pool [{}, {}]",
            grad_nodes.shape(),
            g.num_nodes(),
            cache.channels
        )));
    }
    let ch = cache.channels;
    let mut out = vec![0.0; g.height * g.width * ch];
    for (slot, (&px, &gv)) in cache.argmax.iter().zip(grad_nodes.data()).enumerate() {
        out[px * ch + slot % ch] += gv;
    }
    Tensor::new(vec![g.height, g.width, ch], out)
}

/// Replicates each vertex value over its `n×n` pixel block.
pub fn nodes_to_pixels<T: Copy>(preds: &[T], grid: &PatchGrid) -> Result<Vec<T>> {
    grid.check_len(preds.len())?;
    let mut out = Vec::with_capacity(grid.height * grid.width);
    for r in 0..grid.height {
        for c in 0..grid.width {
            out.push(preds[grid.node_of(r, c)]);
        }
    }
    Ok(out)
}

pub fn nodes_to_gray(preds: &[f64], grid: &PatchGrid) -> Result<GrayImage> {
    GrayImage::new(grid.height, grid.width, nodes_to_pixels(preds, grid)?)
}

pub fn nodes_to_mask(preds: &[bool], grid: &PatchGrid) -> Result<BinaryImage> {
    BinaryImage::new(grid.height, grid.width, nodes_to_pixels(preds, grid)?)
}

/// Node label per patch: foreground iff any pixel in the patch is.
pub fn pool_mask(mask: &BinaryImage, grid: &PatchGrid) -> Result<Vec<bool>> {
    if mask.height() != grid.height || mask.width() != grid.width {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} for a {}x{} grid",
            mask.height(),
            mask.width(),
            grid.height,
            grid.width
        )));
    }
    let mut out = vec![false; grid.num_nodes()];
    for r in 0..grid.height {
        for c in 0..grid.width {
            if mask.get(r, c) {
                out[grid.node_of(r, c)] = true;
            }
        }
    }
    Ok(out)
}

/// A `rows × cols` scalar field stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} field",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_mask(mask: &[bool], rows: usize, cols: usize) -> Result<Self> {
        Self::new(
            rows,
            cols,
            mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn same_dims(&self, other: &GridField) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Row-major flatten, the inverse of the reshape.
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Puts vertex predictions back on the patch grid, row-major.
pub fn reshape_nodes_to_grid(preds: &[f64], grid: &PatchGrid) -> Result<GridField> {
    grid.check_len(preds.len())?;
    GridField::new(grid.rows, grid.cols, preds.to_vec())
}
