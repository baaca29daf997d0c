//! Differentiable skeleton from iterated min/max filters.
//!
//! Erosion is a minimum over the 4-neighbour cross, dilation a maximum over
//! the 3×3 square. Pixels outside the field read as 0 (background). Each
//! filter remembers which input won every window so the reverse pass can
//! route gradients; ties go to the first candidate in row-major order.

use crate::graph::GridField;

const NONE: usize = usize::MAX;

const CROSS: [(isize, isize); 5] = [(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)];
const SQUARE: [(isize, isize); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Filtered values plus, per output pixel, the winning input index
/// (`usize::MAX` when the padding won).
fn filter(f: &GridField, window: &[(isize, isize)], take_max: bool) -> (GridField, Vec<usize>) {
    let (rows, cols) = (f.rows, f.cols);
    let mut out = Vec::with_capacity(rows * cols);
    let mut arg = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut best = f64::NAN;
            let mut best_at = NONE;
            for &(dr, dc) in window {
                let (y, x) = (r as isize + dr, c as isize + dc);
                let (v, at) = if y < 0 || x < 0 || y as usize >= rows || x as usize >= cols {
                    (0.0, NONE)
                } else {
                    let i = y as usize * cols + x as usize;
                    (f.data[i], i)
                };
                let better = if take_max { v > best } else { v < best };
                if best.is_nan() || better {
                    best = v;
                    best_at = at;
                }
            }
            out.push(best);
            arg.push(best_at);
        }
    }
    (
        GridField {
            rows,
            cols,
            data: out,
        },
        arg,
    )
}

/// Adds each output gradient to the input that won its window.
fn route(grad_out: &[f64], arg: &[usize], grad_in: &mut [f64]) {
    for (&g, &a) in grad_out.iter().zip(arg) {
        if a != NONE {
            grad_in[a] += g;
        }
    }
}

pub fn soft_erode(f: &GridField) -> GridField {
    filter(f, &CROSS, false).0
}

pub fn soft_dilate(f: &GridField) -> GridField {
    filter(f, &SQUARE, true).0
}

pub fn soft_open(f: &GridField) -> GridField {
    soft_dilate(&soft_erode(f))
}

struct Level {
    /// routing of the erosion that produced this level's field (none for level 0)
    step_arg: Option<Vec<usize>>,
    open_erode_arg: Vec<usize>,
    open_dilate_arg: Vec<usize>,
    /// `field − open(field) > 0`
    residual_pos: Vec<bool>,
    /// `relu(field − open(field))`
    residual: Vec<f64>,
}

/// A soft skeleton together with what its reverse pass needs.
pub struct SoftSkeleton {
    rows: usize,
    cols: usize,
    levels: Vec<Level>,
    /// skeleton before each update; `partials[j]` is the value after level `j`
    partials: Vec<Vec<f64>>,
    pub skeleton: GridField,
}

impl SoftSkeleton {
    pub fn new(field: &GridField, k: usize) -> Self {
        let n = field.rows * field.cols;
        let mut levels = Vec::with_capacity(k + 1);
        let mut partials: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
        let mut x = field.clone();
        for j in 0..=k {
            let step_arg = if j > 0 {
                let (e, arg) = filter(&x, &CROSS, false);
                x = e;
                Some(arg)
            } else {
                None
            };
            let (e, open_erode_arg) = filter(&x, &CROSS, false);
            let (o, open_dilate_arg) = filter(&e, &SQUARE, true);
            let mut residual = vec![0.0; n];
            let mut residual_pos = vec![false; n];
            for i in 0..n {
                let t = x.data[i] - o.data[i];
                if t > 0.0 {
                    residual[i] = t;
                    residual_pos[i] = true;
                }
            }
            let skel = match partials.last() {
                None => residual.clone(),
                Some(prev) => prev
                    .iter()
                    .zip(&residual)
                    .map(|(&s, &d)| s + (d * (1.0 - s)).max(0.0))
                    .collect(),
            };
            partials.push(skel);
            levels.push(Level {
                step_arg,
                open_erode_arg,
                open_dilate_arg,
                residual_pos,
                residual,
            });
        }
        let data = partials
            .last()
            .expect("at least one level")
            .iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        Self {
            rows: field.rows,
            cols: field.cols,
            levels,
            partials,
            skeleton: GridField {
                rows: field.rows,
                cols: field.cols,
                data,
            },
        }
    }

    /// Gradient with respect to the input field, given `∂L/∂skeleton`.
    pub fn backward(&self, grad_skel: &[f64]) -> GridField {
        let n = self.rows * self.cols;
        assert_eq!(grad_skel.len(), n, "gradient does not match skeleton");
        let last = self.partials.last().expect("at least one level");
        // clamp passes gradient where it did not clip
        let mut gs: Vec<f64> = grad_skel
            .iter()
            .zip(last)
            .map(|(&g, &s)| if (0.0..=1.0).contains(&s) { g } else { 0.0 })
            .collect();
        // gradient w.r.t. each level's residual
        let mut g_res: Vec<Vec<f64>> = vec![Vec::new(); self.levels.len()];
        for j in (1..self.levels.len()).rev() {
            let prev = &self.partials[j - 1];
            let d = &self.levels[j].residual;
            let mut gd = vec![0.0; n];
            let mut gprev = vec![0.0; n];
            for i in 0..n {
                let u = d[i] * (1.0 - prev[i]);
                let gu = if u > 0.0 { gs[i] } else { 0.0 };
                gprev[i] = gs[i] - gu * d[i];
                gd[i] = gu * (1.0 - prev[i]);
            }
            g_res[j] = gd;
            gs = gprev;
        }
        g_res[0] = gs;

        // walk the erosion chain from the deepest level back to the input
        let mut g_from_next = vec![0.0; n];
        for j in (0..self.levels.len()).rev() {
            let lv = &self.levels[j];
            let mut gx = std::mem::take(&mut g_from_next);
            let mut g_open = vec![0.0; n];
            for i in 0..n {
                if lv.residual_pos[i] {
                    let g = g_res[j][i];
                    gx[i] += g;
                    g_open[i] = -g;
                }
            }
            let mut g_eroded = vec![0.0; n];
            route(&g_open, &lv.open_dilate_arg, &mut g_eroded);
            route(&g_eroded, &lv.open_erode_arg, &mut gx);
            g_from_next = match &lv.step_arg {
                Some(arg) => {
                    let mut gp = vec![0.0; n];
                    route(&gx, arg, &mut gp);
                    gp
                }
                None => gx,
            };
        }
        GridField {
            rows: self.rows,
            cols: self.cols,
            data: g_from_next,
        }
    }
}

/// Soft skeleton after `k` erosion steps (`k = 0` is the opening residual).
pub fn soft_skeleton(field: &GridField, k: usize) -> GridField {
    SoftSkeleton::new(field, k).skeleton
}
