//! 3×3 same-padding convolution with ReLU, lowered to a GEMM over
//! im2col patches. Tensors are `[H, W, C]`, kernels `[3, 3, C_in, C_out]`.

use super::linalg::gemm;
use super::Tensor;
use crate::error::{Error, Result};

pub const KERNEL: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl ConvLayer {
    pub fn zeros(c_in: usize, c_out: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[KERNEL, KERNEL, c_in, c_out]),
            bias: Tensor::zeros(&[c_out]),
        }
    }

    pub fn c_in(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn c_out(&self) -> usize {
        self.weight.shape()[3]
    }
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    height: usize,
    width: usize,
    c_in: usize,
    /// `[H·W, 9·C_in]` patch matrix.
    cols: Vec<f64>,
    /// Post-ReLU output, used as the activation mask.
    output: Tensor,
}

fn im2col(input: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let k = KERNEL * KERNEL * c;
    let mut cols = vec![0.0; h * w * k];
    for r in 0..h {
        for q in 0..w {
            let row = &mut cols[(r * w + q) * k..(r * w + q + 1) * k];
            for kh in 0..KERNEL {
                let y = r as isize + kh as isize - 1;
                if y < 0 || y as usize >= h {
                    continue;
                }
                for kw in 0..KERNEL {
                    let x = q as isize + kw as isize - 1;
                    if x < 0 || x as usize >= w {
                        continue;
                    }
                    let src = (y as usize * w + x as usize) * c;
                    let dst = (kh * KERNEL + kw) * c;
                    row[dst..dst + c].copy_from_slice(&input[src..src + c]);
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let k = KERNEL * KERNEL * c;
    let mut out = vec![0.0; h * w * c];
    for r in 0..h {
        for q in 0..w {
            let row = &cols[(r * w + q) * k..(r * w + q + 1) * k];
            for kh in 0..KERNEL {
                let y = r as isize + kh as isize - 1;
                if y < 0 || y as usize >= h {
                    continue;
                }
                for kw in 0..KERNEL {
                    let x = q as isize + kw as isize - 1;
                    if x < 0 || x as usize >= w {
                        continue;
                    }
                    let dst = (y as usize * w + x as usize) * c;
                    let src = (kh * KERNEL + kw) * c;
                    for (o, v) in out[dst..dst + c].iter_mut().zip(&row[src..src + c]) {
                        *o += v;
                    }
                }
            }
        }
    }
    out
}

/// `ReLU(cross_correlate(input, weight) + bias)` with zero padding 1, stride 1.
pub fn conv_forward(input: &Tensor, layer: &ConvLayer) -> Result<(Tensor, ConvCache)> {
    let s = input.shape();
    if s.len() != 3 || s[2] != layer.c_in() {
        return Err(Error::ShapeMismatch(format!(
            "conv input {s:?} for a layer with {} input channels",
            layer.c_in()
        )));
    }
    let (h, w, c_in, c_out) = (s[0], s[1], s[2], layer.c_out());
    let cols = im2col(input.data(), h, w, c_in);
    let mut out = Vec::with_capacity(h * w * c_out);
    for _ in 0..h * w {
        out.extend_from_slice(layer.bias.data());
    }
    gemm(
        h * w,
        KERNEL * KERNEL * c_in,
        c_out,
        &cols,
        false,
        layer.weight.data(),
        false,
        1.0,
        &mut out,
    );
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    let output = Tensor::new(vec![h, w, c_out], out)?;
    Ok((
        output.clone(),
        ConvCache {
            height: h,
            width: w,
            c_in,
            cols,
            output,
        },
    ))
}

/// Returns `(grad_input, grad_layer)`; the input gradient is skipped when
/// `need_input` is false.
pub fn conv_backward(
    cache: &ConvCache,
    layer: &ConvLayer,
    grad_out: &Tensor,
    need_input: bool,
) -> Result<(Option<Tensor>, ConvLayer)> {
    let (h, w, c_in) = (cache.height, cache.width, cache.c_in);
    let c_out = layer.c_out();
    if grad_out.shape() != [h, w, c_out] || layer.c_in() != c_in {
        return Err(Error::StaleCache(format!(
            "conv gradient {:?} vs cached [{h}, {w}, {c_out}]",
            grad_out.shape()
        )));
    }
    let mut g: Vec<f64> = grad_out.data().to_vec();
    for (gv, &o) in g.iter_mut().zip(cache.output.data()) {
        if o <= 0.0 {
            *gv = 0.0;
        }
    }
    let k = KERNEL * KERNEL * c_in;
    let mut gw = vec![0.0; k * c_out];
    gemm(k, h * w, c_out, &cache.cols, true, &g, false, 0.0, &mut gw);
    let mut gb = vec![0.0; c_out];
    for row in g.chunks_exact(c_out) {
        for (b, v) in gb.iter_mut().zip(row) {
            *b += v;
        }
    }
    let grad_input = if need_input {
        let mut gcols = vec![0.0; h * w * k];
        gemm(
            h * w,
            c_out,
            k,
            &g,
            false,
            layer.weight.data(),
            true,
            0.0,
            &mut gcols,
        );
        Some(Tensor::new(vec![h, w, c_in], col2im(&gcols, h, w, c_in))?)
    } else {
        None
    };
    Ok((
        grad_input,
        ConvLayer {
            weight: Tensor::new(vec![KERNEL, KERNEL, c_in, c_out], gw)?,
            bias: Tensor::new(vec![c_out], gb)?,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(
            shape.to_vec(),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    /// Direct six-loop convolution.
    fn naive(input: &Tensor, layer: &ConvLayer) -> Vec<f64> {
        let s = input.shape();
        let (h, w, ci, co) = (s[0], s[1], s[2], layer.c_out());
        let wt = layer.weight.data();
        let mut out = vec![0.0; h * w * co];
        for r in 0..h {
            for c in 0..w {
                for o in 0..co {
                    let mut acc = layer.bias.data()[o];
                    for kh in 0..3 {
                        for kw in 0..3 {
                            let (y, x) =
                                (r as isize + kh as isize - 1, c as isize + kw as isize - 1);
                            if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
                                continue;
                            }
                            for i in 0..ci {
                                acc += input.data()[(y as usize * w + x as usize) * ci + i]
                                    * wt[((kh * 3 + kw) * ci + i) * co + o];
                            }
                        }
                    }
                    out[(r * w + c) * co + o] = acc.max(0.0);
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel() {
        let mut layer = ConvLayer::zeros(1, 1);
        layer.weight.data_mut()[4] = 1.0;
        let input = Tensor::new(vec![3, 4, 1], (0..12).map(|i| i as f64 * 0.5).collect()).unwrap();
        let (out, _) = conv_forward(&input, &layer).unwrap();
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn zero_input_gives_relu_bias() {
        let mut layer = ConvLayer::zeros(2, 3);
        layer.bias = Tensor::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let (out, _) = conv_forward(&Tensor::zeros(&[2, 2, 2]), &layer).unwrap();
        for px in out.data().chunks(3) {
            assert_eq!(px, &[0.5, 0.0, 2.0]);
        }
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (ci, co) in [(1, 4), (3, 5)] {
            let input = random(&[6, 6, ci], &mut rng);
            let layer = ConvLayer {
                weight: random(&[3, 3, ci, co], &mut rng),
                bias: random(&[co], &mut rng),
            };
            let (out, _) = conv_forward(&input, &layer).unwrap();
            for (a, b) in out.data().iter().zip(naive(&input, &layer)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_channel_mismatch() {
        let layer = ConvLayer::zeros(2, 3);
        assert!(conv_forward(&Tensor::zeros(&[4, 4, 1]), &layer).is_err());
        let (_, cache) = conv_forward(&Tensor::zeros(&[4, 4, 2]), &layer).unwrap();
        assert!(matches!(
            conv_backward(&cache, &layer, &Tensor::zeros(&[4, 4, 2]), true),
            Err(Error::StaleCache(_))
        ));
    }
}
