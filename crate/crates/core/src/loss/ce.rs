use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Mean two-class cross-entropy over nodes, with gradient `(softmax − onehot) / N`.
pub fn cross_entropy_loss(logits: &Tensor, labels: &[bool]) -> Result<(f64, Tensor)> {
    let (n, c) = logits.rows_cols();
    if c != 2 || logits.shape().len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "logits {:?}, expected [N, 2]",
            logits.shape()
        )));
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(2 * n);
    for (row, &y) in logits.data().chunks_exact(2).zip(labels) {
        let m = row[0].max(row[1]);
        let (e0, e1) = ((row[0] - m).exp(), (row[1] - m).exp());
        let z = e0 + e1;
        let target = y as usize;
        loss -= row[target] - m - z.ln();
        let (p0, p1) = (e0 / z, e1 / z);
        grad.push((p0 - if target == 0 { 1.0 } else { 0.0 }) * inv_n);
        grad.push((p1 - if target == 1 { 1.0 } else { 0.0 }) * inv_n);
    }
    Ok((loss * inv_n, Tensor::new(vec![n, 2], grad)?))
}
