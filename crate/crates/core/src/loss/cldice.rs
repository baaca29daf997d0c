use super::soft_skeleton::SoftSkeleton;
use crate::error::Result;
use crate::graph::GridField;

/// Soft clDice loss and its gradient with respect to `pred`.
///
/// `Tprec = (Σ S(pred)·gt + ε) / (Σ S(pred) + ε)`,
/// `Tsens = (Σ S(gt)·pred + ε) / (Σ S(gt) + ε)`,
/// `loss = 1 − 2·Tprec·Tsens / (Tprec + Tsens)`.
pub fn soft_cldice_loss(
    pred: &GridField,
    gt: &GridField,
    k: usize,
    epsilon: f64,
) -> Result<(f64, GridField)> {
    pred.same_dims(gt)?;
    let sp = SoftSkeleton::new(pred, k);
    let sg = SoftSkeleton::new(gt, k).skeleton;

    let a = sp
        .skeleton
        .data
        .iter()
        .zip(&gt.data)
        .map(|(s, g)| s * g)
        .sum::<f64>()
        + epsilon;
    let b = sp.skeleton.data.iter().sum::<f64>() + epsilon;
    let c = sg
        .data
        .iter()
        .zip(&pred.data)
        .map(|(s, p)| s * p)
        .sum::<f64>()
        + epsilon;
    let d = sg.data.iter().sum::<f64>() + epsilon;
    let tprec = a / b;
    let tsens = c / d;
    let denom = tprec + tsens;
    let loss = 1.0 - 2.0 * tprec * tsens / denom;

    let dl_dprec = -2.0 * tsens * tsens / (denom * denom);
    let dl_dsens = -2.0 * tprec * tprec / (denom * denom);
    let grad_sp: Vec<f64> = gt
        .data
        .iter()
        .map(|&g| dl_dprec * (g / b - a / (b * b)))
        .collect();
    let mut grad = sp.backward(&grad_sp);
    for (gv, &s) in grad.data.iter_mut().zip(&sg.data) {
        *gv += dl_dsens * s / d;
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube(rows: usize, cols: usize) -> GridField {
        let mut f = GridField::zeros(rows, cols);
        for r in rows / 2 - 1..=rows / 2 + 1 {
            for c in 2..cols - 2 {
                f.data[r * cols + c] = 1.0;
            }
        }
        f
    }

    #[test]
    fn perfect_match_is_near_zero() {
        let gt = tube(9, 16);
        let (loss, _) = soft_cldice_loss(&gt, &gt, 5, 1e-6).unwrap();
        assert!(loss.abs() < 1e-6, "{loss}");
    }

    #[test]
    fn uniform_half_is_worse() {
        let gt = tube(9, 16);
        let half = GridField::new(9, 16, vec![0.5; 144]).unwrap();
        let (perfect, _) = soft_cldice_loss(&gt, &gt, 5, 1e-6).unwrap();
        let (uniform, _) = soft_cldice_loss(&half, &gt, 5, 1e-6).unwrap();
        assert!(uniform > perfect);
        assert!((0.0..=1.0).contains(&uniform));
    }

    /// At an exact binary match the only non-zero gradient components push
    /// against the `[0, 1]` box (up where `pred = 1`, down where `pred = 0`),
    /// so the projected gradient vanishes.
    #[test]
    fn projected_gradient_vanishes_at_match() {
        let eps = 1e-6;
        for gt in [tube(9, 16), tube(12, 20)] {
            let (_, g) = soft_cldice_loss(&gt, &gt, 5, eps).unwrap();
            for (&gv, &p) in g.data.iter().zip(&gt.data) {
                let projected = if p >= 1.0 { gv.max(0.0) } else { gv.min(0.0) };
                assert!(projected.abs() <= 10.0 * eps, "{gv} at pred {p}");
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = GridField::zeros(3, 3);
        let b = GridField::zeros(3, 4);
        assert!(soft_cldice_loss(&a, &b, 2, 1e-6).is_err());
    }
}
