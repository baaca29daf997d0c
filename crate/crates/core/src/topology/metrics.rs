use super::euler::{betti_numbers, euler_characteristic};
use super::skeleton::skeletonize;
use crate::error::Result;
use crate::image::BinaryImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub dice: f64,
}

/// Per-pair evaluation. `beta0`, `beta1` and `euler` describe the
/// prediction; the `gt_` fields describe the reference mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySummary {
    pub beta0: usize,
    pub beta1: usize,
    pub euler: i64,
    pub gt_beta0: usize,
    pub gt_beta1: usize,
    pub gt_euler: i64,
    pub err_b0: usize,
    pub err_b1: usize,
    pub err_chi: usize,
    pub cldice: f64,
    pub precision: f64,
    pub recall: f64,
    pub dice: f64,
}

/// Arithmetic means of the reported columns over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanSummary {
    pub precision: f64,
    pub recall: f64,
    pub dice: f64,
    pub cldice: f64,
    pub err_b0: f64,
    pub err_b1: f64,
    pub err_chi: f64,
}

pub fn mean_summary(rows: &[TopologySummary]) -> MeanSummary {
    if rows.is_empty() {
        return MeanSummary::default();
    }
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&TopologySummary) -> f64| rows.iter().map(f).sum::<f64>() / n;
    MeanSummary {
        precision: mean(&|r| r.precision),
        recall: mean(&|r| r.recall),
        dice: mean(&|r| r.dice),
        cldice: mean(&|r| r.cldice),
        err_b0: mean(&|r| r.err_b0 as f64),
        err_b1: mean(&|r| r.err_b1 as f64),
        err_chi: mean(&|r| r.err_chi as f64),
    }
}

fn overlap(a: &BinaryImage, b: &BinaryImage) -> usize {
    a.data()
        .iter()
        .zip(b.data())
        .filter(|(x, y)| **x && **y)
        .count()
}

/// Hard clDice from Zhang–Suen skeletons. Both skeletons empty gives 1,
/// exactly one empty gives 0.
pub fn cldice_metric(pred: &BinaryImage, gt: &BinaryImage) -> Result<f64> {
    pred.same_dims(gt)?;
    let sp = skeletonize(pred);
    let sg = skeletonize(gt);
    let (np, ng) = (sp.count(), sg.count());
    match (np, ng) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let tprec = overlap(&sp, gt) as f64 / np as f64;
    let tsens = overlap(&sg, pred) as f64 / ng as f64;
    if tprec + tsens == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * tprec * tsens / (tprec + tsens))
}

/// Precision, recall and Dice with every `0/0` taken as 1.
pub fn pixel_metrics(pred: &BinaryImage, gt: &BinaryImage) -> Result<PixelMetrics> {
    pred.same_dims(gt)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(PixelMetrics {
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        dice: ratio(2 * tp, 2 * tp + fp + fn_),
    })
}

pub fn evaluate_pair(pred: &BinaryImage, gt: &BinaryImage) -> Result<TopologySummary> {
    let px = pixel_metrics(pred, gt)?;
    let cldice = cldice_metric(pred, gt)?;
    let (beta0, beta1) = betti_numbers(pred);
    let (gt_beta0, gt_beta1) = betti_numbers(gt);
    let euler = euler_characteristic(pred);
    let gt_euler = euler_characteristic(gt);
    debug_assert_eq!(euler, beta0 as i64 - beta1 as i64);
    debug_assert_eq!(gt_euler, gt_beta0 as i64 - gt_beta1 as i64);
    Ok(TopologySummary {
        beta0,
        beta1,
        euler,
        gt_beta0,
        gt_beta1,
        gt_euler,
        err_b0: beta0.abs_diff(gt_beta0),
        err_b1: beta1.abs_diff(gt_beta1),
        err_chi: euler.abs_diff(gt_euler) as usize,
        cldice,
        precision: px.precision,
        recall: px.recall,
        dice: px.dice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube(gap: bool) -> BinaryImage {
        let mut m = BinaryImage::empty(9, 30);
        for r in 3..6 {
            for c in 2..28 {
                m.set(r, c, !(gap && (13..16).contains(&c)));
            }
        }
        m
    }

    #[test]
    fn identical_masks() {
        let gt = tube(false);
        assert_eq!(cldice_metric(&gt, &gt).unwrap(), 1.0);
        let s = evaluate_pair(&gt, &gt).unwrap();
        assert_eq!((s.err_b0, s.err_b1, s.err_chi), (0, 0, 0));
        assert_eq!(
            (s.precision, s.recall, s.dice, s.cldice),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn empty_conventions() {
        let gt = tube(false);
        let empty = BinaryImage::empty(9, 30);
        assert_eq!(cldice_metric(&empty, &gt).unwrap(), 0.0);
        assert_eq!(cldice_metric(&gt, &empty).unwrap(), 0.0);
        assert_eq!(cldice_metric(&empty, &empty).unwrap(), 1.0);
        let px = pixel_metrics(&empty, &empty).unwrap();
        assert_eq!((px.precision, px.recall, px.dice), (1.0, 1.0, 1.0));
    }

    #[test]
    fn gap_lowers_cldice_and_splits_component() {
        let gt = tube(false);
        let cut = tube(true);
        let whole = cldice_metric(&gt, &gt).unwrap();
        let broken = cldice_metric(&cut, &gt).unwrap();
        assert!(broken < whole);
        assert_eq!(evaluate_pair(&cut, &gt).unwrap().err_b0, 1);
    }

    #[test]
    fn complement_scores_zero() {
        let gt = BinaryImage::from_rows(&[[1, 1, 0, 0], [1, 1, 0, 0]]);
        let pred = BinaryImage::new(2, 4, gt.data().iter().map(|&b| !b).collect()).unwrap();
        let px = pixel_metrics(&pred, &gt).unwrap();
        assert_eq!((px.precision, px.recall, px.dice), (0.0, 0.0, 0.0));
    }

    #[test]
    fn extra_pixel_counts_as_component() {
        let gt = tube(false);
        let mut pred = gt.clone();
        pred.set(0, 0, true);
        assert_eq!(evaluate_pair(&pred, &gt).unwrap().err_b0, 1);
    }

    #[test]
    fn dimension_mismatch() {
        let a = BinaryImage::empty(3, 3);
        let b = BinaryImage::empty(3, 4);
        assert!(pixel_metrics(&a, &b).is_err());
        assert!(cldice_metric(&a, &b).is_err());
        assert!(evaluate_pair(&a, &b).is_err());
    }
}
