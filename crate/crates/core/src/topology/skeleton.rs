//! Zhang–Suen thinning with a simple-point guard.
//!
//! Each sub-iteration marks candidates against a snapshot, exactly as in
//! the classic two-pass scheme. Marked pixels are then removed one at a time
//! in row-major order, and only if they are still simple points of the
//! current image with at least two foreground neighbours. The plain
//! parallel removal wipes out 2×2 blocks and can split two-pixel diagonals;
//! the guard keeps β0 and β1 intact.

use crate::image::BinaryImage;

/// Neighbours P2..P9 clockwise from north.
const ZS_OFFSETS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

fn neighbours(m: &BinaryImage, r: usize, c: usize) -> [bool; 8] {
    let mut out = [false; 8];
    for (o, (dr, dc)) in out.iter_mut().zip(ZS_OFFSETS) {
        *o = m.get_or_bg(r as isize + dr, c as isize + dc);
    }
    out
}

/// 0→1 transitions around the ring P2, P3, …, P9, P2.
fn transitions(p: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count()
}

/// Yokoi connectivity number for 8-connected foreground equals one.
pub fn is_simple(m: &BinaryImage, r: usize, c: usize) -> bool {
    let p = neighbours(m, r, c);
    // Yokoi order: E, NE, N, NW, W, SW, S, SE (counter-clockwise from east)
    let x = [p[2], p[1], p[0], p[7], p[6], p[5], p[4], p[3]];
    let bg = |k: usize| !x[k % 8] as i32;
    let n8: i32 = [0usize, 2, 4, 6]
        .iter()
        .map(|&k| bg(k) - bg(k) * bg(k + 1) * bg(k + 2))
        .sum();
    n8 == 1
}

fn thinning_pass(m: &mut BinaryImage, first: bool) -> bool {
    let (h, w) = (m.height(), m.width());
    let mut marked = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !m.get(r, c) {
                continue;
            }
            let p = neighbours(m, r, c);
            let b = p.iter().filter(|&&v| v).count();
            if !(2..=6).contains(&b) || transitions(&p) != 1 {
                continue;
            }
            let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
            let keep = if first {
                (p2 && p4 && p6) || (p4 && p6 && p8)
            } else {
                (p2 && p4 && p8) || (p2 && p6 && p8)
            };
            if !keep {
                marked.push((r, c));
            }
        }
    }
    let mut changed = false;
    for (r, c) in marked {
        let b = neighbours(m, r, c).iter().filter(|&&v| v).count();
        if b >= 2 && is_simple(m, r, c) {
            m.set(r, c, false);
            changed = true;
        }
    }
    changed
}

/// Thins `mask` to a one-pixel-wide 8-connected skeleton.
pub fn skeletonize(mask: &BinaryImage) -> BinaryImage {
    let mut out = mask.clone();
    loop {
        let a = thinning_pass(&mut out, true);
        let b = thinning_pass(&mut out, false);
        if !a && !b {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::betti_numbers;

    #[test]
    fn single_pixel_is_fixed() {
        let m = BinaryImage::from_rows(&[[0, 0, 0], [0, 1, 0], [0, 0, 0]]);
        assert_eq!(skeletonize(&m), m);
    }

    #[test]
    fn thick_bar_thins_to_a_line() {
        let mut m = BinaryImage::empty(9, 20);
        for r in 2..7 {
            for c in 2..18 {
                m.set(r, c, true);
            }
        }
        let s = skeletonize(&m);
        assert_eq!(betti_numbers(&s), (1, 0));
        for c in 4..16 {
            let col: usize = (0..9).filter(|&r| s.get(r, c)).count();
            assert_eq!(col, 1, "column {c}");
        }
        assert_eq!(skeletonize(&s), s);
    }

    #[test]
    fn two_by_two_block_survives() {
        let m = BinaryImage::from_rows(&[[0, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]]);
        let s = skeletonize(&m);
        assert_eq!(betti_numbers(&s).0, 1);
        assert!(s.count() >= 1);
    }

    #[test]
    fn annulus_keeps_its_loop() {
        let mut m = BinaryImage::empty(13, 13);
        for r in 1..12 {
            for c in 1..12 {
                let inner = (4..9).contains(&r) && (4..9).contains(&c);
                m.set(r, c, !inner);
            }
        }
        let s = skeletonize(&m);
        assert_eq!(betti_numbers(&s), (1, 1));
        assert!(s.count() < m.count());
        assert_eq!(skeletonize(&s), s);
    }

    #[test]
    fn simple_point_cases() {
        let end = BinaryImage::from_rows(&[[0, 0, 0], [0, 1, 1], [0, 0, 0]]);
        assert!(is_simple(&end, 1, 1));
        let bridge = BinaryImage::from_rows(&[[0, 0, 0], [1, 1, 1], [0, 0, 0]]);
        assert!(!is_simple(&bridge, 1, 1));
        let isolated = BinaryImage::from_rows(&[[0, 0, 0], [0, 1, 0], [0, 0, 0]]);
        assert!(!is_simple(&isolated, 1, 1));
        let interior = BinaryImage::from_rows(&[[1, 1, 1], [1, 1, 1], [1, 1, 1]]);
        assert!(!is_simple(&interior, 1, 1));
    }
}
