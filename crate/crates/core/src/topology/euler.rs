use super::components::{connected_components, Connectivity};
use crate::image::BinaryImage;

/// `(β0, β1)`: 8-connected foreground components and bounded 4-connected
/// background components (holes).
pub fn betti_numbers(mask: &BinaryImage) -> (usize, usize) {
    let (_, beta0) = connected_components(mask, Connectivity::Eight);
    // one ring of padding makes the unbounded exterior a single component
    let padded = mask.padded(1);
    let complement = BinaryImage::new(
        padded.height(),
        padded.width(),
        padded.data().iter().map(|&b| !b).collect(),
    )
    .expect("same dims");
    let (_, bg) = connected_components(&complement, Connectivity::Four);
    (beta0, bg - 1)
}

/// Euler characteristic of the foreground, via the 2×2 quad counter.
pub fn euler_characteristic(mask: &BinaryImage) -> i64 {
    euler_quads(mask)
}

/// `V − E + F` of the union of closed unit squares, one per foreground pixel.
/// Diagonal neighbours share a corner vertex, which matches 8-connectivity.
pub fn euler_vef(mask: &BinaryImage) -> i64 {
    let (h, w) = (mask.height(), mask.width());
    let mut vertices = vec![false; (h + 1) * (w + 1)];
    // horizontal edges: (h+1) rows of w; vertical edges: h rows of (w+1)
    let mut h_edges = vec![false; (h + 1) * w];
    let mut v_edges = vec![false; h * (w + 1)];
    let mut faces = 0i64;
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            faces += 1;
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                vertices[(r + dr) * (w + 1) + c + dc] = true;
            }
            h_edges[r * w + c] = true;
            h_edges[(r + 1) * w + c] = true;
            v_edges[r * (w + 1) + c] = true;
            v_edges[r * (w + 1) + c + 1] = true;
        }
    }
    let count = |v: &[bool]| v.iter().filter(|&&b| b).count() as i64;
    count(&vertices) - count(&h_edges) - count(&v_edges) + faces
}

/// Four times the contribution of each 2×2 pattern. Bit 0 is the top-left
/// pixel, bit 1 top-right, bit 2 bottom-left, bit 3 bottom-right.
/// Single pixels count +1, three-pixel corners −1 and diagonal pairs −2
/// (the 8-connected variant).
pub(crate) const QUAD_WEIGHTS: [i64; 16] = [
    0, 1, 1, 0, //
    1, 0, -2, -1, //
    1, -2, 0, -1, //
    0, -1, -1, 0,
];

/// Quad-pattern counting over every 2×2 window of the zero-padded mask.
pub fn euler_quads(mask: &BinaryImage) -> i64 {
    let (h, w) = (mask.height() as isize, mask.width() as isize);
    let mut total = 0i64;
    for r in -1..h {
        for c in -1..w {
            let pattern = mask.get_or_bg(r, c) as usize
                | (mask.get_or_bg(r, c + 1) as usize) << 1
                | (mask.get_or_bg(r + 1, c) as usize) << 2
                | (mask.get_or_bg(r + 1, c + 1) as usize) << 3;
            total += QUAD_WEIGHTS[pattern];
        }
    }
    debug_assert_eq!(total % 4, 0);
    total / 4
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> BinaryImage {
        BinaryImage::new(n, n, vec![true; n * n]).unwrap()
    }

    fn ring5() -> BinaryImage {
        BinaryImage::from_rows(&[
            [1, 1, 1, 1, 1],
            [1, 1, 1, 1, 1],
            [1, 1, 0, 1, 1],
            [1, 1, 1, 1, 1],
            [1, 1, 1, 1, 1],
        ])
    }

    #[test]
    fn filled_square() {
        assert_eq!(betti_numbers(&square(5)), (1, 0));
        for n in 1..6 {
            assert_eq!(euler_vef(&square(n)), 1);
            assert_eq!(euler_quads(&square(n)), 1);
        }
        let rect = BinaryImage::new(3, 7, vec![true; 21]).unwrap();
        assert_eq!(euler_characteristic(&rect), 1);
    }

    #[test]
    fn ring() {
        assert_eq!(betti_numbers(&ring5()), (1, 1));
        assert_eq!(euler_vef(&ring5()), 0);
        assert_eq!(euler_quads(&ring5()), 0);
    }

    #[test]
    fn diagonal_links_close_loops() {
        // the four arms touch diagonally, so the centre is an enclosed hole
        let m = BinaryImage::from_rows(&[[0, 1, 0], [1, 0, 1], [0, 1, 0]]);
        assert_eq!(betti_numbers(&m), (1, 1));
        assert_eq!(euler_vef(&m), 0);
        let d = BinaryImage::from_rows(&[[1, 0], [0, 1]]);
        assert_eq!(betti_numbers(&d), (1, 0));
        assert_eq!(euler_vef(&d), 1);
    }

    /// Re-derives every pattern weight from the V−E+F oracle: the weights
    /// must reproduce the oracle on each 2×2 mask alone and on random masks.
    #[test]
    fn quad_weights_match_vef_oracle() {
        for bits in 0..16u8 {
            let m = BinaryImage::from_rows(&[
                [bits & 1, (bits >> 1) & 1],
                [(bits >> 2) & 1, (bits >> 3) & 1],
            ]);
            assert_eq!(euler_quads(&m), euler_vef(&m), "pattern {bits:04b}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let (h, w) = (rng.random_range(1..10), rng.random_range(1..10));
            let m =
                BinaryImage::new(h, w, (0..h * w).map(|_| rng.random_bool(0.5)).collect()).unwrap();
            assert_eq!(euler_quads(&m), euler_vef(&m));
        }
    }
}
