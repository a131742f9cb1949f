//! The 256 rotated-BRIEF point-pair tests.
//!
//! Pairs were drawn once from an isotropic Gaussian (sigma = 31 / 5 px)
//! seeded with [`ORB_PATTERN_SEED`], rounded to integers and restricted to
//! the radius-15 disc so every rotation stays inside the 31x31 patch.
//! [`generate_pattern`] reproduces the table from the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ORB_PATTERN_SEED: u64 = 0x4B50_4F52_4250_0001;
pub const PATTERN_RADIUS: i32 = 15;
const PATTERN_SIGMA: f64 = 31.0 / 5.0;

/// Frozen output of `generate_pattern(ORB_PATTERN_SEED)`.
#[rustfmt::skip]
pub static PATTERN: [[i8; 4]; 256] = [
    [-3, -4, -9, -7], [-1, 0, -7, 1], [-1, -4, -2, -3], [-1, 8, -6, -6],
    [6, 1, 3, 5], [-5, -11, 6, 4], [1, -3, -5, -2], [-4, -2, -2, -7],
    [1, 3, 4, 6], [0, -1, 2, -2], [-4, 5, 3, -3], [-10, -10, -4, -5],
    [-4, -2, 5, -2], [-11, -3, 5, -5], [-2, -3, 2, -6], [2, 3, -5, -11],
    [-5, -1, 4, 1], [-5, -4, -2, 0], [5, 0, -3, -6], [0, 4, 10, -3],
    [3, -3, -5, -5], [1, -13, 2, 2], [-2, -4, 1, -2], [1, 8, 5, 8],
    [-11, -10, -12, -8], [-7, 5, 13, 1], [4, 1, 2, 1], [-8, 1, 7, -2],
    [0, -14, -5, -5], [1, -10, 0, 0], [1, -3, 0, 4], [-1, -4, -7, -9],
    [3, 7, -4, -9], [10, -1, 1, -4], [-1, 2, -7, 5], [2, -1, 1, 6],
    [6, 5, 6, 0], [2, -2, 2, 0], [0, 15, 1, 3], [8, -10, 8, -5],
    [0, 5, -3, 1], [9, 6, 3, 2], [8, -2, 1, 6], [-3, 2, -1, -3],
    [2, 2, 3, 8], [5, 1, -6, -11], [5, -13, -4, 2], [-4, 7, 7, -4],
    [8, 0, -2, -2], [-11, -2, 3, 4], [-1, 4, 1, -2], [9, 4, 4, 8],
    [2, -1, 0, -8], [-6, 12, -1, -12], [-12, -6, 4, -3], [1, -13, 1, -3],
    [-2, 3, -12, 0], [0, -6, -5, -4], [6, 7, 0, -3], [12, -1, 4, 6],
    [0, 5, 8, 5], [1, 0, -4, -4], [7, -10, -11, -2], [5, -14, 1, -7],
    [3, 7, 1, -4], [7, 6, 3, -1], [5, -2, 0, 2], [-5, -5, 0, -4],
    [6, -8, -5, -9], [-2, 0, -12, -4], [-1, 0, 12, -4], [6, 0, 3, 5],
    [0, -5, -6, 1], [-7, 0, 1, 1], [9, 2, 6, -3], [-1, 3, -4, 12],
    [9, -6, 1, 4], [0, -13, -1, -4], [6, -9, 0, 4], [-9, 4, -8, 5],
    [-5, -11, 0, 2], [2, -9, -1, 4], [-2, -5, 3, 12], [8, -6, 7, 3],
    [-2, -5, 3, -4], [2, 8, -8, -4], [3, -8, 4, 0], [9, -1, 0, -8],
    [-3, 6, 8, 12], [-1, -10, -2, -6], [-6, -1, -8, -10], [0, 1, 11, -6],
    [-2, -6, -10, -4], [-3, 0, -9, -4], [13, -3, 7, 10], [4, 10, 7, 1],
    [7, -7, 0, 0], [-2, -4, 2, -14], [0, 0, -3, 3], [0, 0, 4, 13],
    [-2, -12, 8, -6], [13, 2, -3, 4], [2, -3, 8, -7], [5, 13, -2, -2],
    [11, -6, 1, -7], [6, 0, -2, -9], [8, 0, -6, -10], [12, 9, 3, 6],
    [-2, -11, 0, 2], [-1, -9, -3, -7], [-1, 8, -3, -8], [-3, -4, 4, 2],
    [6, 8, 4, -2], [0, 4, -3, 4], [9, 7, -3, -2], [1, 2, 7, 3],
    [-10, -3, 4, 0], [0, -9, 10, -8], [-6, -2, 3, -7], [-12, 5, 2, -4],
    [-8, -8, -8, -3], [0, 1, 2, 8], [0, 6, 8, 1], [3, -9, -1, 7],
    [8, -11, 1, 4], [-7, 10, -7, -1], [6, -3, 8, 10], [-2, 1, -3, -14],
    [1, 8, 3, 3], [0, -4, -2, -7], [-2, 5, -9, 7], [9, -3, 0, -13],
    [6, 1, 2, -10], [1, 3, -4, 1], [1, 5, 4, -5], [5, 1, -8, -2],
    [10, 6, 0, 2], [6, -10, -2, -5], [-3, -4, -12, 3], [13, 0, 0, 3],
    [-1, 4, 3, -1], [-4, -5, 1, 2], [10, -6, -2, -4], [-1, 13, -5, 11],
    [6, -4, -2, -1], [5, 0, -1, 9], [-7, 11, 9, 5], [3, -2, 5, -12],
    [0, 0, 4, -1], [-3, 5, -3, -1], [6, -12, -10, 10], [8, -6, 0, -1],
    [4, 5, -1, 2], [3, 7, -10, 1], [-7, 1, -2, 7], [1, 4, 3, -2],
    [-1, 5, -11, 1], [10, -1, 5, -3], [-3, -2, 10, -1], [6, -5, 8, 2],
    [-2, 1, 8, 9], [9, 1, -6, 3], [6, 5, 3, 4], [-4, 3, 0, -4],
    [-3, -1, -10, 4], [4, -4, 3, -1], [-1, 7, 2, 12], [10, 1, 2, 3],
    [9, -1, -4, -1], [-8, 4, 1, 0], [6, -5, 2, 6], [-1, -2, 2, 4],
    [-10, 1, -2, -3], [-5, 1, -6, 1], [-1, -8, 3, -5], [7, 11, -11, 0],
    [-5, 1, 0, 1], [-2, 1, 7, 3], [3, -10, 0, 4], [-2, -6, -4, 2],
    [4, 10, -10, -6], [-10, 2, -3, 0], [1, 2, 6, -5], [-2, 2, -1, -2],
    [4, 11, -3, 4], [7, 12, 9, -8], [6, -9, 0, 11], [14, 4, -7, -1],
    [-10, -3, -5, -5], [0, 3, -5, -4], [1, 2, 1, 7], [7, 3, 4, 6],
    [1, -5, -1, 3], [-4, 10, -4, -10], [-4, 3, 2, -6], [6, -6, -9, -2],
    [2, -5, -4, 4], [-1, -5, 4, -1], [7, 6, -4, -5], [2, -5, 3, 2],
    [-6, 2, 1, -3], [-1, -3, 9, 3], [1, -3, 1, 2], [-4, -7, 3, -3],
    [5, -2, -8, 11], [7, 2, -10, -7], [1, 7, 0, -2], [-6, -3, 8, -9],
    [2, -9, 10, 7], [-7, 1, -10, 0], [-9, 3, 3, -4], [11, 1, 0, -12],
    [7, 0, 2, -3], [-10, -1, -13, 1], [2, 5, 8, -1], [13, 2, -5, -5],
    [-2, 6, -2, 3], [-9, -2, 4, 4], [-4, 0, 9, -8], [0, -8, -4, -4],
    [4, 4, -1, -3], [1, 8, 6, -5], [9, 3, -4, 1], [-3, -7, 9, 2],
    [1, 7, 5, -12], [-7, -7, -8, -11], [2, 8, 1, -1], [2, -5, 4, -4],
    [-11, 2, -12, -4], [2, 6, 6, -8], [2, -2, 8, 9], [-9, 5, 8, 4],
    [-1, -2, -2, -4], [-3, -10, 0, -1], [-4, -5, 0, 5], [-3, 5, 10, -11],
    [-2, 10, -8, 7], [0, 8, 13, -3], [-6, 2, 1, 2], [-2, 4, -7, -10],
    [5, -3, -6, -5], [11, -6, -6, 4], [2, 1, -7, -12], [-6, 5, -10, 6],
    [-3, -6, -2, 0], [2, 5, -4, 1], [8, 5, 4, -1], [-9, 8, -3, -2],
    [-3, -6, 0, 11], [-8, -12, 1, -1], [-4, -1, 3, 3], [-6, 10, 4, 1],
    [3, -2, -8, 2], [6, 3, -3, -7], [7, 1, 2, 0], [-2, -1, 1, 1],
];

/// Draw `(x1, y1, x2, y2)` test pairs from the seeded Gaussian.
pub fn generate_pattern(seed: u64) -> Vec<[i8; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || {
        // Box-Muller on two uniforms in (0, 1].
        let u1 = 1.0 - rng.random::<f64>();
        let u2 = rng.random::<f64>();
        PATTERN_SIGMA * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let inside = |x: i32, y: i32| x * x + y * y <= PATTERN_RADIUS * PATTERN_RADIUS;
    let mut pairs = Vec::with_capacity(256);
    while pairs.len() < 256 {
        let p: [i32; 4] = std::array::from_fn(|_| normal().round() as i32);
        if inside(p[0], p[1]) && inside(p[2], p[3]) && (p[0], p[1]) != (p[2], p[3]) {
            pairs.push(p.map(|v| v as i8));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_table_matches_seed() {
        assert_eq!(generate_pattern(ORB_PATTERN_SEED), PATTERN.to_vec());
    }

    #[test]
    fn pairs_stay_in_disc() {
        for p in PATTERN {
            for (x, y) in [(p[0], p[1]), (p[2], p[3])] {
                let (x, y) = (x as i32, y as i32);
                assert!(x * x + y * y <= PATTERN_RADIUS * PATTERN_RADIUS);
            }
        }
    }
}
