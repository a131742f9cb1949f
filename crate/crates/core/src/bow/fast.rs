//! FAST-9 corner detection over a scale pyramid.

use serde::{Deserialize, Serialize};

use crate::preprocess::{resize_bilinear, GrayImage};

/// Keypoints keep at least this many pixels to every border of their level.
pub const EDGE_MARGIN: usize = 16;
/// Radius of the orientation / descriptor patch.
pub const PATCH_RADIUS: i32 = 15;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];
const ARC: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastParams {
    /// Minimum intensity difference on the [0, 1] scale.
    pub threshold: f32,
    pub max_keypoints: usize,
    pub levels: usize,
    pub scale_factor: f32,
}

impl Default for FastParams {
    fn default() -> Self {
        FastParams {
            threshold: 20.0 / 255.0,
            max_keypoints: 500,
            levels: 4,
            scale_factor: 1.2,
        }
    }
}

/// A detected corner. Coordinates are pixels of its own pyramid level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    pub response: f32,
    /// Intensity-centroid orientation in `[0, 2 pi)`.
    pub angle: f32,
    pub octave: u8,
}

/// Image pyramid; level `l` is the input downscaled by `scale_factor^l`.
pub fn build_pyramid(gray: &GrayImage, levels: usize, scale_factor: f32) -> Vec<GrayImage> {
    let mut pyramid = vec![gray.clone()];
    for l in 1..levels {
        let s = scale_factor.powi(l as i32);
        let w = ((gray.width() as f32 / s).round() as usize).max(1);
        let h = ((gray.height() as f32 / s).round() as usize).max(1);
        pyramid.push(resize_bilinear(gray, w, h));
    }
    pyramid
}

/// Segment test at `(x, y)`: returns the corner score when at least 9
/// contiguous circle pixels are all brighter than `c + t` or all darker than
/// `c - t`. The score sums the excess `|d| - t` over the qualifying pixels
/// of the winning polarity.
pub fn segment_test(img: &GrayImage, x: usize, y: usize, threshold: f32) -> Option<f32> {
    let c = img.get(x, y);
    let mut ring = [0f32; 16];
    for (slot, &(dx, dy)) in ring.iter_mut().zip(&CIRCLE) {
        *slot = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) - c;
    }
    let mut best: Option<f32> = None;
    for sign in [1f32, -1.0] {
        let mut run = 0;
        let mut longest = 0;
        for i in 0..32 {
            if sign * ring[i % 16] > threshold {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        if longest >= ARC {
            let score: f32 = ring
                .iter()
                .map(|&d| sign * d - threshold)
                .filter(|&e| e > 0.0)
                .sum();
            best = Some(best.map_or(score, |b: f32| b.max(score)));
        }
    }
    best
}

/// Intensity-centroid angle of the radius-15 disc around `(x, y)`, in `[0, 2 pi)`.
pub fn centroid_angle(img: &GrayImage, x: usize, y: usize) -> f32 {
    let (mut m10, mut m01) = (0f64, 0f64);
    for dy in -PATCH_RADIUS..=PATCH_RADIUS {
        for dx in -PATCH_RADIUS..=PATCH_RADIUS {
            if dx * dx + dy * dy > PATCH_RADIUS * PATCH_RADIUS {
                continue;
            }
            let v = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as f64;
            m10 += dx as f64 * v;
            m01 += dy as f64 * v;
        }
    }
    let a = m01.atan2(m10);
    let a = if a < 0.0 { a + std::f64::consts::TAU } else { a };
    // Guard the rounding case where a tiny negative angle wraps to exactly 2 pi.
    let a = a as f32;
    if a >= std::f32::consts::TAU {
        0.0
    } else {
        a
    }
}

/// FAST corners of one level with 3x3 non-maximum suppression.
fn detect_level(img: &GrayImage, threshold: f32, octave: u8) -> Vec<Keypoint> {
    let (w, h) = (img.width(), img.height());
    if w <= 2 * EDGE_MARGIN || h <= 2 * EDGE_MARGIN {
        return Vec::new();
    }
    let mut scores = vec![0f32; w * h];
    for y in EDGE_MARGIN..h - EDGE_MARGIN {
        for x in EDGE_MARGIN..w - EDGE_MARGIN {
            if let Some(s) = segment_test(img, x, y, threshold) {
                scores[y * w + x] = s;
            }
        }
    }
    let mut out = Vec::new();
    for y in EDGE_MARGIN..h - EDGE_MARGIN {
        for x in EDGE_MARGIN..w - EDGE_MARGIN {
            let s = scores[y * w + x];
            if s <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nb: for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    let idx = ny * w + nx;
                    if idx == y * w + x {
                        continue;
                    }
                    // Equal scores: the earlier pixel in raster order wins.
                    let other = scores[idx];
                    if other > s || (other == s && idx < y * w + x) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                out.push(Keypoint {
                    x: x as f32,
                    y: y as f32,
                    response: s,
                    angle: centroid_angle(img, x, y),
                    octave,
                });
            }
        }
    }
    out
}

/// Response descending, then y, x and octave ascending.
pub(crate) fn rank_keypoints(kps: &mut [Keypoint]) {
    kps.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.octave.cmp(&b.octave))
    });
}

pub(crate) fn detect_on_pyramid(pyramid: &[GrayImage], params: &FastParams) -> Vec<Keypoint> {
    let mut kps: Vec<Keypoint> = pyramid
        .iter()
        .enumerate()
        .flat_map(|(l, img)| detect_level(img, params.threshold, l as u8))
        .collect();
    rank_keypoints(&mut kps);
    kps.truncate(params.max_keypoints);
    kps
}

/// FAST-9 keypoints over the pyramid described by `params`, strongest first.
pub fn detect_fast(gray: &GrayImage, params: &FastParams) -> Vec<Keypoint> {
    if params.threshold.is_nan() || params.threshold <= 0.0 {
        return Vec::new();
    }
    let pyramid = build_pyramid(gray, params.levels.max(1), params.scale_factor);
    detect_on_pyramid(&pyramid, params)
}
