//! Rotated BRIEF descriptors on oriented FAST keypoints.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::fast::{build_pyramid, detect_on_pyramid, FastParams, Keypoint, PATCH_RADIUS};
use super::pattern::PATTERN;
use crate::preprocess::{gaussian_blur, GrayImage};

/// Smoothing applied to each level before the intensity tests.
const TEST_BLUR_SIGMA: f32 = 1.2;

/// 256-bit binary descriptor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct OrbDescriptor(pub [u64; 4]);

impl OrbDescriptor {
    pub const BITS: usize = 256;

    #[inline]
    pub fn distance(&self, other: &OrbDescriptor) -> u32 {
        (self.0[0] ^ other.0[0]).count_ones()
            + (self.0[1] ^ other.0[1]).count_ones()
            + (self.0[2] ^ other.0[2]).count_ones()
            + (self.0[3] ^ other.0[3]).count_ones()
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn to_le_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (chunk, w) in out.chunks_exact_mut(8).zip(self.0) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: [u8; 32]) -> Self {
        OrbDescriptor(std::array::from_fn(|i| {
            u64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().unwrap())
        }))
    }
}

impl fmt::Debug for OrbDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrbDescriptor(")?;
        for b in self.to_le_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Result of [`orb_describe`]: descriptors of the usable keypoints in input
/// order, and the input positions of keypoints skipped for lying too close
/// to the border.
#[derive(Debug, Clone, Default)]
pub struct Described {
    pub descriptors: Vec<OrbDescriptor>,
    pub skipped: Vec<usize>,
}

fn within_margin(img: &GrayImage, kp: &Keypoint) -> bool {
    let r = PATCH_RADIUS as f32;
    kp.x >= r && kp.y >= r && kp.x + r < img.width() as f32 && kp.y + r < img.height() as f32
}

fn describe_one(smoothed: &GrayImage, kp: &Keypoint) -> OrbDescriptor {
    let (s, c) = kp.angle.sin_cos();
    let (cx, cy) = (kp.x as i32, kp.y as i32);
    let sample = |px: i8, py: i8| {
        let (px, py) = (px as f32, py as f32);
        let rx = (c * px - s * py).round() as i32;
        let ry = (s * px + c * py).round() as i32;
        smoothed.get((cx + rx) as usize, (cy + ry) as usize)
    };
    let mut d = OrbDescriptor::default();
    for (i, p) in PATTERN.iter().enumerate() {
        if sample(p[0], p[1]) < sample(p[2], p[3]) {
            d.set(i);
        }
    }
    d
}

fn describe_on_pyramid(pyramid: &[GrayImage], kps: &[Keypoint]) -> Described {
    let smoothed: Vec<GrayImage> = pyramid.iter().map(|l| gaussian_blur(l, TEST_BLUR_SIGMA)).collect();
    let mut out = Described::default();
    for (i, kp) in kps.iter().enumerate() {
        match smoothed.get(kp.octave as usize) {
            Some(level) if within_margin(level, kp) => out.descriptors.push(describe_one(level, kp)),
            _ => out.skipped.push(i),
        }
    }
    out
}

/// Rotated-BRIEF descriptors for `kps` detected on `gray` with the pyramid
/// geometry of `params`.
pub fn orb_describe(gray: &GrayImage, kps: &[Keypoint], params: &FastParams) -> Described {
    let levels = kps.iter().map(|k| k.octave as usize + 1).max().unwrap_or(1);
    let pyramid = build_pyramid(gray, levels.max(params.levels.max(1)), params.scale_factor);
    describe_on_pyramid(&pyramid, kps)
}

/// Detection and description sharing one pyramid.
pub fn extract_orb(gray: &GrayImage, params: &FastParams) -> (Vec<Keypoint>, Vec<OrbDescriptor>) {
    if params.threshold.is_nan() || params.threshold <= 0.0 {
        return (Vec::new(), Vec::new());
    }
    let pyramid = build_pyramid(gray, params.levels.max(1), params.scale_factor);
    let kps = detect_on_pyramid(&pyramid, params);
    let described = describe_on_pyramid(&pyramid, &kps);
    debug_assert!(described.skipped.is_empty());
    (kps, described.descriptors)
}
