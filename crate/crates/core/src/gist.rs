//! Holistic GIST descriptor.
//!
//! The working image is filtered in the frequency domain by a bank of
//! one-sided log-Gabor filters (one radial center frequency per scale,
//! evenly spaced orientations in `[0, pi)`). The magnitude of every
//! response is averaged over a `blocks x blocks` grid and the averages are
//! concatenated filter-major.
//!
//! With the default bank (orientations `[8, 8, 4]`, 4x4 blocks) one
//! modality yields 20 x 16 = 320 values.

use std::f32::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameRecord, Modalities, Modality};
use crate::preprocess::{modality_to_gray, prefilter_normalize, resize_bilinear, GrayImage};

/// Radial bandwidth of each log-Gabor filter (ratio sigma_f / f0).
const RADIAL_SIGMA_RATIO: f32 = 0.65;
/// Angular std-dev as a fraction of the orientation spacing.
const ANGULAR_SIGMA_FRACTION: f32 = 0.6;

/// Construction parameters of a [`GaborBank`] plus the block grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GistParams {
    /// Orientation count per scale, from the highest center frequency down.
    pub orientations: Vec<u32>,
    /// Side of the square working image, a power of two.
    pub work_size: u32,
    /// Side of the block-averaging grid.
    pub blocks: u32,
}

impl Default for GistParams {
    fn default() -> Self {
        GistParams {
            orientations: vec![8, 8, 4],
            work_size: 128,
            blocks: 4,
        }
    }
}

impl GistParams {
    pub fn filter_count(&self) -> usize {
        self.orientations.iter().map(|&o| o as usize).sum()
    }

    /// Values produced per modality.
    pub fn descriptor_len(&self) -> usize {
        self.filter_count() * (self.blocks * self.blocks) as usize
    }
}

/// Bank of frequency-domain Gabor transfer functions on a square grid.
#[derive(Clone)]
pub struct GaborBank {
    size: usize,
    filters: Vec<Vec<f32>>,
    scale_of: Vec<usize>,
    orientation_of: Vec<usize>,
    angle_of: Vec<f32>,
    center_of: Vec<f32>,
    forward: Arc<dyn Fft<f32>>,
    inverse: Arc<dyn Fft<f32>>,
}

impl fmt::Debug for GaborBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaborBank")
            .field("size", &self.size)
            .field("filters", &self.filters.len())
            .field("scale_of", &self.scale_of)
            .field("orientation_of", &self.orientation_of)
            .finish()
    }
}

/// Signed frequency of FFT bin `k` on an `n`-point grid.
#[inline]
fn signed_freq(k: usize, n: usize) -> f32 {
    if k < n / 2 {
        k as f32
    } else {
        k as f32 - n as f32
    }
}

fn wrap_angle(a: f32) -> f32 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Build the filter bank. Scale `s` is centered at `work_size / 2^(s+2)`
/// cycles per image (32, 16, 8 at 128 px).
pub fn build_gabor_bank(scales: usize, orientations_per_scale: &[u32], work_size: usize) -> Result<GaborBank> {
    if scales != orientations_per_scale.len() {
        return Err(Error::InvalidParams(format!(
            "{scales} scales but {} orientation counts",
            orientations_per_scale.len()
        )));
    }
    if scales == 0 {
        return Err(Error::InvalidParams("at least one scale is required".into()));
    }
    if let Some(s) = orientations_per_scale.iter().position(|&o| o == 0) {
        return Err(Error::InvalidParams(format!("scale {s} has zero orientations")));
    }
    if !work_size.is_power_of_two() || work_size < 8 {
        return Err(Error::InvalidParams(format!(
            "work size must be a power of two >= 8, got {work_size}"
        )));
    }
    if work_size >> (scales + 1) == 0 {
        return Err(Error::InvalidParams(format!(
            "{scales} scales do not fit a {work_size} px working image"
        )));
    }

    let n = work_size;
    let ln_sigma_sq = 2.0 * RADIAL_SIGMA_RATIO.ln().powi(2);
    let mut bank = GaborBank {
        size: n,
        filters: Vec::new(),
        scale_of: Vec::new(),
        orientation_of: Vec::new(),
        angle_of: Vec::new(),
        center_of: Vec::new(),
        forward: FftPlanner::new().plan_fft_forward(n),
        inverse: FftPlanner::new().plan_fft_inverse(n),
    };
    for (scale, &count) in orientations_per_scale.iter().enumerate() {
        let f0 = (n >> (scale + 2)) as f32;
        let spacing = PI / count as f32;
        let ang_sigma_sq = 2.0 * (ANGULAR_SIGMA_FRACTION * spacing).powi(2);
        for o in 0..count as usize {
            let theta = o as f32 * spacing;
            let mut grid = vec![0f32; n * n];
            for v in 0..n {
                let fy = signed_freq(v, n);
                for u in 0..n {
                    let fx = signed_freq(u, n);
                    let r = fx.hypot(fy);
                    if r == 0.0 {
                        continue;
                    }
                    let radial = (-(r / f0).ln().powi(2) / ln_sigma_sq).exp();
                    let d = wrap_angle(fy.atan2(fx) - theta);
                    let angular = (-d * d / ang_sigma_sq).exp();
                    grid[v * n + u] = radial * angular;
                }
            }
            bank.filters.push(grid);
            bank.scale_of.push(scale);
            bank.orientation_of.push(o);
            bank.angle_of.push(theta);
            bank.center_of.push(f0);
        }
    }
    Ok(bank)
}

impl GaborBank {
    pub fn from_params(params: &GistParams) -> Result<Self> {
        build_gabor_bank(params.orientations.len(), &params.orientations, params.work_size as usize)
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn work_size(&self) -> usize {
        self.size
    }

    /// Transfer function of filter `i`, in FFT bin order (row = vertical frequency).
    pub fn transfer(&self, i: usize) -> &[f32] {
        &self.filters[i]
    }

    pub fn scale_of(&self, i: usize) -> usize {
        self.scale_of[i]
    }

    pub fn orientation_of(&self, i: usize) -> usize {
        self.orientation_of[i]
    }

    /// Orientation of filter `i` in radians.
    pub fn angle_of(&self, i: usize) -> f32 {
        self.angle_of[i]
    }

    /// Radial center frequency of filter `i` in cycles per working image.
    pub fn center_frequency(&self, i: usize) -> f32 {
        self.center_of[i]
    }

    fn fft2(&self, buf: &mut [Complex<f32>], inverse: bool) {
        let n = self.size;
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        let mut t = vec![Complex::default(); n * n];
        transpose(buf, &mut t, n);
        plan.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, buf, n);
    }
}

fn transpose(src: &[Complex<f32>], dst: &mut [Complex<f32>], n: usize) {
    for y in 0..n {
        for x in 0..n {
            dst[x * n + y] = src[y * n + x];
        }
    }
}

/// GIST of one prefiltered working image: per filter, the block-averaged
/// magnitude of the response, concatenated filter-major (blocks row-major).
pub fn gist_descriptor(image: &GrayImage, bank: &GaborBank, blocks: usize) -> Result<Vec<f32>> {
    let n = bank.size;
    if image.width() != n || image.height() != n {
        return Err(Error::InvalidInput(format!(
            "GIST input must be {n}x{n}, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    if blocks == 0 || !n.is_multiple_of(blocks) {
        return Err(Error::InvalidParams(format!("{blocks} blocks do not tile {n} px")));
    }
    let mut spectrum: Vec<Complex<f32>> = image.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    bank.fft2(&mut spectrum, false);

    let cell = n / blocks;
    let norm = 1.0 / (n * n) as f32;
    let per_block = 1.0 / (cell * cell) as f64;
    let mut out = Vec::with_capacity(bank.len() * blocks * blocks);
    let mut work = vec![Complex::default(); n * n];
    for filter in &bank.filters {
        for ((w, s), g) in work.iter_mut().zip(&spectrum).zip(filter) {
            *w = s * *g;
        }
        bank.fft2(&mut work, true);
        let mut sums = vec![0f64; blocks * blocks];
        for y in 0..n {
            let row = &work[y * n..(y + 1) * n];
            let by = y / cell;
            for (x, c) in row.iter().enumerate() {
                sums[by * blocks + x / cell] += (c.norm() * norm) as f64;
            }
        }
        out.extend(sums.iter().map(|s| (s * per_block) as f32));
    }
    Ok(out)
}

/// Where one modality's values sit inside a concatenated descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub modality: Modality,
    pub offset: usize,
    pub len: usize,
}

pub(crate) fn layout_for(order: &[Modality], len_each: usize) -> Vec<LayoutEntry> {
    order
        .iter()
        .enumerate()
        .map(|(i, &modality)| LayoutEntry {
            modality,
            offset: i * len_each,
            len: len_each,
        })
        .collect()
}

/// GIST values of every modality of a frame, concatenated RGB, IR, depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GistDescriptor {
    pub values: Vec<f32>,
    pub layout: Vec<LayoutEntry>,
}

/// Working image of one modality: intensity, resampled to the bank size,
/// then whitened and contrast-normalized.
pub fn gist_input(frame: &FrameRecord, modality: Modality, work_size: usize) -> Result<GrayImage> {
    let gray = modality_to_gray(modality, frame.require(modality)?)?;
    Ok(prefilter_normalize(&resize_bilinear(&gray, work_size, work_size)))
}

pub fn gist_multimodal(
    frame: &FrameRecord,
    bank: &GaborBank,
    blocks: usize,
    modalities: Modalities,
) -> Result<GistDescriptor> {
    let order = modalities.gist_order();
    for &m in &order {
        frame.require(m)?;
    }
    let mut values = Vec::new();
    for &m in &order {
        values.extend(gist_descriptor(&gist_input(frame, m, bank.size)?, bank, blocks)?);
    }
    let len_each = values.len() / order.len();
    Ok(GistDescriptor {
        values,
        layout: layout_for(&order, len_each),
    })
}

/// Euclidean distance between raw value slices.
#[inline]
pub fn l2_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub fn gist_distance(a: &GistDescriptor, b: &GistDescriptor) -> Result<f64> {
    if a.layout != b.layout || a.values.len() != b.values.len() {
        return Err(Error::LayoutMismatch(format!(
            "GIST lengths {} and {}",
            a.values.len(),
            b.values.len()
        )));
    }
    Ok(l2_distance(&a.values, &b.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bank_has_twenty_filters() {
        let bank = build_gabor_bank(3, &[8, 8, 4], 128).unwrap();
        assert_eq!(bank.len(), 20);
        assert_eq!(GistParams::default().descriptor_len(), 320);
        assert_eq!(
            (0..20).map(|i| bank.center_frequency(i)).collect::<Vec<_>>(),
            [vec![32.0; 8], vec![16.0; 8], vec![8.0; 4]].concat()
        );
    }

    #[test]
    fn orientations_evenly_spaced() {
        let bank = build_gabor_bank(1, &[4], 64).unwrap();
        let angles: Vec<f32> = (0..4).map(|i| bank.angle_of(i)).collect();
        let expected = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
        for (a, e) in angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_dc_response() {
        let bank = build_gabor_bank(3, &[8, 8, 4], 128).unwrap();
        for i in 0..bank.len() {
            assert!(bank.transfer(i)[0].abs() <= 1e-6);
        }
    }

    #[test]
    fn bank_rejects_bad_parameters() {
        assert!(build_gabor_bank(2, &[8, 0], 128).is_err());
        assert!(build_gabor_bank(2, &[8], 128).is_err());
        assert!(build_gabor_bank(1, &[8], 100).is_err());
    }

    #[test]
    fn constant_image_gives_zero_vector() {
        let bank = build_gabor_bank(3, &[8, 8, 4], 128).unwrap();
        let img = prefilter_normalize(&GrayImage::filled(128, 128, 0.6));
        let d = gist_descriptor(&img, &bank, 4).unwrap();
        assert_eq!(d.len(), 320);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let bank = build_gabor_bank(1, &[4], 64).unwrap();
        assert!(gist_descriptor(&GrayImage::filled(32, 32, 0.0), &bank, 4).is_err());
    }

    /// A grating at each filter's own frequency and orientation must peak in
    /// that filter. The expected channel is found by evaluating every
    /// transfer function at the grating's frequency bin directly.
    #[test]
    fn grating_selects_matching_channel() {
        let n = 128;
        let bank = build_gabor_bank(3, &[8, 8, 4], n).unwrap();
        for target in 0..bank.len() {
            let f = bank.center_frequency(target);
            let theta = bank.angle_of(target);
            let (kx, ky) = ((f * theta.cos()).round(), (f * theta.sin()).round());
            let img = GrayImage::from_fn(n, n, |x, y| {
                (2.0 * PI * (kx * x as f32 + ky * y as f32) / n as f32).cos()
            });
            let u = (kx as isize).rem_euclid(n as isize) as usize;
            let v = (ky as isize).rem_euclid(n as isize) as usize;
            let by_transfer = (0..bank.len())
                .max_by(|&a, &b| bank.transfer(a)[v * n + u].total_cmp(&bank.transfer(b)[v * n + u]))
                .unwrap();
            assert_eq!(by_transfer, target);

            let d = gist_descriptor(&img, &bank, 4).unwrap();
            let energy: Vec<f32> = d.chunks(16).map(|c| c.iter().sum()).collect();
            let best = (0..energy.len()).max_by(|&a, &b| energy[a].total_cmp(&energy[b])).unwrap();
            assert_eq!(best, target, "energies {energy:?}");
            // Uniform grating: all 16 blocks of the winning filter are equal.
            let blocks = &d[best * 16..best * 16 + 16];
            assert!(blocks.iter().all(|v| (v - blocks[0]).abs() < 1e-3 * blocks[0]));
        }
    }

    #[test]
    fn distance_basics() {
        let layout = layout_for(&[Modality::Rgb], 4);
        let a = GistDescriptor { values: vec![0.0; 4], layout: layout.clone() };
        let b = GistDescriptor { values: vec![0.0, 0.0, 3.0, 0.0], layout };
        assert_eq!(gist_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(gist_distance(&a, &b).unwrap(), 3.0);
        let c = GistDescriptor { values: vec![0.0; 8], layout: layout_for(&[Modality::Rgb, Modality::Infrared], 4) };
        assert!(gist_distance(&a, &c).is_err());
    }
}
