//! Image normalizations shared by the descriptor channels.
//!
//! Everything here is a pure function of its input. Planes come in as raw
//! camera samples ([`ImagePlane`]) and leave as real-valued [`GrayImage`]s.

use crate::error::{Error, Result};
use crate::model::{ImagePlane, Modality, Samples};

/// Default mixing weight of the log-chromaticity transform.
pub const DEFAULT_ALPHA: f32 = 0.48;
/// Std-dev of the whitening low-pass, in pixels of the GIST working image.
pub const WHITENING_SIGMA: f32 = 4.0;
/// Regularizer of the local contrast normalization.
pub const CONTRAST_EPSILON: f32 = 0.01;
/// Depth readings beyond this range (millimeters) are clamped.
pub const DEPTH_CLAMP_MM: f32 = 10_000.0;

/// Real-valued single-channel image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{width}x{height} image needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0);
        GrayImage {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0);
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.samples[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn rgb_samples(rgb: &ImagePlane) -> Result<&[u8]> {
    match (&rgb.samples, rgb.channels) {
        (Samples::U8(v), 3) => Ok(v),
        _ => Err(Error::InvalidInput(format!(
            "expected 3-channel 8-bit RGB, got {} channels at {} bits",
            rgb.channels,
            rgb.depth_bits()
        ))),
    }
}

/// Luma `0.299 R + 0.587 G + 0.114 B`, scaled to [0, 1].
pub fn to_grayscale(rgb: &ImagePlane) -> Result<GrayImage> {
    let data = rgb_samples(rgb)?;
    let samples = data
        .chunks_exact(3)
        .map(|p| (0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32) / 255.0)
        .collect();
    GrayImage::new(rgb.width as usize, rgb.height as usize, samples)
}

/// Log-chromaticity illumination-invariant image:
/// `0.5 + ln G - alpha ln B - (1 - alpha) ln R`, with channels in [0, 1]
/// clamped below at 1/255.
///
/// Scaling all three channels by a common factor leaves the output unchanged.
pub fn illumination_invariant(rgb: &ImagePlane, alpha: f32) -> Result<GrayImage> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let data = rgb_samples(rgb)?;
    // ln of every 8-bit level, with level 0 clamped to 1/255.
    let mut ln = [0f32; 256];
    for (v, slot) in ln.iter_mut().enumerate() {
        *slot = ((v.max(1) as f64) / 255.0).ln() as f32;
    }
    let samples = data
        .chunks_exact(3)
        .map(|p| {
            0.5 + ln[p[1] as usize] - alpha * ln[p[2] as usize] - (1.0 - alpha) * ln[p[0] as usize]
        })
        .collect();
    GrayImage::new(rgb.width as usize, rgb.height as usize, samples)
}

/// Map an 8-bit single channel plane to [0, 1].
pub fn gray8_to_unit(plane: &ImagePlane) -> Result<GrayImage> {
    match (&plane.samples, plane.channels) {
        (Samples::U8(v), 1) => GrayImage::new(
            plane.width as usize,
            plane.height as usize,
            v.iter().map(|&s| s as f32 / 255.0).collect(),
        ),
        _ => Err(Error::InvalidInput("expected a 1-channel 8-bit plane".into())),
    }
}

/// Clamp depth at [`DEPTH_CLAMP_MM`] and map linearly to [0, 1].
pub fn depth_to_unit(plane: &ImagePlane) -> Result<GrayImage> {
    match (&plane.samples, plane.channels) {
        (Samples::U16(v), 1) => GrayImage::new(
            plane.width as usize,
            plane.height as usize,
            v.iter()
                .map(|&mm| (mm as f32).min(DEPTH_CLAMP_MM) / DEPTH_CLAMP_MM)
                .collect(),
        ),
        _ => Err(Error::InvalidInput("expected a 1-channel 16-bit depth plane".into())),
    }
}

/// Intensity image of one modality as consumed by GIST: luma for RGB,
/// unit-scaled IR, range-clamped depth.
pub fn modality_to_gray(modality: Modality, plane: &ImagePlane) -> Result<GrayImage> {
    match modality {
        Modality::Rgb => to_grayscale(plane),
        Modality::Infrared => gray8_to_unit(plane),
        Modality::Depth => depth_to_unit(plane),
    }
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize_bilinear(src: &GrayImage, width: usize, height: usize) -> GrayImage {
    assert!(width > 0 && height > 0);
    if src.width == width && src.height == height {
        return src.clone();
    }
    let sx = src.width as f32 / width as f32;
    let sy = src.height as f32 / height as f32;
    let taps = |dst: usize, scale: f32, len: usize| {
        let pos = ((dst as f32 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f32);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, pos - i0 as f32)
    };
    let cols: Vec<_> = (0..width).map(|x| taps(x, sx, src.width)).collect();
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        let (y0, y1, fy) = taps(y, sy, src.height);
        let r0 = &src.samples[y0 * src.width..(y0 + 1) * src.width];
        let r1 = &src.samples[y1 * src.width..(y1 + 1) * src.width];
        for &(x0, x1, fx) in &cols {
            // `a + f (b - a)`: exact on constant regions.
            let top = r0[x0] + fx * (r0[x1] - r0[x0]);
            let bottom = r1[x0] + fx * (r1[x1] - r1[x0]);
            samples.push(top + fy * (bottom - top));
        }
    }
    GrayImage {
        width,
        height,
        samples,
    }
}

/// Area-averaging resampling: every output pixel is the coverage-weighted
/// mean of the source pixels under it.
pub fn resize_area(src: &GrayImage, width: usize, height: usize) -> GrayImage {
    assert!(width > 0 && height > 0);
    if src.width == width && src.height == height {
        return src.clone();
    }
    let xw = coverage(src.width, width);
    let yw = coverage(src.height, height);
    // Horizontal pass.
    let mut tmp = vec![0f32; src.height * width];
    for y in 0..src.height {
        let row = &src.samples[y * src.width..(y + 1) * src.width];
        for (x, taps) in xw.iter().enumerate() {
            tmp[y * width + x] = taps.iter().map(|&(i, w)| row[i] * w).sum();
        }
    }
    let mut samples = vec![0f32; width * height];
    for (y, taps) in yw.iter().enumerate() {
        for x in 0..width {
            samples[y * width + x] = taps.iter().map(|&(i, w)| tmp[i * width + x] * w).sum();
        }
    }
    GrayImage {
        width,
        height,
        samples,
    }
}

/// Normalized overlap weights of source cells with each destination cell.
fn coverage(src: usize, dst: usize) -> Vec<Vec<(usize, f32)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let lo = d as f64 * scale;
            let hi = lo + scale;
            let mut taps = Vec::new();
            let mut i = lo.floor() as usize;
            while (i as f64) < hi && i < src {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    taps.push((i, (overlap / scale) as f32));
                }
                i += 1;
            }
            taps
        })
        .collect()
}

pub(crate) fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|i| (-(i * i) as f32 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// One-dimensional correlation along rows (`horizontal`) or columns, with
/// edge-replicating borders. With `highpass` the output is `x - G x`,
/// accumulated as `sum w_j (x_i - x_{i+j})` so constant runs give exact zeros.
fn filter_axis(img: &GrayImage, kernel: &[f32], horizontal: bool, highpass: bool) -> GrayImage {
    let (w, h) = (img.width, img.height);
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let center = img.samples[y * w + x];
            let mut acc = 0f32;
            for (j, &kw) in kernel.iter().enumerate() {
                let off = j as isize - r;
                let v = if horizontal {
                    img.samples[y * w + clamp_index(x as isize + off, w)]
                } else {
                    img.samples[clamp_index(y as isize + off, h) * w + x]
                };
                acc += kw * if highpass { center - v } else { v };
            }
            out[y * w + x] = acc;
        }
    }
    GrayImage {
        width: w,
        height: h,
        samples: out,
    }
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f32) -> GrayImage {
    let k = gaussian_kernel(sigma);
    filter_axis(&filter_axis(img, &k, true, false), &k, false, false)
}

/// GIST front end: log intensity, whitening (subtract a Gaussian low-pass
/// of std [`WHITENING_SIGMA`]) and local contrast normalization (divide by
/// [`CONTRAST_EPSILON`] plus the Gaussian-weighted local RMS).
///
/// A constant image maps to an all-zero image.
pub fn prefilter_normalize(gray: &GrayImage) -> GrayImage {
    let logged = gray.map(|v| (1.0 + v * 255.0).ln());
    let k = gaussian_kernel(WHITENING_SIGMA);
    // I - Gr Gc = (I - Gr) + Gr (I - Gc)
    let high_rows = filter_axis(&logged, &k, true, true);
    let high_cols = filter_axis(&logged, &k, false, true);
    let smoothed = filter_axis(&high_cols, &k, true, false);
    let whitened: Vec<f32> = high_rows
        .samples
        .iter()
        .zip(&smoothed.samples)
        .map(|(a, b)| a + b)
        .collect();
    let whitened = GrayImage {
        width: gray.width,
        height: gray.height,
        samples: whitened,
    };
    let local_var = gaussian_blur(&whitened.map(|v| v * v), WHITENING_SIGMA);
    let samples = whitened
        .samples
        .iter()
        .zip(&local_var.samples)
        .map(|(&v, &var)| v / (CONTRAST_EPSILON + var.max(0.0).sqrt()))
        .collect();
    GrayImage {
        width: gray.width,
        height: gray.height,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(width: u32, height: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> ImagePlane {
        let mut data = Vec::new();
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        ImagePlane::rgb8(width, height, data).unwrap()
    }

    #[test]
    fn grayscale_coefficients() {
        let img = rgb(3, 1, |x, _| match x {
            0 => [255, 255, 255],
            1 => [0, 0, 0],
            _ => [255, 0, 0],
        });
        let g = to_grayscale(&img).unwrap();
        assert!((g.get(0, 0) - 1.0).abs() < 1e-6);
        assert_eq!(g.get(1, 0), 0.0);
        assert!((g.get(2, 0) - 0.299).abs() < 1e-6);
    }

    #[test]
    fn grayscale_rejects_single_channel() {
        let ir = ImagePlane::gray8(2, 2, vec![0; 4]).unwrap();
        assert!(to_grayscale(&ir).is_err());
        assert!(illumination_invariant(&ir, 0.48).is_err());
    }

    #[test]
    fn neutral_gray_maps_to_one_half() {
        for v in [1u8, 17, 128, 255] {
            let img = rgb(1, 1, |_, _| [v, v, v]);
            let out = illumination_invariant(&img, DEFAULT_ALPHA).unwrap();
            assert!((out.get(0, 0) - 0.5).abs() < 1e-6, "v={v}");
        }
    }

    #[test]
    fn invariant_reference_pixel() {
        // 0.5 + ln(128/255) - 0.48 ln(32/255) - 0.52 ln(64/255); the /255
        // terms cancel, leaving 0.5 + ln 128 - 0.48 ln 32 - 0.52 ln 64
        // = 1.5258578272287187
        let img = rgb(1, 1, |_, _| [64, 128, 32]);
        let out = illumination_invariant(&img, 0.48).unwrap();
        assert!((out.get(0, 0) as f64 - 1.525_857_827_228_718_7).abs() < 1e-5, "{}", out.get(0, 0));
    }

    #[test]
    fn invariant_rejects_bad_alpha() {
        let img = rgb(1, 1, |_, _| [1, 2, 3]);
        assert!(illumination_invariant(&img, 0.0).is_err());
        assert!(illumination_invariant(&img, 1.0).is_err());
    }

    #[test]
    fn black_pixels_stay_finite() {
        let img = rgb(2, 1, |x, _| if x == 0 { [0, 0, 0] } else { [0, 255, 0] });
        let out = illumination_invariant(&img, DEFAULT_ALPHA).unwrap();
        assert!(out.samples().iter().all(|v| v.is_finite()));
        assert!((out.get(0, 0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn prefilter_constant_is_zero() {
        for v in [0.0, 0.3, 1.0] {
            let out = prefilter_normalize(&GrayImage::filled(32, 24, v));
            assert!(out.samples().iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn prefilter_is_deterministic() {
        let img = GrayImage::from_fn(40, 30, |x, y| ((x * 7 + y * 13) % 17) as f32 / 17.0);
        assert_eq!(prefilter_normalize(&img), prefilter_normalize(&img));
    }

    /// Direct (non-separable) 2-D evaluation of the prefilter pipeline.
    fn reference_prefilter(img: &GrayImage) -> Vec<f64> {
        let (w, h) = (img.width(), img.height());
        let sigma = WHITENING_SIGMA as f64;
        let r = (3.0 * sigma).ceil() as isize;
        let raw: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let s: f64 = raw.iter().sum();
        let k: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let at = |buf: &[f64], x: isize, y: isize| {
            let xc = x.clamp(0, w as isize - 1) as usize;
            let yc = y.clamp(0, h as isize - 1) as usize;
            buf[yc * w + xc]
        };
        let blur2d = |buf: &[f64]| {
            let mut out = vec![0.0; w * h];
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let mut acc = 0.0;
                    for dy in -r..=r {
                        for dx in -r..=r {
                            acc += k[(dy + r) as usize] * k[(dx + r) as usize] * at(buf, x + dx, y + dy);
                        }
                    }
                    out[y as usize * w + x as usize] = acc;
                }
            }
            out
        };
        let logged: Vec<f64> = img.samples().iter().map(|&v| (1.0 + v as f64 * 255.0).ln()).collect();
        let low = blur2d(&logged);
        let white: Vec<f64> = logged.iter().zip(&low).map(|(a, b)| a - b).collect();
        let sq: Vec<f64> = white.iter().map(|v| v * v).collect();
        let var = blur2d(&sq);
        white
            .iter()
            .zip(&var)
            .map(|(v, s)| v / (CONTRAST_EPSILON as f64 + s.sqrt()))
            .collect()
    }

    #[test]
    fn prefilter_step_edge_matches_reference() {
        let img = GrayImage::from_fn(16, 16, |x, _| if x < 8 { 0.2 } else { 0.8 });
        let out = prefilter_normalize(&img);
        let oracle = reference_prefilter(&img);
        for (a, b) in out.samples().iter().zip(&oracle) {
            assert!((*a as f64 - b).abs() < 1e-3, "{a} vs {b}");
        }
        for y in 0..16 {
            assert!(out.get(7, y) < 0.0 && out.get(8, y) > 0.0);
        }
        assert!(out.samples().iter().all(|v| v.abs() <= 10.0));
    }

    #[test]
    fn resize_keeps_constants_exact() {
        let img = GrayImage::filled(320, 240, 0.37);
        assert!(resize_bilinear(&img, 128, 128).samples().iter().all(|&v| v == 0.37));
        let a = resize_area(&img, 60, 60);
        assert!(a.samples().iter().all(|&v| (v - 0.37).abs() < 1e-6));
    }

    #[test]
    fn area_resize_preserves_mean() {
        let img = GrayImage::from_fn(320, 240, |x, y| ((x ^ y) & 31) as f32 / 31.0);
        let small = resize_area(&img, 60, 60);
        let m0: f64 = img.samples().iter().map(|&v| v as f64).sum::<f64>() / img.samples().len() as f64;
        let m1: f64 = small.samples().iter().map(|&v| v as f64).sum::<f64>() / 3600.0;
        assert!((m0 - m1).abs() < 1e-4);
    }

    #[test]
    fn depth_is_clamped() {
        let d = ImagePlane::depth16(3, 1, vec![0, 5000, 20000]).unwrap();
        let g = depth_to_unit(&d).unwrap();
        assert_eq!(g.samples(), &[0.0, 0.5, 1.0]);
    }
}
