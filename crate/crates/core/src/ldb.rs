//! Global Local Difference Binary (LDB) descriptor.
//!
//! The image is resampled to a square patch and partitioned into `g x g`
//! cells for every grid level `g`. Each cell is summarized by its mean
//! intensity and mean horizontal/vertical gradients; every unordered cell
//! pair `(i, j)`, `i < j` in row-major order, contributes three comparison
//! bits `[I_i > I_j]`, `[Gx_i > Gx_j]`, `[Gy_i > Gy_j]`.
//!
//! The compounded descriptor concatenates the per-modality bit strings in
//! the order RGB (after the illumination-invariant transform), depth, IR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gist::LayoutEntry;
use crate::model::{FrameRecord, Modalities, Modality};
use crate::preprocess::{
    depth_to_unit, gray8_to_unit, illumination_invariant, resize_area, GrayImage, DEFAULT_ALPHA,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdbParams {
    /// Side of the square patch the image is resampled to.
    pub patch: u32,
    /// Grid levels; each must divide `patch`.
    pub grids: Vec<u32>,
    /// Mixing weight of the illumination-invariant transform applied to RGB.
    pub alpha: f32,
}

impl Default for LdbParams {
    fn default() -> Self {
        LdbParams {
            patch: 60,
            grids: vec![2, 3, 4, 5],
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl LdbParams {
    /// Bits per modality: `3 * sum C(g^2, 2)`.
    pub fn bits_per_modality(&self) -> usize {
        self.grids
            .iter()
            .map(|&g| {
                let c = (g * g) as usize;
                3 * c * (c - 1) / 2
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty() {
            return Err(Error::InvalidParams("LDB needs at least one grid level".into()));
        }
        for &g in &self.grids {
            if g < 2 {
                return Err(Error::InvalidParams(format!("LDB grid level {g} is below 2")));
            }
            if !self.patch.is_multiple_of(g) || self.patch / g < 2 {
                return Err(Error::InvalidParams(format!(
                    "LDB patch {} is not divisible into {g}x{g} cells of at least 2 px",
                    self.patch
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Packed, fixed-length bit string. Bit `i` lives in `words[i / 64]` at
/// position `i % 64`; unused high bits of the last word are zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn with_capacity(bits: usize) -> Self {
        BitString {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn from_words(words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(Error::InvalidInput(format!(
                "{} words cannot hold exactly {len} bits",
                words.len()
            )));
        }
        if !len.is_multiple_of(64) && words.last().is_some_and(|w| w >> (len % 64) != 0) {
            return Err(Error::InvalidInput("bits set beyond the string length".into()));
        }
        Ok(BitString { words, len })
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().unwrap() |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn extend(&mut self, other: &BitString) {
        for i in 0..other.len {
            self.push(other.get(i));
        }
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Every bit flipped.
    pub fn complement(&self) -> BitString {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if !self.len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
        BitString { words, len: self.len }
    }

    /// 64 bits starting at bit `offset`; positions past the end read as 0.
    fn word_at(&self, offset: usize) -> u64 {
        let (i, s) = (offset / 64, offset % 64);
        let lo = self.words.get(i).copied().unwrap_or(0) >> s;
        if s == 0 {
            lo
        } else {
            lo | self.words.get(i + 1).copied().unwrap_or(0) << (64 - s)
        }
    }

    /// Copy of bits `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice {start}+{len} exceeds {}", self.len);
        let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|k| self.word_at(start + 64 * k)).collect();
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        BitString { words, len }
    }
}

/// Hamming distance between `a[a_off..a_off + len]` and `b[b_off..b_off + len]`.
pub fn hamming_range(a: &BitString, a_off: usize, b: &BitString, b_off: usize, len: usize) -> u32 {
    assert!(a_off + len <= a.len && b_off + len <= b.len, "hamming range out of bounds");
    let mut total = 0;
    let mut done = 0;
    while done < len {
        let take = (len - done).min(64);
        let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
        total += ((a.word_at(a_off + done) ^ b.word_at(b_off + done)) & mask).count_ones();
        done += take;
    }
    total
}

/// Popcount of the XOR of two equally long word slices.
#[inline]
pub fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

#[derive(Debug, Clone, Copy, Default)]
struct CellStats {
    intensity: f64,
    grad_x: f64,
    grad_y: f64,
}

fn cell_stats(img: &GrayImage, x0: usize, y0: usize, size: usize) -> CellStats {
    let mut s = CellStats::default();
    let last = size - 1;
    for dy in 0..size {
        for dx in 0..size {
            let (x, y) = (x0 + dx, y0 + dy);
            s.intensity += img.get(x, y) as f64;
            // Central differences inside the cell, one-sided at its border.
            s.grad_x += match dx {
                0 => img.get(x + 1, y) - img.get(x, y),
                d if d == last => img.get(x, y) - img.get(x - 1, y),
                _ => (img.get(x + 1, y) - img.get(x - 1, y)) * 0.5,
            } as f64;
            s.grad_y += match dy {
                0 => img.get(x, y + 1) - img.get(x, y),
                d if d == last => img.get(x, y) - img.get(x, y - 1),
                _ => (img.get(x, y + 1) - img.get(x, y - 1)) * 0.5,
            } as f64;
        }
    }
    let n = (size * size) as f64;
    CellStats {
        intensity: s.intensity / n,
        grad_x: s.grad_x / n,
        grad_y: s.grad_y / n,
    }
}

/// LDB bits of one intensity image. The image is area-resampled to
/// `params.patch` square first if needed.
pub fn ldb_single(image: &GrayImage, params: &LdbParams) -> Result<BitString> {
    params.validate()?;
    let patch = params.patch as usize;
    let max_grid = *params.grids.iter().max().unwrap() as usize;
    if image.width() < max_grid || image.height() < max_grid {
        return Err(Error::InvalidInput(format!(
            "{}x{} image is too small for a {max_grid}x{max_grid} LDB grid",
            image.width(),
            image.height()
        )));
    }
    let resized;
    let img = if image.width() == patch && image.height() == patch {
        image
    } else {
        resized = resize_area(image, patch, patch);
        &resized
    };

    let mut bits = BitString::with_capacity(params.bits_per_modality());
    for &g in &params.grids {
        let g = g as usize;
        let size = patch / g;
        let cells: Vec<CellStats> = (0..g * g)
            .map(|c| cell_stats(img, (c % g) * size, (c / g) * size, size))
            .collect();
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                bits.push(cells[i].intensity > cells[j].intensity);
                bits.push(cells[i].grad_x > cells[j].grad_x);
                bits.push(cells[i].grad_y > cells[j].grad_y);
            }
        }
    }
    Ok(bits)
}

/// Compounded multi-modal LDB descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdbDescriptor {
    pub bits: BitString,
    /// Bit offsets and lengths per modality.
    pub layout: Vec<LayoutEntry>,
}

/// Intensity image of one modality as consumed by LDB.
pub fn ldb_input(frame: &FrameRecord, modality: Modality, alpha: f32) -> Result<GrayImage> {
    let plane = frame.require(modality)?;
    match modality {
        Modality::Rgb => illumination_invariant(plane, alpha),
        Modality::Depth => depth_to_unit(plane),
        Modality::Infrared => gray8_to_unit(plane),
    }
}

pub fn ldb_compound(frame: &FrameRecord, modalities: Modalities, params: &LdbParams) -> Result<LdbDescriptor> {
    let order = modalities.ldb_order();
    for &m in &order {
        frame.require(m)?;
    }
    let per = params.bits_per_modality();
    let mut bits = BitString::with_capacity(per * order.len());
    for &m in &order {
        bits.extend(&ldb_single(&ldb_input(frame, m, params.alpha)?, params)?);
    }
    Ok(LdbDescriptor {
        bits,
        layout: crate::gist::layout_for(&order, per),
    })
}

pub fn ldb_distance(a: &LdbDescriptor, b: &LdbDescriptor) -> Result<u32> {
    if a.layout != b.layout || a.bits.len() != b.bits.len() {
        return Err(Error::LayoutMismatch(format!(
            "LDB lengths {} and {}",
            a.bits.len(),
            b.bits.len()
        )));
    }
    Ok(hamming_words(a.bits.words(), b.bits.words()))
}
