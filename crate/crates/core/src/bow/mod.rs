//! Local-feature channel: ORB features quantized against a vocabulary tree
//! into tf-idf bag-of-words vectors, retrieved through an inverse index.
//!
//! BoW vectors are computed from the grayscale RGB image only.

pub mod fast;
pub mod orb;
pub mod pattern;
pub mod vector;
pub mod vocab;

pub use fast::{detect_fast, FastParams, Keypoint};
pub use orb::{extract_orb, orb_describe, Described, OrbDescriptor};
pub use vector::{bow_score, bow_transform, build_inverse_index, inverse_index_query, BowVector, InverseIndex};
pub use vocab::{Vocabulary, DEFAULT_BRANCHING, DEFAULT_DEPTH};

use crate::error::Result;
use crate::model::FrameRecord;
use crate::preprocess::to_grayscale;

/// ORB descriptors of a frame's RGB image.
pub fn frame_orb(frame: &FrameRecord, params: &FastParams) -> Result<Vec<OrbDescriptor>> {
    let gray = to_grayscale(&frame.rgb)?;
    Ok(extract_orb(&gray, params).1)
}

/// Train a vocabulary on the ORB features of every frame.
pub fn train_on_frames(frames: &[FrameRecord], params: &FastParams, branching: u32, depth: u32, seed: u64) -> Result<Vocabulary> {
    use rayon::prelude::*;
    let images = frames
        .par_iter()
        .map(|f| frame_orb(f, params))
        .collect::<Result<Vec<_>>>()?;
    Vocabulary::train(&images, branching, depth, seed)
}
