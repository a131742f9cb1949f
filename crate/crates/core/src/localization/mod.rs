//! Trajectory database, GNSS candidate filtering, per-channel kNN fusion
//! and key-position voting.
//!
//! A [`TrajectoryDatabase`] stores descriptors and GNSS metadata of every
//! recorded frame, never raw pixels. Queries extract the same descriptors
//! from one frame, restrict the database to frames within the search
//! radius, take the nearest neighbours of each channel and let the
//! key-labeled neighbours vote.
//!
//! ```
//! use keypos_core::bow::train_on_frames;
//! use keypos_core::localization::{build_database, localize, DescriptorConfig};
//! use keypos_core::model::{QueryParams, SearchRadius};
//! use keypos_core::synth::{synth_trajectory, SynthSpec};
//!
//! let traj = synth_trajectory(&SynthSpec::with_default_keys(30, 7))?;
//! let config = DescriptorConfig::default();
//! let vocab = train_on_frames(&traj.frames, &config.fast, 4, 2, 0)?;
//! let db = build_database(&traj, &vocab, &config)?;
//!
//! let params = QueryParams { radius: SearchRadius::Meters(1000.0), vote_threshold: 1, ..QueryParams::default() };
//! let out = localize(&db, &traj.frames[12], &params)?;
//! assert_eq!(out.prediction.nearest_index, Some(12));
//! # Ok::<(), keypos_core::Error>(())
//! ```

mod persist;
mod query;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use persist::{export_json, load_database, save_database, KPDB_VERSION};
pub use query::{
    gnss_filter, knn_match, localize, localize_descriptor, predict_key_position, Channel, Localization,
    MatchCandidate, MatchSet, PredictionResult, StageTimings,
};

use crate::bow::{bow_transform, extract_orb, BowVector, FastParams, InverseIndex, Vocabulary};
use crate::error::{Error, Result};
use crate::gist::{gist_multimodal, GaborBank, GistParams, LayoutEntry};
use crate::ldb::{ldb_compound, BitString, LdbParams};
use crate::model::{FrameRecord, GeoCoordinate, Modalities, Trajectory};
use crate::preprocess::to_grayscale;

/// Every constant needed to compute descriptors, stored with the database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorConfig {
    pub gist: GistParams,
    /// Modalities concatenated into the GIST vector.
    pub gist_modalities: Modalities,
    pub ldb: LdbParams,
    /// Modalities stored in the compounded LDB. Queries may use any subset.
    pub ldb_modalities: Modalities,
    pub fast: FastParams,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            gist: GistParams::default(),
            gist_modalities: Modalities::Rgb,
            ldb: LdbParams::default(),
            ldb_modalities: Modalities::RgbIrD,
            fast: FastParams::default(),
        }
    }
}

/// GNSS and label metadata of one database frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub id: u64,
    pub timestamp: f64,
    pub geo: GeoCoordinate,
    pub key_position_id: Option<u32>,
    pub view_tag: Option<u32>,
}

impl FrameMeta {
    pub fn of(frame: &FrameRecord) -> Self {
        FrameMeta {
            id: frame.id,
            timestamp: frame.timestamp,
            geo: frame.geo,
            key_position_id: frame.key_position_id,
            view_tag: frame.view_tag,
        }
    }

    pub fn is_key_position(&self) -> bool {
        self.key_position_id.is_some()
    }
}

/// The three-channel signature of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiDescriptor {
    pub gist: Vec<f32>,
    pub ldb: BitString,
    /// Modalities compounded into `ldb`, in LDB order.
    pub ldb_modalities: Modalities,
    pub bow: BowVector,
}

/// Descriptor extraction bound to one configuration.
#[derive(Debug, Clone)]
pub struct Extractor {
    config: DescriptorConfig,
    bank: GaborBank,
}

impl Extractor {
    pub fn new(config: DescriptorConfig) -> Result<Self> {
        config.ldb.validate()?;
        if config.gist.blocks == 0 || config.gist.blocks > config.gist.work_size {
            return Err(Error::InvalidParams(format!(
                "GIST block grid {} does not fit a {} px working image",
                config.gist.blocks, config.gist.work_size
            )));
        }
        let bank = GaborBank::from_params(&config.gist)?;
        Ok(Extractor { config, bank })
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.config
    }

    pub fn gist(&self, frame: &FrameRecord) -> Result<Vec<f32>> {
        let d = gist_multimodal(frame, &self.bank, self.config.gist.blocks as usize, self.config.gist_modalities)?;
        Ok(d.values)
    }

    pub fn ldb(&self, frame: &FrameRecord, modalities: Modalities) -> Result<BitString> {
        Ok(ldb_compound(frame, modalities, &self.config.ldb)?.bits)
    }

    pub fn bow(&self, frame: &FrameRecord, vocab: &Vocabulary) -> Result<BowVector> {
        let gray = to_grayscale(&frame.rgb)?;
        Ok(bow_transform(&extract_orb(&gray, &self.config.fast).1, vocab))
    }

    pub fn extract(&self, frame: &FrameRecord, vocab: &Vocabulary, ldb_modalities: Modalities) -> Result<MultiDescriptor> {
        Ok(MultiDescriptor {
            gist: self.gist(frame)?,
            ldb: self.ldb(frame, ldb_modalities)?,
            ldb_modalities,
            bow: self.bow(frame, vocab)?,
        })
    }

    /// Bit layout of a compounded LDB over `modalities`.
    pub fn ldb_layout(&self, modalities: Modalities) -> Vec<LayoutEntry> {
        crate::gist::layout_for(&modalities.ldb_order(), self.config.ldb.bits_per_modality())
    }

    pub fn gist_len(&self) -> usize {
        self.config.gist.descriptor_len() * self.config.gist_modalities.count()
    }
}

/// Immutable descriptor database of one recorded trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryDatabase {
    name: String,
    frames: Vec<FrameMeta>,
    gist: Vec<Vec<f32>>,
    ldb: Vec<BitString>,
    bow: Vec<BowVector>,
    vocab: Vocabulary,
    index: InverseIndex,
    extractor: Extractor,
}

impl TrajectoryDatabase {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: String,
        config: DescriptorConfig,
        frames: Vec<FrameMeta>,
        gist: Vec<Vec<f32>>,
        ldb: Vec<BitString>,
        bow: Vec<BowVector>,
        vocab: Vocabulary,
        index: InverseIndex,
    ) -> Result<Self> {
        let n = frames.len();
        if n == 0 {
            return Err(Error::Empty("database has no frames"));
        }
        if gist.len() != n || ldb.len() != n || bow.len() != n || index.frame_count() != n {
            return Err(Error::LayoutMismatch(format!(
                "{n} frames but {} GIST, {} LDB, {} BoW vectors and {} indexed frames",
                gist.len(),
                ldb.len(),
                bow.len(),
                index.frame_count()
            )));
        }
        let extractor = Extractor::new(config)?;
        let gist_len = extractor.gist_len();
        let ldb_len = extractor.config.ldb.bits_per_modality() * extractor.config.ldb_modalities.count();
        if let Some(i) = gist.iter().position(|g| g.len() != gist_len) {
            return Err(Error::LayoutMismatch(format!("frame {i}: GIST length {} (expected {gist_len})", gist[i].len())));
        }
        if let Some(i) = ldb.iter().position(|b| b.len() != ldb_len) {
            return Err(Error::LayoutMismatch(format!("frame {i}: LDB length {} (expected {ldb_len})", ldb[i].len())));
        }
        if let Some(i) = bow.iter().position(|b| b.vocabulary != vocab.fingerprint()) {
            return Err(Error::LayoutMismatch(format!("frame {i}: BoW vector from a different vocabulary")));
        }
        Ok(TrajectoryDatabase {
            name,
            frames,
            gist,
            ldb,
            bow,
            vocab,
            index,
            extractor,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.extractor.config
    }

    pub fn extractor(&self) -> &Extractor {
        &self.extractor
    }

    pub fn frames(&self) -> &[FrameMeta] {
        &self.frames
    }

    pub fn gist_vectors(&self) -> &[Vec<f32>] {
        &self.gist
    }

    pub fn ldb_vectors(&self) -> &[BitString] {
        &self.ldb
    }

    pub fn bow_vectors(&self) -> &[BowVector] {
        &self.bow
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn inverse_index(&self) -> &InverseIndex {
        &self.index
    }

    /// Descriptors of a query frame, with the LDB compounded over `ldb_modalities`.
    pub fn describe(&self, frame: &FrameRecord, ldb_modalities: Modalities) -> Result<MultiDescriptor> {
        self.extractor.extract(frame, &self.vocab, ldb_modalities)
    }
}

/// Extract every frame's descriptors (in parallel, deterministically) and
/// index the BoW vectors.
pub fn build_database(traj: &Trajectory, vocab: &Vocabulary, config: &DescriptorConfig) -> Result<TrajectoryDatabase> {
    if traj.frames.is_empty() {
        return Err(Error::Empty("trajectory has no frames"));
    }
    let extractor = Extractor::new(config.clone())?;
    for f in &traj.frames {
        for m in config.gist_modalities.gist_order().into_iter().chain(config.ldb_modalities.ldb_order()) {
            f.require(m)?;
        }
    }
    let descriptors = traj
        .frames
        .par_iter()
        .map(|f| extractor.extract(f, vocab, config.ldb_modalities))
        .collect::<Result<Vec<_>>>()?;
    let mut gist = Vec::with_capacity(descriptors.len());
    let mut ldb = Vec::with_capacity(descriptors.len());
    let mut bow = Vec::with_capacity(descriptors.len());
    for d in descriptors {
        gist.push(d.gist);
        ldb.push(d.ldb);
        bow.push(d.bow);
    }
    let index = InverseIndex::build(&bow);
    TrajectoryDatabase::from_parts(
        traj.name.clone(),
        config.clone(),
        traj.frames.iter().map(FrameMeta::of).collect(),
        gist,
        ldb,
        bow,
        vocab.clone(),
        index,
    )
}
