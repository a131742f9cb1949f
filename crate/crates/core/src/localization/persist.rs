//! KPDB database files and JSON export.
//!
//! Layout (little-endian):
//!
//! ```text
//! "KPDB" version:u32 frames:u32 name:(u32 len, utf-8)
//! gist: modalities:u8 scales:u32 orientations:u32* work_size:u32 blocks:u32
//! ldb:  modalities:u8 patch:u32 levels:u32 grids:u32* alpha:f32
//! fast: threshold:f32 max_keypoints:u32 levels:u32 scale_factor:f32
//! vocabulary fingerprint:u64 sha256:[u8; 32]
//! frames:   (id:u64 t:f64 lat:f64 lon:f64 key:u32 view:u32)*   absent labels = u32::MAX
//! gist:     len:u32 then len f32 per frame
//! ldb:      bits:u32 then ceil(bits/64) u64 per frame
//! bow:      (entries:u32 (word:u32 weight:f64)*)*
//! inverse:  words:u32 (word:u32 postings:u32 (frame:u32 weight:f64)*)*
//! vocabulary: len:u32 then the KPVC bytes
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{DescriptorConfig, FrameMeta, TrajectoryDatabase};
use crate::binio::{Reader, Writer};
use crate::bow::{BowVector, FastParams, InverseIndex, Vocabulary};
use crate::error::{Error, Result};
use crate::gist::GistParams;
use crate::ldb::{BitString, LdbParams};
use crate::model::{GeoCoordinate, Modalities};

const MAGIC: &[u8; 4] = b"KPDB";
pub const KPDB_VERSION: u32 = 1;
const KIND: &str = "database";
const NONE: u32 = u32::MAX;

fn write_config(w: &mut Writer, c: &DescriptorConfig) {
    w.u8(c.gist_modalities.code());
    w.u32(c.gist.orientations.len() as u32);
    for &o in &c.gist.orientations {
        w.u32(o);
    }
    w.u32(c.gist.work_size);
    w.u32(c.gist.blocks);
    w.u8(c.ldb_modalities.code());
    w.u32(c.ldb.patch);
    w.u32(c.ldb.grids.len() as u32);
    for &g in &c.ldb.grids {
        w.u32(g);
    }
    w.f32(c.ldb.alpha);
    w.f32(c.fast.threshold);
    w.u32(c.fast.max_keypoints as u32);
    w.u32(c.fast.levels as u32);
    w.f32(c.fast.scale_factor);
}

fn read_modalities(r: &mut Reader) -> Result<Modalities> {
    let code = r.u8()?;
    Modalities::from_code(code).ok_or_else(|| Error::format(KIND, format!("unknown modality code {code}")))
}

fn read_u32s(r: &mut Reader) -> Result<Vec<u32>> {
    let n = r.len(4)?;
    (0..n).map(|_| r.u32()).collect()
}

fn read_config(r: &mut Reader) -> Result<DescriptorConfig> {
    let gist_modalities = read_modalities(r)?;
    let gist = GistParams {
        orientations: read_u32s(r)?,
        work_size: r.u32()?,
        blocks: r.u32()?,
    };
    let ldb_modalities = read_modalities(r)?;
    let ldb = LdbParams {
        patch: r.u32()?,
        grids: read_u32s(r)?,
        alpha: r.f32()?,
    };
    let fast = FastParams {
        threshold: r.f32()?,
        max_keypoints: r.u32()? as usize,
        levels: r.u32()? as usize,
        scale_factor: r.f32()?,
    };
    Ok(DescriptorConfig {
        gist,
        gist_modalities,
        ldb,
        ldb_modalities,
        fast,
    })
}

fn opt(v: Option<u32>) -> u32 {
    v.unwrap_or(NONE)
}

fn unopt(v: u32) -> Option<u32> {
    (v != NONE).then_some(v)
}

impl TrajectoryDatabase {
    pub fn to_bytes(&self) -> Vec<u8> {
        let vocab = self.vocab.to_bytes();
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(KPDB_VERSION);
        w.u32(self.len() as u32);
        w.u32(self.name.len() as u32);
        w.bytes(self.name.as_bytes());
        write_config(&mut w, self.config());
        w.u64(self.vocab.fingerprint());
        w.bytes(&Sha256::digest(&vocab));

        for m in &self.frames {
            w.u64(m.id);
            w.f64(m.timestamp);
            w.f64(m.geo.lat);
            w.f64(m.geo.lon);
            w.u32(opt(m.key_position_id));
            w.u32(opt(m.view_tag));
        }
        for g in &self.gist {
            w.u32(g.len() as u32);
            for &v in g {
                w.f32(v);
            }
        }
        for b in &self.ldb {
            w.u32(b.len() as u32);
            for &word in b.words() {
                w.u64(word);
            }
        }
        for v in &self.bow {
            w.u32(v.entries.len() as u32);
            for &(word, weight) in &v.entries {
                w.u32(word);
                w.f64(weight);
            }
        }
        w.u32(self.index.word_count() as u32);
        for (word, postings) in self.index.words() {
            w.u32(word);
            w.u32(postings.len() as u32);
            for &(frame, weight) in postings {
                w.u32(frame);
                w.f64(weight);
            }
        }
        w.u32(vocab.len() as u32);
        w.bytes(&vocab);
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, KIND);
        if r.take(4)? != MAGIC {
            return Err(Error::format(KIND, "bad magic (not a KPDB file)"));
        }
        let version = r.u32()?;
        if version != KPDB_VERSION {
            return Err(Error::format(KIND, format!("unsupported version {version}")));
        }
        let n = r.len(36)?;
        let name_len = r.len(1)?;
        let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| Error::format(KIND, "name is not UTF-8"))?;
        let config = read_config(&mut r)?;
        let fingerprint = r.u64()?;
        let digest: [u8; 32] = r.take(32)?.try_into().unwrap();

        let mut frames = Vec::with_capacity(n);
        for _ in 0..n {
            frames.push(FrameMeta {
                id: r.u64()?,
                timestamp: r.f64()?,
                geo: GeoCoordinate {
                    lat: r.f64()?,
                    lon: r.f64()?,
                },
                key_position_id: unopt(r.u32()?),
                view_tag: unopt(r.u32()?),
            });
        }
        let mut gist = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.len(4)?;
            gist.push((0..len).map(|_| r.f32()).collect::<Result<Vec<_>>>()?);
        }
        let mut ldb = Vec::with_capacity(n);
        for _ in 0..n {
            let bits = r.u32()? as usize;
            let words = (0..bits.div_ceil(64)).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            ldb.push(BitString::from_words(words, bits).map_err(|e| Error::format(KIND, e.to_string()))?);
        }
        let mut bow = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.len(12)?;
            let entries = (0..len).map(|_| Ok((r.u32()?, r.f64()?))).collect::<Result<Vec<_>>>()?;
            if entries.windows(2).any(|e| e[0].0 >= e[1].0) || entries.iter().any(|e| e.1.is_nan() || e.1 <= 0.0) {
                return Err(Error::format(KIND, "BoW entries not sorted or not positive"));
            }
            bow.push(BowVector {
                vocabulary: fingerprint,
                entries,
            });
        }
        let words = r.len(8)?;
        let mut postings = BTreeMap::new();
        for _ in 0..words {
            let word = r.u32()?;
            let len = r.len(12)?;
            let list = (0..len).map(|_| Ok((r.u32()?, r.f64()?))).collect::<Result<Vec<_>>>()?;
            postings.insert(word, list);
        }
        let index = InverseIndex::from_parts(postings, n);
        if index != InverseIndex::build(&bow) {
            return Err(Error::format(KIND, "inverse index disagrees with the BoW vectors"));
        }
        let vocab_len = r.len(1)?;
        let vocab_bytes = r.take(vocab_len)?;
        if Sha256::digest(vocab_bytes).as_slice() != digest {
            return Err(Error::format(KIND, "embedded vocabulary does not match its hash"));
        }
        let vocab = Vocabulary::from_bytes(vocab_bytes)?;
        if vocab.fingerprint() != fingerprint {
            return Err(Error::format(KIND, "vocabulary fingerprint mismatch"));
        }
        r.finish()?;
        TrajectoryDatabase::from_parts(name, config, frames, gist, ldb, bow, vocab, index)
            .map_err(|e| Error::format(KIND, e.to_string()))
    }
}

pub fn save_database(db: &TrajectoryDatabase, path: &Path) -> Result<()> {
    std::fs::write(path, db.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_database(path: &Path) -> Result<TrajectoryDatabase> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    TrajectoryDatabase::from_bytes(&bytes)
}

#[derive(Serialize)]
struct JsonFrame<'a> {
    index: usize,
    #[serde(flatten)]
    meta: &'a FrameMeta,
    gist: &'a [f32],
    /// LDB words as 16-digit hex, least significant word first.
    ldb: Vec<String>,
    bow: &'a [(u32, f64)],
}

#[derive(Serialize)]
struct JsonDatabase<'a> {
    format: &'static str,
    version: u32,
    name: &'a str,
    config: &'a DescriptorConfig,
    vocabulary: serde_json::Value,
    inverse_index_words: usize,
    frames: Vec<JsonFrame<'a>>,
}

/// Human-readable dump of the whole database.
pub fn export_json(db: &TrajectoryDatabase) -> serde_json::Value {
    let frames = db
        .frames
        .iter()
        .enumerate()
        .map(|(i, meta)| JsonFrame {
            index: i,
            meta,
            gist: &db.gist[i],
            ldb: db.ldb[i].words().iter().map(|w| format!("{w:016x}")).collect(),
            bow: &db.bow[i].entries,
        })
        .collect();
    serde_json::to_value(JsonDatabase {
        format: "KPDB",
        version: KPDB_VERSION,
        name: &db.name,
        config: db.config(),
        vocabulary: db.vocab.to_json(),
        inverse_index_words: db.index.word_count(),
        frames,
    })
    .expect("database serializes to JSON")
}
