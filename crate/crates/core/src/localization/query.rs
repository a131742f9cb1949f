use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{MultiDescriptor, TrajectoryDatabase};
use crate::bow::inverse_index_query;
use crate::error::{Error, Result};
use crate::geo::{degree_distance, geo_distance};
use crate::gist::l2_distance;
use crate::ldb::{hamming_range, hamming_words};
use crate::model::{FrameRecord, GeoCoordinate, QueryParams, SearchRadius};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Gist,
    Ldb,
    Bow,
}

/// One neighbour returned by one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub frame_index: usize,
    pub channel: Channel,
    /// L2 distance (GIST), Hamming distance (LDB) or L1 score (BoW).
    pub value: f64,
    pub is_key_position: bool,
    pub key_position_id: Option<u32>,
}

/// Union of the per-channel neighbour lists. Candidates are grouped by
/// channel (GIST, LDB, BoW), each group in rank order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchSet {
    pub candidates: Vec<MatchCandidate>,
    /// Frames appearing in any channel, ascending and deduplicated.
    pub distinct_frames: Vec<usize>,
}

impl MatchSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn channel(&self, channel: Channel) -> impl Iterator<Item = &MatchCandidate> {
        self.candidates.iter().filter(move |c| c.channel == channel)
    }

    /// Frame indexes returned by one channel, in rank order.
    pub fn channel_frames(&self, channel: Channel) -> Vec<usize> {
        self.channel(channel).map(|c| c.frame_index).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub matched: bool,
    pub is_key_position: bool,
    /// Distinct key-labeled frames among the matches.
    pub votes: usize,
    pub majority_key_id: Option<u32>,
    pub nearest_index: Option<usize>,
    pub params: QueryParams,
}

/// Wall time spent in each stage of [`localize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageTimings {
    pub extract: Duration,
    pub filter: Duration,
    pub knn: Duration,
    pub vote: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.extract + self.filter + self.knn + self.vote
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    pub prediction: PredictionResult,
    pub matches: MatchSet,
    pub timings: StageTimings,
}

/// Database frames within the search radius of `q`, ascending.
pub fn gnss_filter(db: &TrajectoryDatabase, q: GeoCoordinate, params: &QueryParams) -> Vec<usize> {
    let within: Box<dyn Fn(GeoCoordinate) -> bool> = match params.radius {
        SearchRadius::Meters(r) => Box::new(move |p| geo_distance(q, p) <= r),
        SearchRadius::LegacyDegrees(r) => Box::new(move |p| degree_distance(q, p) <= r),
    };
    db.frames()
        .iter()
        .enumerate()
        .filter(|(_, m)| within(m.geo))
        .map(|(i, _)| i)
        .collect()
}

fn smallest_k<T: Copy>(mut scored: Vec<(usize, T)>, k: usize, cmp: impl Fn(&T, &T) -> std::cmp::Ordering) -> Vec<(usize, T)> {
    scored.sort_by(|a, b| cmp(&a.1, &b.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// `(db offset, query offset, len)` of every LDB modality the query carries.
fn ldb_segments(db: &TrajectoryDatabase, q: &MultiDescriptor) -> Result<Vec<(usize, usize, usize)>> {
    let ex = db.extractor();
    let stored = ex.ldb_layout(db.config().ldb_modalities);
    let wanted = ex.ldb_layout(q.ldb_modalities);
    let total: usize = wanted.iter().map(|e| e.len).sum();
    if q.ldb.len() != total {
        return Err(Error::LayoutMismatch(format!(
            "query LDB has {} bits, {} expects {total}",
            q.ldb.len(),
            q.ldb_modalities
        )));
    }
    wanted
        .iter()
        .map(|w| {
            stored
                .iter()
                .find(|s| s.modality == w.modality)
                .map(|s| (s.offset, w.offset, w.len))
                .ok_or_else(|| {
                    Error::LayoutMismatch(format!(
                        "query uses {} LDB bits but the database stores {}",
                        w.modality,
                        db.config().ldb_modalities
                    ))
                })
        })
        .collect()
}

/// Per-channel nearest neighbours among `candidates`, fused into one set.
pub fn knn_match(db: &TrajectoryDatabase, q: &MultiDescriptor, candidates: &[usize], params: &QueryParams) -> Result<MatchSet> {
    if let Some(&bad) = candidates.iter().find(|&&c| c >= db.len()) {
        return Err(Error::InvalidInput(format!("candidate {bad} outside a {}-frame database", db.len())));
    }
    if q.ldb_modalities != params.modalities {
        return Err(Error::LayoutMismatch(format!(
            "query LDB computed over {} but parameters ask for {}",
            q.ldb_modalities, params.modalities
        )));
    }
    if q.gist.len() != db.extractor().gist_len() {
        return Err(Error::LayoutMismatch(format!(
            "query GIST length {} (database {})",
            q.gist.len(),
            db.extractor().gist_len()
        )));
    }
    if q.bow.vocabulary != db.vocabulary().fingerprint() {
        return Err(Error::LayoutMismatch("query BoW vector from a different vocabulary".into()));
    }
    let segments = ldb_segments(db, q)?;
    let whole = q.ldb_modalities == db.config().ldb_modalities;

    let gist = smallest_k(
        candidates.iter().map(|&i| (i, l2_distance(&q.gist, &db.gist_vectors()[i]))).collect(),
        params.k_gist,
        f64::total_cmp,
    );
    let ldb = smallest_k(
        candidates
            .iter()
            .map(|&i| {
                let stored = &db.ldb_vectors()[i];
                let d = if whole {
                    hamming_words(q.ldb.words(), stored.words())
                } else {
                    segments.iter().map(|&(so, qo, len)| hamming_range(stored, so, &q.ldb, qo, len)).sum()
                };
                (i, d)
            })
            .collect(),
        params.k_ldb,
        u32::cmp,
    );
    let bow = if candidates.is_empty() {
        Vec::new()
    } else {
        inverse_index_query(db.inverse_index(), db.bow_vectors(), &q.bow, params.k_bow, Some(candidates))
    };

    let meta = db.frames();
    let make = |frame_index: usize, channel, value| MatchCandidate {
        frame_index,
        channel,
        value,
        is_key_position: meta[frame_index].is_key_position(),
        key_position_id: meta[frame_index].key_position_id,
    };
    let mut out: Vec<MatchCandidate> = gist.iter().map(|&(i, d)| make(i, Channel::Gist, d)).collect();
    out.extend(ldb.iter().map(|&(i, d)| make(i, Channel::Ldb, d as f64)));
    out.extend(bow.iter().map(|&(i, s)| make(i, Channel::Bow, s)));
    let mut distinct: Vec<usize> = out.iter().map(|c| c.frame_index).collect();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(MatchSet {
        candidates: out,
        distinct_frames: distinct,
    })
}

/// Count key-labeled distinct frames and compare against the threshold.
pub fn predict_key_position(ms: &MatchSet, params: &QueryParams) -> PredictionResult {
    let mut labels = BTreeMap::new();
    for c in &ms.candidates {
        labels.entry(c.frame_index).or_insert(c.key_position_id);
    }
    let mut per_key = BTreeMap::<u32, usize>::new();
    for id in labels.values().flatten() {
        *per_key.entry(*id).or_default() += 1;
    }
    let votes = per_key.values().sum();
    let majority_key_id = per_key
        .iter()
        .fold(None::<(u32, usize)>, |best, (&id, &n)| match best {
            Some((_, m)) if m >= n => best,
            _ => Some((id, n)),
        })
        .map(|(id, _)| id);
    let nearest_index = [Channel::Gist, Channel::Ldb, Channel::Bow]
        .into_iter()
        .find_map(|ch| ms.channel(ch).next().map(|c| c.frame_index));
    let matched = !ms.is_empty();
    PredictionResult {
        matched,
        is_key_position: matched && votes >= params.vote_threshold,
        votes,
        majority_key_id,
        nearest_index,
        params: *params,
    }
}

/// Filter, match and vote for an already described query.
pub fn localize_descriptor(
    db: &TrajectoryDatabase,
    q: &MultiDescriptor,
    geo: GeoCoordinate,
    params: &QueryParams,
) -> Result<(PredictionResult, MatchSet)> {
    params.validate()?;
    let candidates = gnss_filter(db, geo, params);
    let ms = knn_match(db, q, &candidates, params)?;
    Ok((predict_key_position(&ms, params), ms))
}

/// Full pipeline for one query frame.
pub fn localize(db: &TrajectoryDatabase, frame: &FrameRecord, params: &QueryParams) -> Result<Localization> {
    params.validate()?;
    let t0 = Instant::now();
    let q = db.describe(frame, params.modalities)?;
    let t1 = Instant::now();
    let candidates = gnss_filter(db, frame.geo, params);
    let t2 = Instant::now();
    let matches = knn_match(db, &q, &candidates, params)?;
    let t3 = Instant::now();
    let prediction = predict_key_position(&matches, params);
    let t4 = Instant::now();
    Ok(Localization {
        prediction,
        matches,
        timings: StageTimings {
            extract: t1 - t0,
            filter: t2 - t1,
            knn: t3 - t2,
            vote: t4 - t3,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(frame_index: usize, channel: Channel, key: Option<u32>) -> MatchCandidate {
        MatchCandidate {
            frame_index,
            channel,
            value: 0.0,
            is_key_position: key.is_some(),
            key_position_id: key,
        }
    }

    fn set(cands: Vec<MatchCandidate>) -> MatchSet {
        let mut distinct: Vec<usize> = cands.iter().map(|c| c.frame_index).collect();
        distinct.sort_unstable();
        distinct.dedup();
        MatchSet {
            candidates: cands,
            distinct_frames: distinct,
        }
    }

    fn params(n: usize) -> QueryParams {
        QueryParams {
            vote_threshold: n,
            ..QueryParams::default()
        }
    }

    #[test]
    fn votes_count_distinct_key_frames() {
        let mut c: Vec<MatchCandidate> = (0..15).map(|i| cand(i, Channel::Gist, (i < 8).then_some(1))).collect();
        c.push(cand(0, Channel::Ldb, Some(1)));
        let ms = set(c);
        let p = predict_key_position(&ms, &params(5));
        assert!(p.matched && p.is_key_position);
        assert_eq!(p.votes, 8);
        assert_eq!(p.majority_key_id, Some(1));
        assert_eq!(p.nearest_index, Some(0));
    }

    #[test]
    fn below_threshold_is_not_key() {
        let ms = set((0..15).map(|i| cand(i, Channel::Bow, (i < 3).then_some(2))).collect());
        let p = predict_key_position(&ms, &params(4));
        assert!(p.matched && !p.is_key_position);
        assert_eq!(p.votes, 3);
    }

    #[test]
    fn empty_set_is_unmatched() {
        let p = predict_key_position(&MatchSet::default(), &params(1));
        assert!(!p.matched && !p.is_key_position);
        assert_eq!(p.votes, 0);
        assert_eq!(p.nearest_index, None);
        assert_eq!(p.majority_key_id, None);
    }

    #[test]
    fn majority_ties_go_to_smallest_id() {
        let ms = set(vec![
            cand(4, Channel::Ldb, Some(9)),
            cand(5, Channel::Ldb, Some(3)),
            cand(6, Channel::Bow, Some(9)),
            cand(7, Channel::Bow, Some(3)),
        ]);
        let p = predict_key_position(&ms, &params(1));
        assert_eq!(p.majority_key_id, Some(3));
        assert_eq!(p.nearest_index, Some(4), "LDB rank 1 when GIST is absent");
    }

    #[test]
    fn threshold_is_monotone() {
        let ms = set((0..10).map(|i| cand(i, Channel::Gist, (i % 3 == 0).then_some(1))).collect());
        let key_at = |n| predict_key_position(&ms, &params(n)).is_key_position;
        for n in 1..=15 {
            if key_at(n) {
                assert!((1..n).all(key_at));
            }
        }
    }
}
