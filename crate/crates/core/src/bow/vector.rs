//! Sparse tf-idf vectors, L1 scoring and the word -> frame inverse index.

use serde::{Deserialize, Serialize};

use super::orb::OrbDescriptor;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// L1-normalized sparse word histogram. Entries are sorted by word id and
/// every weight is strictly positive.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BowVector {
    /// Fingerprint of the vocabulary the vector was computed with.
    pub vocabulary: u64,
    pub entries: Vec<(u32, f64)>,
}

impl BowVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn weight(&self, word: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&word, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Build from arbitrary positive weights: sorts, merges duplicates,
    /// drops non-positive entries and L1-normalizes.
    pub fn from_weights(vocabulary: u64, mut raw: Vec<(u32, f64)>) -> Self {
        raw.sort_by_key(|e| e.0);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
        for (w, v) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == w => last.1 += v,
                _ => entries.push((w, v)),
            }
        }
        entries.retain(|e| e.1 > 0.0);
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if total > 0.0 {
            entries.iter_mut().for_each(|e| e.1 /= total);
        }
        BowVector { vocabulary, entries }
    }

    /// True when the two supports intersect.
    pub fn shares_word(&self, other: &BowVector) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Quantize descriptors to words and weight term frequency by idf.
pub fn bow_transform(descs: &[OrbDescriptor], vocab: &Vocabulary) -> BowVector {
    let mut counts = std::collections::BTreeMap::<u32, u32>::new();
    for d in descs {
        *counts.entry(vocab.quantize(d)).or_default() += 1;
    }
    let raw = counts
        .into_iter()
        .map(|(w, c)| (w, c as f64 * vocab.idf(w)))
        .collect();
    BowVector::from_weights(vocab.fingerprint(), raw)
}

/// `1 - 0.5 * sum |a_w - b_w|` without the vocabulary check.
pub(crate) fn l1_score(a: &BowVector, b: &BowVector) -> f64 {
    let (x, y) = (&a.entries, &b.entries);
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < x.len() || j < y.len() {
        if j == y.len() || (i < x.len() && x[i].0 < y[j].0) {
            sum += x[i].1;
            i += 1;
        } else if i == x.len() || y[j].0 < x[i].0 {
            sum += y[j].1;
            j += 1;
        } else {
            sum += (x[i].1 - y[j].1).abs();
            i += 1;
            j += 1;
        }
    }
    (1.0 - 0.5 * sum).clamp(0.0, 1.0)
}

/// L1 similarity in [0, 1]; 1 for identical non-empty vectors.
pub fn bow_score(a: &BowVector, b: &BowVector) -> Result<f64> {
    if a.vocabulary != b.vocabulary {
        return Err(Error::LayoutMismatch(format!(
            "BoW vectors from vocabularies {:#018x} and {:#018x}",
            a.vocabulary, b.vocabulary
        )));
    }
    Ok(l1_score(a, b))
}

/// Posting lists: for every word, the frames containing it (ascending) with
/// the word's weight in that frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InverseIndex {
    postings: std::collections::BTreeMap<u32, Vec<(u32, f64)>>,
    frames: usize,
}

impl InverseIndex {
    pub fn build(vectors: &[BowVector]) -> Self {
        let mut postings = std::collections::BTreeMap::<u32, Vec<(u32, f64)>>::new();
        for (frame, v) in vectors.iter().enumerate() {
            for &(w, weight) in &v.entries {
                postings.entry(w).or_default().push((frame as u32, weight));
            }
        }
        InverseIndex {
            postings,
            frames: vectors.len(),
        }
    }

    pub(crate) fn from_parts(postings: std::collections::BTreeMap<u32, Vec<(u32, f64)>>, frames: usize) -> Self {
        InverseIndex { postings, frames }
    }

    pub fn postings(&self, word: u32) -> &[(u32, f64)] {
        self.postings.get(&word).map_or(&[], |p| p.as_slice())
    }

    pub fn words(&self) -> impl Iterator<Item = (u32, &[(u32, f64)])> {
        self.postings.iter().map(|(w, p)| (*w, p.as_slice()))
    }

    pub fn word_count(&self) -> usize {
        self.postings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    /// Number of indexed frames, including frames with empty vectors.
    pub fn frame_count(&self) -> usize {
        self.frames
    }
}

pub fn build_inverse_index(vectors: &[BowVector]) -> InverseIndex {
    InverseIndex::build(vectors)
}

/// The `k` best frames for `query` among those sharing at least one word
/// with it, optionally restricted to `candidates` (sorted ascending).
/// Frames are found through the posting lists and then scored with the
/// full L1 score; results are ordered by score descending, then frame.
pub fn inverse_index_query(
    index: &InverseIndex,
    vectors: &[BowVector],
    query: &BowVector,
    k: usize,
    candidates: Option<&[usize]>,
) -> Vec<(usize, f64)> {
    if query.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut hit = vec![false; index.frames];
    for &(w, _) in &query.entries {
        for &(f, _) in index.postings(w) {
            hit[f as usize] = true;
        }
    }
    if let Some(allowed) = candidates {
        let mut mask = vec![false; index.frames];
        for &c in allowed {
            if c < mask.len() {
                mask[c] = true;
            }
        }
        hit.iter_mut().zip(mask).for_each(|(h, m)| *h &= m);
    }
    let mut scored: Vec<(usize, f64)> = hit
        .iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(f, _)| (f, l1_score(query, &vectors[f])))
        .collect();
    sort_by_score(&mut scored);
    scored.truncate(k);
    scored
}

pub(crate) fn sort_by_score(v: &mut [(usize, f64)]) {
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[(u32, f64)]) -> BowVector {
        BowVector {
            vocabulary: 1,
            entries: entries.to_vec(),
        }
    }

    #[test]
    fn score_examples() {
        let a = v(&[(1, 0.5), (2, 0.5)]);
        let b = v(&[(1, 1.0)]);
        assert_eq!(bow_score(&a, &a).unwrap(), 1.0);
        assert_eq!(bow_score(&a, &b).unwrap(), 0.5);
        assert_eq!(bow_score(&b, &a).unwrap(), 0.5);
        assert_eq!(bow_score(&b, &v(&[(3, 1.0)])).unwrap(), 0.0);
        let other = BowVector { vocabulary: 2, ..b.clone() };
        assert!(bow_score(&b, &other).is_err());
    }

    #[test]
    fn from_weights_normalizes() {
        let x = BowVector::from_weights(1, vec![(5, 2.0), (1, 1.0), (5, 1.0), (9, 0.0)]);
        assert_eq!(x.entries, vec![(1, 0.25), (5, 0.75)]);
        assert!(BowVector::from_weights(1, vec![]).is_empty());
    }

    #[test]
    fn single_posting() {
        let idx = build_inverse_index(&[v(&[(3, 1.0)])]);
        assert_eq!(idx.word_count(), 1);
        assert_eq!(idx.postings(3), &[(0, 1.0)]);
        assert!(build_inverse_index(&vec![BowVector::default(); 4]).is_empty());
    }

    #[test]
    fn query_finds_itself() {
        let vectors: Vec<BowVector> = (0..10u32)
            .map(|i| BowVector::from_weights(1, vec![(i, 1.0), (i + 1, 2.0), (20, 0.5)]))
            .collect();
        let idx = build_inverse_index(&vectors);
        let res = inverse_index_query(&idx, &vectors, &vectors[7], 1, None);
        assert_eq!(res, vec![(7, 1.0)]);
        assert!(inverse_index_query(&idx, &vectors, &BowVector { vocabulary: 1, entries: vec![] }, 3, None).is_empty());
        let restricted = inverse_index_query(&idx, &vectors, &vectors[7], 3, Some(&[1, 2]));
        assert!(restricted.iter().all(|(f, _)| [1, 2].contains(f)));
    }
}
