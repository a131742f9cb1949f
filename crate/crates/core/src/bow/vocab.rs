//! Hierarchical visual vocabulary over binary descriptors.
//!
//! Training clusters descriptors recursively with k-majority (Hamming
//! assignment, per-bit majority centroids). Leaves are the visual words and
//! carry an idf weight `max(0, ln(N / (1 + n_i)))`, where `N` is the number
//! of training images and `n_i` the number of images containing word `i`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::orb::OrbDescriptor;
use super::pattern::ORB_PATTERN_SEED;
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

pub const DEFAULT_BRANCHING: u32 = 9;
pub const DEFAULT_DEPTH: u32 = 3;
const MAX_ITERATIONS: usize = 20;

const MAGIC: &[u8; 4] = b"KPVC";
const VERSION: u32 = 1;
const NO_PARENT: u32 = u32::MAX;
const NO_WORD: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    parent: u32,
    centroid: OrbDescriptor,
    children: Vec<u32>,
    word: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    branching: u32,
    depth: u32,
    seed: u64,
    pattern_seed: u64,
    training_images: u32,
    nodes: Vec<Node>,
    /// Word id -> leaf node.
    word_nodes: Vec<u32>,
    idf: Vec<f64>,
    fingerprint: u64,
}

/// Per-bit majority; ties resolve to 0.
fn majority(members: &[OrbDescriptor]) -> OrbDescriptor {
    let mut counts = [0u32; 256];
    for d in members {
        for (i, c) in counts.iter_mut().enumerate() {
            *c += d.bit(i) as u32;
        }
    }
    let mut out = OrbDescriptor::default();
    for (i, &c) in counts.iter().enumerate() {
        if 2 * c as usize > members.len() {
            out.set(i);
        }
    }
    out
}

fn nearest(centers: &[OrbDescriptor], d: &OrbDescriptor) -> usize {
    let mut best = 0;
    let mut best_d = u32::MAX;
    for (i, c) in centers.iter().enumerate() {
        let dist = c.distance(d);
        if dist < best_d {
            best_d = dist;
            best = i;
        }
    }
    best
}

/// k-majority clustering. Returns `(centroid, members)` for every
/// non-empty cluster, in center order.
fn k_majority(descs: &[OrbDescriptor], k: usize, rng: &mut ChaCha8Rng) -> Vec<(OrbDescriptor, Vec<OrbDescriptor>)> {
    let distinct: Vec<OrbDescriptor> = descs.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if distinct.len() <= k {
        return distinct
            .iter()
            .map(|c| (*c, descs.iter().filter(|d| *d == c).copied().collect()))
            .collect();
    }
    let mut centers = distinct;
    centers.shuffle(rng);
    centers.truncate(k);

    let mut assignment = vec![usize::MAX; descs.len()];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (a, d) in assignment.iter_mut().zip(descs) {
            let c = nearest(&centers, d);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (ci, center) in centers.iter_mut().enumerate() {
            let members: Vec<OrbDescriptor> = descs
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == ci)
                .map(|(d, _)| *d)
                .collect();
            if !members.is_empty() {
                *center = majority(&members);
            }
        }
    }
    let mut groups: Vec<Vec<OrbDescriptor>> = vec![Vec::new(); centers.len()];
    for (d, &a) in descs.iter().zip(&assignment) {
        groups[a].push(*d);
    }
    centers
        .into_iter()
        .zip(groups)
        .filter(|(_, g)| !g.is_empty())
        .collect()
}

fn node_rng(seed: u64, node: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (node as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl Vocabulary {
    /// Train a vocabulary. `images` groups descriptors by training image;
    /// the grouping only feeds the idf statistics.
    pub fn train(images: &[Vec<OrbDescriptor>], branching: u32, depth: u32, seed: u64) -> Result<Self> {
        if branching < 2 {
            return Err(Error::InvalidParams(format!("branching factor must be >= 2, got {branching}")));
        }
        if depth < 1 {
            return Err(Error::InvalidParams("vocabulary depth must be >= 1".into()));
        }
        let corpus: Vec<OrbDescriptor> = images.iter().flatten().copied().collect();
        if corpus.is_empty() {
            return Err(Error::Empty("vocabulary training corpus is empty"));
        }
        let mut voc = Vocabulary {
            branching,
            depth,
            seed,
            pattern_seed: ORB_PATTERN_SEED,
            training_images: images.len() as u32,
            nodes: vec![Node {
                parent: NO_PARENT,
                centroid: OrbDescriptor::default(),
                children: Vec::new(),
                word: None,
            }],
            word_nodes: Vec::new(),
            idf: Vec::new(),
            fingerprint: 0,
        };
        voc.grow(0, &corpus, 0);

        let n = images.len() as f64;
        let mut containing = vec![0u32; voc.word_nodes.len()];
        for img in images {
            let words: BTreeSet<u32> = img.iter().map(|d| voc.quantize(d)).collect();
            for w in words {
                containing[w as usize] += 1;
            }
        }
        voc.idf = containing
            .iter()
            .map(|&c| (n / (1.0 + c as f64)).ln().max(0.0))
            .collect();
        voc.fingerprint = fingerprint(&voc.to_bytes());
        Ok(voc)
    }

    fn grow(&mut self, node: u32, descs: &[OrbDescriptor], level: u32) {
        let mut rng = node_rng(self.seed, node);
        let clusters = k_majority(descs, self.branching as usize, &mut rng);
        let first = self.nodes.len() as u32;
        for (centroid, _) in &clusters {
            self.nodes.push(Node {
                parent: node,
                centroid: *centroid,
                children: Vec::new(),
                word: None,
            });
        }
        self.nodes[node as usize].children = (first..first + clusters.len() as u32).collect();
        for (i, (_, members)) in clusters.into_iter().enumerate() {
            let child = first + i as u32;
            let single = members.iter().all(|d| *d == members[0]);
            if level + 1 >= self.depth || single {
                self.nodes[child as usize].word = Some(self.word_nodes.len() as u32);
                self.word_nodes.push(child);
            } else {
                self.grow(child, &members, level + 1);
            }
        }
    }

    /// Word id reached by descending the tree along nearest centroids
    /// (ties to the first child).
    pub fn quantize(&self, d: &OrbDescriptor) -> u32 {
        let mut node = &self.nodes[0];
        loop {
            if let Some(w) = node.word {
                return w;
            }
            let mut best = node.children[0];
            let mut best_d = u32::MAX;
            for &c in &node.children {
                let dist = self.nodes[c as usize].centroid.distance(d);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            node = &self.nodes[best as usize];
        }
    }

    pub fn word_count(&self) -> usize {
        self.word_nodes.len()
    }

    pub fn idf(&self, word: u32) -> f64 {
        self.idf[word as usize]
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pattern_seed(&self) -> u64 {
        self.pattern_seed
    }

    pub fn training_images(&self) -> u32 {
        self.training_images
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Stable 64-bit identity derived from the serialized vocabulary.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// SHA-256 of the serialized vocabulary, hex encoded.
    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u32(self.branching);
        w.u32(self.depth);
        w.u64(self.seed);
        w.u64(self.pattern_seed);
        w.u32(self.training_images);
        w.u32(self.nodes.len() as u32);
        for n in &self.nodes {
            w.u32(n.parent);
            w.bytes(&n.centroid.to_le_bytes());
            w.u32(n.word.unwrap_or(NO_WORD));
        }
        w.u32(self.idf.len() as u32);
        for &v in &self.idf {
            w.f64(v);
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const KIND: &str = "vocabulary";
        let mut r = Reader::new(bytes, KIND);
        if r.take(4)? != MAGIC {
            return Err(Error::format(KIND, "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(KIND, format!("unsupported version {version}")));
        }
        let branching = r.u32()?;
        let depth = r.u32()?;
        let seed = r.u64()?;
        let pattern_seed = r.u64()?;
        if pattern_seed != ORB_PATTERN_SEED {
            return Err(Error::format(
                KIND,
                format!("trained with test pattern {pattern_seed:#x}, this build uses {ORB_PATTERN_SEED:#x}"),
            ));
        }
        let training_images = r.u32()?;
        let node_count = r.u32()? as usize;
        if node_count == 0 || node_count > r.remaining() / 40 {
            return Err(Error::format(KIND, format!("implausible node count {node_count}")));
        }
        let mut nodes: Vec<Node> = Vec::with_capacity(node_count);
        let mut word_nodes = Vec::new();
        for id in 0..node_count {
            let parent = r.u32()?;
            let centroid = OrbDescriptor::from_le_bytes(r.take(32)?.try_into().unwrap());
            let word = r.u32()?;
            if id == 0 && parent != NO_PARENT || id > 0 && parent as usize >= id {
                return Err(Error::format(KIND, format!("node {id} has invalid parent {parent}")));
            }
            let word = (word != NO_WORD).then_some(word);
            if let Some(w) = word {
                if w as usize != word_nodes.len() {
                    return Err(Error::format(KIND, format!("word ids out of order at node {id}")));
                }
                word_nodes.push(id as u32);
            }
            if id > 0 {
                nodes[parent as usize].children.push(id as u32);
            }
            nodes.push(Node {
                parent,
                centroid,
                children: Vec::new(),
                word,
            });
        }
        for (id, n) in nodes.iter().enumerate() {
            if n.word.is_none() && n.children.is_empty() {
                return Err(Error::format(KIND, format!("inner node {id} has no children")));
            }
            if n.word.is_some() && !n.children.is_empty() {
                return Err(Error::format(KIND, format!("word node {id} has children")));
            }
        }
        let idf_len = r.u32()? as usize;
        if idf_len != word_nodes.len() {
            return Err(Error::format(KIND, "idf table does not match word count"));
        }
        let idf = (0..idf_len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if idf.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::format(KIND, "negative or non-finite idf weight"));
        }
        r.finish()?;
        Ok(Vocabulary {
            branching,
            depth,
            seed,
            pattern_seed,
            training_images,
            nodes,
            word_nodes,
            idf,
            fingerprint: fingerprint(bytes),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Human-readable dump for debugging.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct NodeJson {
            id: usize,
            parent: Option<u32>,
            centroid: String,
            word: Option<u32>,
        }
        let nodes: Vec<NodeJson> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeJson {
                id,
                parent: (n.parent != NO_PARENT).then_some(n.parent),
                centroid: hex::encode(n.centroid.to_le_bytes()),
                word: n.word,
            })
            .collect();
        serde_json::json!({
            "format": "KPVC",
            "version": VERSION,
            "branching": self.branching,
            "depth": self.depth,
            "seed": self.seed,
            "pattern_seed": self.pattern_seed,
            "training_images": self.training_images,
            "words": self.word_count(),
            "sha256": self.sha256_hex(),
            "idf": self.idf,
            "nodes": nodes,
        })
    }
}

fn fingerprint(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_images(seed: u64, images: usize, per: usize) -> Vec<Vec<OrbDescriptor>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..images)
            .map(|_| (0..per).map(|_| OrbDescriptor(rng.random())).collect())
            .collect()
    }

    #[test]
    fn word_count_bounded_by_tree_size() {
        let imgs = random_images(1, 30, 60);
        let v = Vocabulary::train(&imgs, 9, 3, 7).unwrap();
        assert!(v.word_count() <= 729);
        assert!(v.word_count() > 81);
        assert!((0..v.word_count() as u32).all(|w| v.idf(w) >= 0.0));
    }

    #[test]
    fn repeated_descriptor_gives_one_word() {
        let d = OrbDescriptor([3, 5, 7, 11]);
        let v = Vocabulary::train(&[vec![d; 50]], 9, 3, 1).unwrap();
        assert_eq!(v.word_count(), 1);
        assert_eq!(v.quantize(&d), 0);
    }

    #[test]
    fn training_is_deterministic() {
        let imgs = random_images(2, 10, 40);
        let a = Vocabulary::train(&imgs, 4, 3, 99).unwrap();
        let b = Vocabulary::train(&imgs, 4, 3, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Vocabulary::train(&[], 9, 3, 0).is_err());
        assert!(Vocabulary::train(&[vec![]], 9, 3, 0).is_err());
        let imgs = random_images(3, 2, 5);
        assert!(Vocabulary::train(&imgs, 1, 3, 0).is_err());
        assert!(Vocabulary::train(&imgs, 2, 0, 0).is_err());
    }

    #[test]
    fn every_descriptor_reaches_a_word() {
        let imgs = random_images(4, 8, 50);
        let v = Vocabulary::train(&imgs, 5, 2, 3).unwrap();
        let probes = random_images(5, 1, 500);
        for d in &probes[0] {
            assert!((v.quantize(d) as usize) < v.word_count());
        }
    }

    #[test]
    fn idf_formula() {
        // Two well separated descriptors; the first occurs in all three
        // images, the second in one.
        let a = OrbDescriptor([0; 4]);
        let b = OrbDescriptor([u64::MAX; 4]);
        let imgs = vec![vec![a, b], vec![a], vec![a]];
        let v = Vocabulary::train(&imgs, 2, 1, 0).unwrap();
        let (wa, wb) = (v.quantize(&a), v.quantize(&b));
        assert_eq!(v.idf(wa), 0.0); // ln(3 / 4) < 0, clamped
        assert!((v.idf(wb) - (3.0f64 / 2.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn bytes_round_trip() {
        let imgs = random_images(6, 6, 30);
        let v = Vocabulary::train(&imgs, 3, 3, 11).unwrap();
        let bytes = v.to_bytes();
        assert_eq!(&bytes[..4], b"KPVC");
        let back = Vocabulary::from_bytes(&bytes).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Vocabulary::from_bytes(&bad).is_err());
    }
}
