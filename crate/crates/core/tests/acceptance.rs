//! Acceptance criteria. Every test writes one `criterion N: PASS|FAIL` line
//! straight to stderr (bypassing the test harness capture) before asserting.

use std::collections::HashMap;
use std::io::Write as _;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use keypos_core::bow::{
    bow_score, extract_orb, inverse_index_query, train_on_frames, BowVector, OrbDescriptor, DEFAULT_BRANCHING,
    DEFAULT_DEPTH,
};
use keypos_core::evaluation::{
    confusion_from_run, evaluate_cell, evaluate_run, full_trajectory_error, grid_search, precision_recall, sensitivity,
    ConfusionCounts, Grid, GroundTruth,
};
use keypos_core::gist::{gist_descriptor, GaborBank, GistParams};
use keypos_core::ldb::{ldb_compound, BitString, LdbParams};
use keypos_core::localization::{
    build_database, gnss_filter, knn_match, load_database, localize, save_database, Channel, DescriptorConfig,
    TrajectoryDatabase,
};
use keypos_core::model::{FrameRecord, GeoCoordinate, ImagePlane, Modalities, QueryParams, SearchRadius, Trajectory};
use keypos_core::preprocess::{illumination_invariant, to_grayscale, GrayImage};
use keypos_core::synth::{perturb_trajectory, synth_trajectory, Perturbation, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} [{title}] {detail}");
}

/// Vocabulary seed used throughout.
const VOCAB_SEED: u64 = 0;

struct Setup {
    traj: Trajectory,
    db: TrajectoryDatabase,
    elapsed: Duration,
}

fn build(spec: &SynthSpec) -> Setup {
    let t = Instant::now();
    let traj = synth_trajectory(spec).unwrap();
    let config = DescriptorConfig::default();
    let vocab = train_on_frames(&traj.frames, &config.fast, DEFAULT_BRANCHING, DEFAULT_DEPTH, VOCAB_SEED).unwrap();
    let db = build_database(&traj, &vocab, &config).unwrap();
    Setup {
        traj,
        db,
        elapsed: t.elapsed(),
    }
}

/// 150 frames, three key spans, seed 1.
fn main_set() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| build(&SynthSpec::with_default_keys(150, 1)))
}

/// 200 frames for the oracle comparisons.
fn oracle_set() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| build(&SynthSpec::with_default_keys(200, 2)))
}

fn permissive(n: usize) -> QueryParams {
    QueryParams {
        k_gist: 5,
        k_ldb: 5,
        k_bow: 5,
        radius: SearchRadius::Meters(10_000.0),
        vote_threshold: n,
        modalities: Modalities::RgbIrD,
    }
}

#[test]
fn criterion_01_self_query_exactness() {
    let _g = serial();
    let s = main_set();
    let t = Instant::now();
    let records = evaluate_run(&s.db, &s.traj, &permissive(1), GroundTruth::Aligned).unwrap();
    let total = s.elapsed + t.elapsed();
    let err = full_trajectory_error(&records).unwrap();
    let sens = sensitivity(&records).unwrap();
    let cc = confusion_from_run(&records);
    let pr = precision_recall(&cc);
    let nearest_ok = records.iter().all(|r| r.prediction.nearest_index == Some(r.query_index));
    let pass = err == 0.0
        && sens == 1.0
        && pr.precision == 1.0
        && pr.recall == 1.0
        && nearest_ok
        && total <= Duration::from_secs(60)
        && cc.true_positives > 0;
    report(
        1,
        "self-query exactness",
        pass,
        &format!(
            "error={err} sensitivity={sens} precision={} recall={} tp={} fp={} fn={} nearest_is_self={nearest_ok} runtime={:.1}s",
            pr.precision,
            pr.recall,
            cc.true_positives,
            cc.false_positives,
            cc.false_negatives,
            total.as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Independent oracles

/// L1 similarity through a hash map: sum over words of min(a, b) equals
/// 1 - |a - b|_1 / 2 for L1-normalized vectors, but is computed here the
/// long way round.
fn oracle_l1(a: &BowVector, b: &BowVector) -> f64 {
    let mut diff: HashMap<u32, f64> = HashMap::new();
    for &(w, v) in &a.entries {
        *diff.entry(w).or_default() += v;
    }
    for &(w, v) in &b.entries {
        *diff.entry(w).or_default() -= v;
    }
    let mut words: Vec<u32> = diff.keys().copied().collect();
    words.sort_unstable();
    let sum: f64 = words.iter().map(|w| diff[w].abs()).sum();
    (1.0 - 0.5 * sum).clamp(0.0, 1.0)
}

fn oracle_rank(scored: Vec<(usize, f64)>, k: usize, descending: bool) -> Vec<usize> {
    let mut v = scored;
    v.sort_by(|a, b| {
        let c = a.1.partial_cmp(&b.1).unwrap();
        (if descending { c.reverse() } else { c }).then(a.0.cmp(&b.0))
    });
    v.into_iter().take(k).map(|x| x.0).collect()
}

/// Great-circle distance through 3-D unit vectors and the chord length.
fn oracle_meters(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
    let v = |p: GeoCoordinate| {
        let (la, lo) = (p.lat.to_radians(), p.lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (x, y) = (v(a), v(b));
    let chord = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
    2.0 * 6_371_000.0 * (chord / 2.0).asin()
}

fn random_near(rng: &mut ChaCha8Rng, db: &TrajectoryDatabase) -> GeoCoordinate {
    let base = db.frames()[rng.random_range(0..db.len())].geo;
    GeoCoordinate {
        lat: base.lat + rng.random_range(-0.0005..0.0005),
        lon: base.lon + rng.random_range(-0.0005..0.0005),
    }
}

fn other_views(count: usize, seed: u64) -> Trajectory {
    let t = synth_trajectory(&SynthSpec::with_default_keys(count, seed)).unwrap();
    perturb_trajectory(
        &t,
        &Perturbation {
            noise_sigma: 3.0 / 255.0,
            gain: 1.1,
            seed,
        },
    )
}

#[test]
fn criterion_02_retrieval_oracles() {
    let _g = serial();
    let s = oracle_set();
    let db = &s.db;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let foreign = other_views(40, 99);

    let mut index_ok = 0;
    for q in 0..100 {
        let query = if q % 2 == 0 {
            db.bow_vectors()[rng.random_range(0..db.len())].clone()
        } else {
            let f = &foreign.frames[rng.random_range(0..foreign.len())];
            db.describe(f, Modalities::Rgb).unwrap().bow
        };
        let k = rng.random_range(1..=25);
        let restrict: Option<Vec<usize>> = (q % 3 == 0).then(|| (0..db.len()).filter(|_| rng.random_bool(0.5)).collect());
        let got: Vec<usize> = inverse_index_query(db.inverse_index(), db.bow_vectors(), &query, k, restrict.as_deref())
            .into_iter()
            .map(|x| x.0)
            .collect();
        let allowed = |i: &usize| restrict.as_ref().is_none_or(|r| r.contains(i));
        let scored = (0..db.len())
            .filter(allowed)
            .map(|i| (i, oracle_l1(&query, &db.bow_vectors()[i])))
            .filter(|x| x.1 > 0.0)
            .collect();
        if got == oracle_rank(scored, k, true) {
            index_ok += 1;
        }
    }

    let mut filter_ok = 0;
    for q in 0..100 {
        let geo = random_near(&mut rng, db);
        let legacy = q % 4 == 3;
        let radius = if legacy {
            SearchRadius::LegacyDegrees(rng.random_range(0.00005..0.002))
        } else {
            SearchRadius::Meters(rng.random_range(1.0..200.0))
        };
        let params = QueryParams { radius, ..permissive(1) };
        let got = gnss_filter(db, geo, &params);
        let want: Vec<usize> = (0..db.len())
            .filter(|&i| {
                let p = db.frames()[i].geo;
                match radius {
                    SearchRadius::Meters(r) => oracle_meters(geo, p) <= r,
                    SearchRadius::LegacyDegrees(r) => ((geo.lat - p.lat).powi(2) + (geo.lon - p.lon).powi(2)).sqrt() <= r,
                }
            })
            .collect();
        if got == want {
            filter_ok += 1;
        }
    }
    let pass = index_ok == 100 && filter_ok == 100;
    report(
        2,
        "retrieval oracle equivalence",
        pass,
        &format!("inverse_index={index_ok}/100 gnss_filter={filter_ok}/100 frames={}", db.len()),
    );
    assert!(pass);
}

fn oracle_hamming(a: &BitString, a_off: usize, b: &BitString, b_off: usize, len: usize) -> u32 {
    (0..len).filter(|&i| a.get(a_off + i) != b.get(b_off + i)).count() as u32
}

#[test]
fn criterion_03_knn_oracles() {
    let _g = serial();
    let s = oracle_set();
    let db = &s.db;
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let foreign = other_views(60, 77);
    let per_modality = LdbParams::default().bits_per_modality();
    let stored_order = db.config().ldb_modalities.ldb_order();

    let mut ok = 0;
    for q in 0..100 {
        let frame = &foreign.frames[q % foreign.len()];
        let modalities = [Modalities::Rgb, Modalities::RgbIr, Modalities::RgbIrD][rng.random_range(0..3)];
        let params = QueryParams {
            k_gist: rng.random_range(0..=8),
            k_ldb: rng.random_range(0..=8),
            k_bow: rng.random_range(1..=8),
            radius: SearchRadius::Meters(rng.random_range(5.0..400.0)),
            vote_threshold: 1,
            modalities,
        };
        let geo = random_near(&mut rng, db);
        let candidates = gnss_filter(db, geo, &params);
        let desc = db.describe(frame, modalities).unwrap();
        let ms = knn_match(db, &desc, &candidates, &params).unwrap();

        let gist_oracle = oracle_rank(
            candidates
                .iter()
                .map(|&i| {
                    let sq: f64 = desc.gist.iter().zip(&db.gist_vectors()[i]).map(|(a, b)| (*a as f64 - *b as f64).powi(2)).sum();
                    (i, sq)
                })
                .collect(),
            params.k_gist,
            false,
        );
        let ldb_oracle = oracle_rank(
            candidates
                .iter()
                .map(|&i| {
                    let stored = &db.ldb_vectors()[i];
                    let d: u32 = modalities
                        .ldb_order()
                        .iter()
                        .enumerate()
                        .map(|(qi, m)| {
                            let si = stored_order.iter().position(|x| x == m).unwrap();
                            oracle_hamming(&desc.ldb, qi * per_modality, stored, si * per_modality, per_modality)
                        })
                        .sum();
                    (i, d as f64)
                })
                .collect(),
            params.k_ldb,
            false,
        );
        let bow_oracle = oracle_rank(
            candidates
                .iter()
                .map(|&i| (i, oracle_l1(&desc.bow, &db.bow_vectors()[i])))
                .filter(|x| x.1 > 0.0)
                .collect(),
            params.k_bow,
            true,
        );
        if ms.channel_frames(Channel::Gist) == gist_oracle
            && ms.channel_frames(Channel::Ldb) == ldb_oracle
            && ms.channel_frames(Channel::Bow) == bow_oracle
        {
            ok += 1;
        }
    }
    let pass = ok == 100;
    report(3, "kNN oracle equivalence", pass, &format!("{ok}/100 queries matched all three channel oracles"));
    assert!(pass);
}

/// RGB image whose channel values are multiples of 4 in [4, 124], so every
/// tested scale maps it to exact 8-bit values.
fn lattice_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Vec<u8> {
    let blocks: Vec<[u8; 3]> = (0..48).map(|_| [0; 3].map(|_: u8| 4 * rng.random_range(1..=31u8))).collect();
    let mut out = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            let b = blocks[((y / 40) * 8 + x / 40) as usize % blocks.len()];
            let jitter = rng.random_range(0..3u8) * 4;
            out.extend(b.map(|c| (c + jitter).min(124)));
        }
    }
    out
}

fn scale_exact(samples: &[u8], s: f64) -> Vec<u8> {
    samples
        .iter()
        .map(|&v| {
            let x = v as f64 * s;
            assert_eq!(x, x.round(), "lattice value {v} not exact at scale {s}");
            x as u8
        })
        .collect()
}

#[test]
fn criterion_04_illumination_invariance() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let base = synth_trajectory(&SynthSpec::straight(20, 20.0, 4)).unwrap();
    let params = LdbParams::default();
    let mut worst_pixel = 0f32;
    let mut worst_flip = 0f64;
    for i in 0..20 {
        let rgb = lattice_image(&mut rng, 320, 240);
        let frame = FrameRecord {
            rgb: ImagePlane::rgb8(320, 240, rgb.clone()).unwrap(),
            ..base.frames[i].clone()
        };
        let reference = illumination_invariant(&frame.rgb, params.alpha).unwrap();
        let ref_bits = ldb_compound(&frame, Modalities::RgbIrD, &params).unwrap().bits;
        for s in [0.5, 0.75, 1.5, 2.0] {
            let scaled = FrameRecord {
                rgb: ImagePlane::rgb8(320, 240, scale_exact(&rgb, s)).unwrap(),
                ..frame.clone()
            };
            let inv = illumination_invariant(&scaled.rgb, params.alpha).unwrap();
            let d = reference.samples().iter().zip(inv.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max);
            worst_pixel = worst_pixel.max(d);
            let bits = ldb_compound(&scaled, Modalities::RgbIrD, &params).unwrap().bits;
            let flips = oracle_hamming(&ref_bits, 0, &bits, 0, bits.len()) as f64 / bits.len() as f64;
            worst_flip = worst_flip.max(flips);
        }
    }
    let pass = worst_pixel <= 2.0 / 255.0 && worst_flip <= 0.01;
    report(
        4,
        "illumination invariance",
        pass,
        &format!("max pixel diff={worst_pixel:.3e} (limit {:.3e}) max LDB flip fraction={worst_flip:.4}", 2.0 / 255.0),
    );
    assert!(pass);
}

#[test]
fn criterion_05_metric_formulas() {
    let _g = serial();
    let pr = precision_recall(&ConfusionCounts {
        true_positives: 8,
        false_positives: 2,
        false_negatives: 4,
        true_negatives: 0,
    });
    let main = (pr.precision - 0.8).abs() < 1e-9 && (pr.recall - 2.0 / 3.0).abs() < 1e-9 && !pr.is_degenerate();
    let no_pred = precision_recall(&ConfusionCounts {
        true_positives: 0,
        false_positives: 0,
        false_negatives: 3,
        true_negatives: 5,
    });
    let no_truth = precision_recall(&ConfusionCounts {
        true_positives: 0,
        false_positives: 4,
        false_negatives: 0,
        true_negatives: 1,
    });
    let degenerate = no_pred.precision == 0.0
        && no_pred.precision_degenerate
        && !no_pred.recall_degenerate
        && no_truth.recall == 0.0
        && no_truth.recall_degenerate
        && !no_truth.precision_degenerate;
    let pass = main && degenerate;
    report(
        5,
        "metric formulas",
        pass,
        &format!("P={} R={} degenerate_flags_ok={degenerate}", pr.precision, pr.recall),
    );
    assert!(pass);
}

#[test]
fn criterion_06_descriptor_contracts() {
    let _g = serial();
    let s = main_set();
    let frame = &s.traj.frames[5];
    let bank = GaborBank::from_params(&GistParams::default()).unwrap();
    let gist_len = s.db.gist_vectors()[5].len();
    let zero = gist_descriptor(&GrayImage::filled(128, 128, 0.42), &bank, 4).unwrap();
    let zero_ok = zero.len() == 320 && zero.iter().all(|&v| v == 0.0);
    let ldb_rgb = ldb_compound(frame, Modalities::Rgb, &LdbParams::default()).unwrap().bits.len();
    let ldb_all = s.db.ldb_vectors()[5].len();
    let (_, descs): (_, Vec<OrbDescriptor>) = extract_orb(&to_grayscale(&frame.rgb).unwrap(), &s.db.config().fast);
    let orb_ok = OrbDescriptor::BITS == 256 && std::mem::size_of::<OrbDescriptor>() * 8 == 256 && !descs.is_empty();
    let self_scores: Vec<f64> = s
        .db
        .bow_vectors()
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| bow_score(v, v).unwrap())
        .collect();
    let bow_ok = !self_scores.is_empty() && self_scores.iter().all(|&x| x == 1.0);
    let pass = gist_len == 320 && zero_ok && ldb_rgb == 1386 && ldb_all == 3 * 1386 && orb_ok && bow_ok;
    report(
        6,
        "descriptor contracts",
        pass,
        &format!(
            "gist_len={gist_len} constant_gist_zero={zero_ok} ldb_bits={ldb_rgb} (rgb-ir-d {ldb_all}) orb_bits={} orb_count={} bow_self_score_all_one={bow_ok} ({} vectors)",
            OrbDescriptor::BITS,
            descs.len(),
            self_scores.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_latency() {
    let _g = serial();
    let s = build(&SynthSpec::with_default_keys(300, 7));
    let queries = perturb_trajectory(
        &s.traj,
        &Perturbation {
            noise_sigma: 2.0 / 255.0,
            gain: 1.0,
            seed: 7,
        },
    );
    let params = permissive(5);
    // Warm-up query, not timed.
    localize(&s.db, &queries.frames[0], &params).unwrap();
    let mut times: Vec<Duration> = (0..queries.len())
        .step_by(3)
        .map(|i| {
            let t = Instant::now();
            localize(&s.db, &queries.frames[i], &params).unwrap();
            t.elapsed()
        })
        .collect();
    times.sort();
    let median = times[times.len() / 2];
    let max = *times.last().unwrap();
    let pass = median <= Duration::from_millis(100) && max <= Duration::from_millis(250);
    report(
        7,
        "latency",
        pass,
        &format!(
            "queries={} median={:.1}ms max={:.1}ms database={} frames",
            times.len(),
            median.as_secs_f64() * 1e3,
            max.as_secs_f64() * 1e3,
            s.db.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_perturbation_robustness() {
    let _g = serial();
    let s = main_set();
    let queries = perturb_trajectory(
        &s.traj,
        &Perturbation {
            noise_sigma: 5.0 / 255.0,
            gain: 1.3,
            seed: 8,
        },
    );
    let params = QueryParams {
        radius: SearchRadius::LegacyDegrees(0.02),
        ..permissive(1)
    };
    let records = evaluate_run(&s.db, &queries, &params, GroundTruth::Aligned).unwrap();
    let pr = precision_recall(&confusion_from_run(&records));
    let err = full_trajectory_error(&records).unwrap();
    let pass = pr.recall >= 0.9 && err <= 2.0;
    report(
        8,
        "perturbation robustness",
        pass,
        &format!(
            "recall={:.4} precision={:.4} error={err:.4} sensitivity={}",
            pr.recall,
            pr.precision,
            sensitivity(&records).unwrap()
        ),
    );
    assert!(pass);
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_09_determinism_and_persistence() {
    let _g = serial();
    let s = main_set();
    let config = DescriptorConfig::default();

    let vocab_again = train_on_frames(&s.traj.frames, &config.fast, DEFAULT_BRANCHING, DEFAULT_DEPTH, VOCAB_SEED).unwrap();
    let vocab_same = vocab_again.to_bytes() == s.db.vocabulary().to_bytes();
    let again = build_database(&s.traj, &vocab_again, &config).unwrap();
    let kpdb_same = again.to_bytes() == s.db.to_bytes();

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("main.kpdb");
    save_database(&s.db, &path).unwrap();
    let loaded = load_database(&path).unwrap();
    let reloaded_same = loaded.to_bytes() == s.db.to_bytes();
    let probes = perturb_trajectory(
        &s.traj,
        &Perturbation {
            noise_sigma: 4.0 / 255.0,
            gain: 0.9,
            seed: 9,
        },
    );
    let params = QueryParams {
        radius: SearchRadius::Meters(40.0),
        ..permissive(2)
    };
    let mut identical = 0;
    for i in (0..probes.len()).step_by(3).take(50) {
        let a = localize(&s.db, &probes.frames[i], &params).unwrap();
        let b = localize(&loaded, &probes.frames[i], &params).unwrap();
        if a.prediction == b.prediction && a.matches == b.matches {
            identical += 1;
        }
    }

    let spec = SynthSpec::with_default_keys(150, 1);
    let d1 = tmp.path().join("synth1");
    let d2 = tmp.path().join("synth2");
    keypos_core::io::write_trajectory(&synth_trajectory(&spec).unwrap(), &d1).unwrap();
    keypos_core::io::write_trajectory(&synth_trajectory(&spec).unwrap(), &d2).unwrap();
    let (b1, b2) = (dir_bytes(&d1), dir_bytes(&d2));
    let synth_same = b1 == b2 && b1.len() == 3 * 150 + 1;

    let pass = vocab_same && kpdb_same && reloaded_same && identical == 50 && synth_same;
    report(
        9,
        "determinism and persistence",
        pass,
        &format!(
            "vocabulary_identical={vocab_same} kpdb_identical={kpdb_same} ({} bytes) reload_identical={reloaded_same} probes_identical={identical}/50 synth_dataset_identical={synth_same} ({} files)",
            s.db.to_bytes().len(),
            b1.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_grid_search() {
    let _g = serial();
    let s = main_set();
    let queries = perturb_trajectory(
        &s.traj,
        &Perturbation {
            noise_sigma: 5.0 / 255.0,
            gain: 1.3,
            seed: 10,
        },
    );
    let grid = Grid {
        k_gist: vec![3, 5],
        k_ldb: vec![3, 5],
        k_bow: vec![3, 5],
        radius: vec![SearchRadius::Meters(10.0), SearchRadius::Meters(30.0)],
        vote_threshold: vec![2, 4],
        modalities: Modalities::RgbIrD,
    };
    let result = grid_search(&s.db, &queries, &grid, GroundTruth::Aligned).unwrap();
    let best = result.best_row();
    let rerun = evaluate_cell(&s.db, &queries, &best.params, GroundTruth::Aligned).unwrap();
    let bitwise = rerun.precision.to_bits() == best.precision.to_bits() && rerun.recall.to_bits() == best.recall.to_bits();
    let best_is_max = result.rows.iter().all(|r| r.f1 <= best.f1);
    let pass = result.rows.len() == 32 && grid.cell_count() == 32 && bitwise && best_is_max;
    report(
        10,
        "grid search",
        pass,
        &format!(
            "rows={} best=(k_gist={}, k_ldb={}, k_bow={}, r={}, n={}) P={:.4} R={:.4} F1={:.4} rerun_bitwise_equal={bitwise}",
            result.rows.len(),
            best.params.k_gist,
            best.params.k_ldb,
            best.params.k_bow,
            best.params.radius.value(),
            best.params.vote_threshold,
            best.precision,
            best.recall,
            best.f1
        ),
    );
    assert!(pass);
}
