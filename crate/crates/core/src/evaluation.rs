//! Trajectory error, sensitivity, precision/recall, key-position error and
//! parameter grid search.
//!
//! ```
//! use keypos_core::evaluation::{precision_recall, ConfusionCounts};
//!
//! let pr = precision_recall(&ConfusionCounts { true_positives: 8, false_positives: 2, false_negatives: 4, true_negatives: 0 });
//! assert_eq!(pr.precision, 0.8);
//! assert!((pr.recall - 2.0 / 3.0).abs() < 1e-12);
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localization::{localize_descriptor, MatchSet, MultiDescriptor, PredictionResult, TrajectoryDatabase};
use crate::model::{Modalities, QueryParams, SearchRadius, Trajectory};

/// How a query index maps to the database index it should retrieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    /// Query `i` was captured at database frame `i`.
    #[default]
    Aligned,
    /// The query walk is the database walk backwards: query `i` is frame `N - 1 - i`.
    Reversed,
}

impl GroundTruth {
    pub fn index(self, query: usize, db_len: usize) -> usize {
        match self {
            GroundTruth::Aligned => query,
            GroundTruth::Reversed => db_len.saturating_sub(1).saturating_sub(query),
        }
    }
}

impl std::str::FromStr for GroundTruth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aligned" => Ok(GroundTruth::Aligned),
            "reversed" => Ok(GroundTruth::Reversed),
            other => Err(Error::InvalidParams(format!(
                "unknown ground truth {other:?} (expected aligned or reversed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub query_index: usize,
    pub matched: bool,
    /// Present exactly when `matched`.
    pub min_index_diff: Option<usize>,
    pub prediction: PredictionResult,
    pub ground_truth_key: bool,
    pub ground_truth_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    /// Set when `TP + FP = 0`; `precision` is then 0.
    pub precision_degenerate: bool,
    /// Set when `TP + FN = 0`; `recall` is then 0.
    pub recall_degenerate: bool,
}

impl PrecisionRecall {
    pub fn is_degenerate(&self) -> bool {
        self.precision_degenerate || self.recall_degenerate
    }

    /// Harmonic mean of precision and recall, 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let s = self.precision + self.recall;
        if s > 0.0 {
            2.0 * self.precision * self.recall / s
        } else {
            0.0
        }
    }
}

/// Smallest `|frame - truth|` over the matched frames.
pub fn index_error(ms: &MatchSet, ground_truth_index: usize) -> Result<usize> {
    ms.distinct_frames
        .iter()
        .map(|&f| f.abs_diff(ground_truth_index))
        .min()
        .ok_or(Error::Empty("index error of an empty match set"))
}

/// Mean minimal index difference over matched queries.
pub fn full_trajectory_error(records: &[EvalRecord]) -> Result<f64> {
    let diffs: Vec<usize> = records.iter().filter_map(|r| r.min_index_diff).collect();
    if diffs.is_empty() {
        return Err(Error::Empty("no matched queries"));
    }
    Ok(diffs.iter().sum::<usize>() as f64 / diffs.len() as f64)
}

/// Fraction of queries that matched at least one frame.
pub fn sensitivity(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("no query records"));
    }
    Ok(records.iter().filter(|r| r.matched).count() as f64 / records.len() as f64)
}

pub fn precision_recall(cc: &ConfusionCounts) -> PrecisionRecall {
    let ratio = |num: usize, den: usize| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
    let (precision, precision_degenerate) = ratio(cc.true_positives, cc.true_positives + cc.false_positives);
    let (recall, recall_degenerate) = ratio(cc.true_positives, cc.true_positives + cc.false_negatives);
    PrecisionRecall {
        precision,
        recall,
        precision_degenerate,
        recall_degenerate,
    }
}

pub fn confusion_from_run(records: &[EvalRecord]) -> ConfusionCounts {
    let mut cc = ConfusionCounts::default();
    for r in records {
        match (r.prediction.is_key_position, r.ground_truth_key) {
            (true, true) => cc.true_positives += 1,
            (true, false) => cc.false_positives += 1,
            (false, true) => cc.false_negatives += 1,
            (false, false) => cc.true_negatives += 1,
        }
    }
    cc
}

/// Mean minimal index difference over true-positive records.
pub fn key_position_error(records: &[EvalRecord]) -> Result<f64> {
    let diffs: Vec<usize> = records
        .iter()
        .filter(|r| r.prediction.is_key_position && r.ground_truth_key)
        .filter_map(|r| r.min_index_diff)
        .collect();
    if diffs.is_empty() {
        return Err(Error::Empty("no true-positive key positions"));
    }
    Ok(diffs.iter().sum::<usize>() as f64 / diffs.len() as f64)
}

fn record(
    db: &TrajectoryDatabase,
    queries: &Trajectory,
    i: usize,
    desc: &MultiDescriptor,
    params: &QueryParams,
    truth: GroundTruth,
) -> Result<EvalRecord> {
    let frame = &queries.frames[i];
    let (prediction, ms) = localize_descriptor(db, desc, frame.geo, params)?;
    let ground_truth_index = truth.index(i, db.len());
    Ok(EvalRecord {
        query_index: i,
        matched: prediction.matched,
        min_index_diff: index_error(&ms, ground_truth_index).ok(),
        prediction,
        ground_truth_key: frame.is_key_position(),
        ground_truth_index,
    })
}

/// Describe every query frame once, with the LDB over `modalities`.
pub fn describe_queries(db: &TrajectoryDatabase, queries: &Trajectory, modalities: Modalities) -> Result<Vec<MultiDescriptor>> {
    queries.frames.par_iter().map(|f| db.describe(f, modalities)).collect()
}

fn run_described(
    db: &TrajectoryDatabase,
    queries: &Trajectory,
    described: &[MultiDescriptor],
    params: &QueryParams,
    truth: GroundTruth,
) -> Result<Vec<EvalRecord>> {
    (0..described.len())
        .map(|i| record(db, queries, i, &described[i], params, truth))
        .collect()
}

/// Localize every query frame and score it against the ground truth.
pub fn evaluate_run(db: &TrajectoryDatabase, queries: &Trajectory, params: &QueryParams, truth: GroundTruth) -> Result<Vec<EvalRecord>> {
    params.validate()?;
    if queries.frames.is_empty() {
        return Err(Error::Empty("query trajectory has no frames"));
    }
    let described = describe_queries(db, queries, params.modalities)?;
    run_described(db, queries, &described, params, truth)
}

/// Headline metrics of one run. Errors are `None` when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub queries: usize,
    pub full_trajectory_error: Option<f64>,
    pub sensitivity: f64,
    pub confusion: ConfusionCounts,
    pub precision_recall: PrecisionRecall,
    pub key_position_error: Option<f64>,
}

pub fn summarize(records: &[EvalRecord]) -> Result<RunSummary> {
    let confusion = confusion_from_run(records);
    Ok(RunSummary {
        queries: records.len(),
        full_trajectory_error: full_trajectory_error(records).ok(),
        sensitivity: sensitivity(records)?,
        confusion,
        precision_recall: precision_recall(&confusion),
        key_position_error: key_position_error(records).ok(),
    })
}

/// Value lists of the grid-search axes. `modalities` is held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub k_gist: Vec<usize>,
    pub k_ldb: Vec<usize>,
    pub k_bow: Vec<usize>,
    pub radius: Vec<SearchRadius>,
    pub vote_threshold: Vec<usize>,
    pub modalities: Modalities,
}

impl Grid {
    pub fn cell_count(&self) -> usize {
        self.k_gist.len() * self.k_ldb.len() * self.k_bow.len() * self.radius.len() * self.vote_threshold.len()
    }

    /// Every cell in axis order (k_gist slowest, threshold fastest).
    pub fn cells(&self) -> Vec<QueryParams> {
        let mut out = Vec::with_capacity(self.cell_count());
        for &k_gist in &self.k_gist {
            for &k_ldb in &self.k_ldb {
                for &k_bow in &self.k_bow {
                    for &radius in &self.radius {
                        for &vote_threshold in &self.vote_threshold {
                            out.push(QueryParams {
                                k_gist,
                                k_ldb,
                                k_bow,
                                radius,
                                vote_threshold,
                                modalities: self.modalities,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: QueryParams,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    /// Position of the best row in `rows`.
    pub best: usize,
}

impl GridResult {
    pub fn best_row(&self) -> &GridRow {
        &self.rows[self.best]
    }
}

fn tie_key(p: &QueryParams) -> (usize, f64, usize, usize, usize) {
    (p.vote_threshold, p.radius.value(), p.k_gist, p.k_ldb, p.k_bow)
}

/// Index of the row with the highest F1; ties go to the smaller
/// `(n, radius, k_gist, k_ldb, k_bow)`.
pub fn best_by_f1(rows: &[GridRow]) -> Option<usize> {
    (0..rows.len()).min_by(|&a, &b| {
        let (ra, rb) = (&rows[a], &rows[b]);
        rb.f1
            .total_cmp(&ra.f1)
            .then_with(|| {
                let (ka, kb) = (tie_key(&ra.params), tie_key(&rb.params));
                ka.0.cmp(&kb.0)
                    .then(ka.1.total_cmp(&kb.1))
                    .then((ka.2, ka.3, ka.4).cmp(&(kb.2, kb.3, kb.4)))
            })
            .then(a.cmp(&b))
    })
}

fn grid_row(params: QueryParams, records: &[EvalRecord]) -> GridRow {
    let pr = precision_recall(&confusion_from_run(records));
    GridRow {
        params,
        precision: pr.precision,
        recall: pr.recall,
        f1: pr.f1(),
        degenerate: pr.is_degenerate(),
    }
}

/// Run every grid cell over the whole query trajectory.
pub fn grid_search(db: &TrajectoryDatabase, queries: &Trajectory, grid: &Grid, truth: GroundTruth) -> Result<GridResult> {
    let axes = [
        ("k_gist", grid.k_gist.len()),
        ("k_ldb", grid.k_ldb.len()),
        ("k_bow", grid.k_bow.len()),
        ("radius", grid.radius.len()),
        ("n", grid.vote_threshold.len()),
    ];
    if let Some((name, _)) = axes.iter().find(|a| a.1 == 0) {
        return Err(Error::InvalidParams(format!("grid axis {name} is empty")));
    }
    if queries.frames.is_empty() {
        return Err(Error::Empty("query trajectory has no frames"));
    }
    let cells = grid.cells();
    for c in &cells {
        c.validate()?;
    }
    let described = describe_queries(db, queries, grid.modalities)?;
    let rows = cells
        .par_iter()
        .map(|p| Ok(grid_row(*p, &run_described(db, queries, &described, p, truth)?)))
        .collect::<Result<Vec<_>>>()?;
    let best = best_by_f1(&rows).expect("grid has at least one cell");
    Ok(GridResult { rows, best })
}

/// Evaluate one parameter cell from scratch (query extraction included).
pub fn evaluate_cell(db: &TrajectoryDatabase, queries: &Trajectory, params: &QueryParams, truth: GroundTruth) -> Result<GridRow> {
    Ok(grid_row(*params, &evaluate_run(db, queries, params, truth)?))
}

pub const CSV_HEADER: &str = "k_gist,k_ldb,k_bow,radius,n,precision,recall,f1";

pub fn results_csv(rows: &[GridRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let p = &r.params;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.k_gist,
            p.k_ldb,
            p.k_bow,
            p.radius.value(),
            p.vote_threshold,
            r.precision,
            r.recall,
            r.f1
        )
        .unwrap();
    }
    s
}

/// Scatter of (recall, precision) over the unit square.
pub fn results_svg(rows: &[GridRow]) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 50.0;
    let px = |recall: f64| PAD + recall * SIZE;
    let py = |precision: f64| PAD + (1.0 - precision) * SIZE;
    let total = SIZE + 2.0 * PAD;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" viewBox=\"0 0 {total} {total}\">\n"
    );
    writeln!(s, "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>").unwrap();
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{v}</text>", px(v), PAD + SIZE + 18.0).unwrap();
        writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{v}</text>", PAD - 6.0, py(v) + 4.0).unwrap();
    }
    writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">recall</text>", PAD + SIZE / 2.0, total - 8.0).unwrap();
    writeln!(
        s,
        "<text x=\"14\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">precision</text>",
        PAD + SIZE / 2.0,
        PAD + SIZE / 2.0
    )
    .unwrap();
    for r in rows {
        writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>", px(r.recall), py(r.precision)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Write the CSV table and the SVG scatter.
pub fn emit_results(rows: &[GridRow], csv_path: &Path, svg_path: &Path) -> Result<()> {
    std::fs::write(csv_path, results_csv(rows)).map_err(|e| Error::io(csv_path, e))?;
    std::fs::write(svg_path, results_svg(rows)).map_err(|e| Error::io(svg_path, e))
}
