use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use keypos_core::bow::{train_on_frames, Vocabulary};
use keypos_core::evaluation::{emit_results, evaluate_run, grid_search as run_grid, summarize, Grid};
use keypos_core::io::{load_trajectory, write_trajectory};
use keypos_core::localization::{build_database, export_json, load_database, localize, save_database, DescriptorConfig};
use keypos_core::model::SearchRadius;
use keypos_core::synth::{perturb_trajectory, reversed, synth_trajectory, Perturbation, SynthSpec};
use keypos_core::{Error, Result};

use super::{BuildDbArgs, EvaluateArgs, ExportArgs, GridArgs, QueryArgs, SynthArgs, TrainVocabArgs};

pub struct Context {
    pub quiet: bool,
}

impl Context {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn synth(ctx: &Context, a: &SynthArgs) -> Result<()> {
    let spec = if a.no_keys {
        SynthSpec::straight(a.frames, a.length_m, a.seed)
    } else {
        let mut s = SynthSpec::with_default_keys(a.frames, a.seed);
        s.geo_path = SynthSpec::straight(a.frames, a.length_m, a.seed).geo_path;
        s
    };
    let mut traj = synth_trajectory(&spec)?;
    if a.noise != 0.0 || a.gain != 1.0 {
        if !(a.noise >= 0.0 && a.gain > 0.0) {
            return Err(Error::InvalidParams(format!("noise {} and gain {} must be >= 0 and > 0", a.noise, a.gain)));
        }
        traj = perturb_trajectory(
            &traj,
            &Perturbation {
                noise_sigma: a.noise / 255.0,
                gain: a.gain,
                seed: a.seed,
            },
        );
    }
    if a.reverse {
        traj = reversed(&traj);
    }
    let index = write_trajectory(&traj, &a.out)?;
    let keys = traj.frames.iter().filter(|f| f.is_key_position()).count();
    ctx.note(format!("wrote {} frames ({keys} key-labeled) to {}", traj.len(), index.display()));
    Ok(())
}

pub fn train_vocab(ctx: &Context, a: &TrainVocabArgs) -> Result<()> {
    let t = Instant::now();
    let traj = load_trajectory(&a.index)?;
    let vocab = train_on_frames(&traj.frames, &DescriptorConfig::default().fast, a.branching, a.depth, a.seed)?;
    vocab.save(&a.out)?;
    ctx.note(format!(
        "vocabulary: {} words from {} images, sha256 {} ({:.0} ms)",
        vocab.word_count(),
        traj.len(),
        vocab.sha256_hex(),
        ms(t)
    ));
    Ok(())
}

pub fn build_db(ctx: &Context, a: &BuildDbArgs) -> Result<()> {
    let config = DescriptorConfig {
        gist_modalities: a.gist_modalities,
        ldb_modalities: a.modalities,
        ..DescriptorConfig::default()
    };
    let t = Instant::now();
    let traj = load_trajectory(&a.index)?;
    let load_ms = ms(t);

    let t = Instant::now();
    let vocab = match &a.vocab {
        Some(path) => Vocabulary::load(path)?,
        None => train_on_frames(
            &traj.frames,
            &config.fast,
            keypos_core::bow::DEFAULT_BRANCHING,
            keypos_core::bow::DEFAULT_DEPTH,
            a.seed,
        )?,
    };
    let vocab_ms = ms(t);

    let t = Instant::now();
    let db = build_database(&traj, &vocab, &config)?;
    let build_ms = ms(t);

    let t = Instant::now();
    save_database(&db, &a.out)?;
    let save_ms = ms(t);

    println!("frames: {}", db.len());
    println!(
        "timing_ms: load={load_ms:.1} vocabulary={vocab_ms:.1} descriptors={build_ms:.1} write={save_ms:.1}"
    );
    ctx.note(format!("wrote {}", a.out.display()));
    Ok(())
}

pub fn query(ctx: &Context, a: &QueryArgs) -> Result<()> {
    let params = a.params.params()?;
    let db = load_database(&a.db)?;
    let traj = load_trajectory(&a.index)?;
    let selected: Vec<_> = traj
        .frames
        .iter()
        .filter(|f| a.frames.is_empty() || a.frames.contains(&f.id))
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidParams("no query frame matches the requested ids".into()));
    }
    let count = selected.len();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for f in selected {
        let t = Instant::now();
        let loc = localize(&db, f, &params)?;
        let elapsed = ms(t);
        let p = &loc.prediction;
        let line = if a.json {
            serde_json::json!({
                "query_id": f.id,
                "matched": p.matched,
                "is_key": p.is_key_position,
                "votes": p.votes,
                "nearest_index": p.nearest_index,
                "majority_key_id": p.majority_key_id,
                "elapsed_ms": elapsed,
            })
            .to_string()
        } else {
            let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
            format!(
                "query={} matched={} key={} votes={} nearest={} elapsed_ms={elapsed:.1}",
                f.id,
                p.matched,
                p.is_key_position,
                p.votes,
                opt(p.nearest_index.map(|i| i.to_string()))
            )
        };
        writeln!(out, "{line}").map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        })?;
    }
    ctx.note(format!("{count} frames queried against {} database frames", db.len()));
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn evaluate(ctx: &Context, a: &EvaluateArgs) -> Result<()> {
    let params = a.params.params()?;
    let db = load_database(&a.db)?;
    let traj = load_trajectory(&a.index)?;
    let t = Instant::now();
    let records = evaluate_run(&db, &traj, &params, a.ground_truth)?;
    let s = summarize(&records)?;
    let csv = format!(
        "queries,full_trajectory_error,sensitivity,precision,recall,key_position_error,tp,fp,fn,tn\n{},{},{},{},{},{},{},{},{},{}\n",
        s.queries,
        fmt_opt(s.full_trajectory_error),
        s.sensitivity,
        s.precision_recall.precision,
        s.precision_recall.recall,
        fmt_opt(s.key_position_error),
        s.confusion.true_positives,
        s.confusion.false_positives,
        s.confusion.false_negatives,
        s.confusion.true_negatives
    );
    write_file(&a.out, &csv)?;
    print!("{csv}");
    ctx.note(format!("evaluated {} queries in {:.0} ms", s.queries, ms(t)));
    Ok(())
}

pub fn grid_search(ctx: &Context, a: &GridArgs) -> Result<()> {
    let radius = if a.legacy_r_deg.is_empty() {
        a.radius_m.iter().map(|&r| SearchRadius::Meters(r)).collect()
    } else {
        a.legacy_r_deg.iter().map(|&r| SearchRadius::LegacyDegrees(r)).collect()
    };
    let grid = Grid {
        k_gist: a.k_gist.clone(),
        k_ldb: a.k_ldb.clone(),
        k_bow: a.k_bow.clone(),
        radius,
        vote_threshold: a.vote_n.clone(),
        modalities: a.modalities,
    };
    let db = load_database(&a.db)?;
    let traj = load_trajectory(&a.index)?;
    let t = Instant::now();
    let result = run_grid(&db, &traj, &grid, a.ground_truth)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|source| Error::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    emit_results(&result.rows, &a.out_dir.join("results.csv"), &a.out_dir.join("results.svg"))?;
    let best = result.best_row();
    let best_json = serde_json::to_string_pretty(best).expect("grid row serializes");
    write_file(&a.out_dir.join("best.json"), format!("{best_json}\n"))?;
    println!("cells: {}", result.rows.len());
    println!(
        "best: k_gist={} k_ldb={} k_bow={} radius={} n={} precision={} recall={} f1={}",
        best.params.k_gist,
        best.params.k_ldb,
        best.params.k_bow,
        best.params.radius.value(),
        best.params.vote_threshold,
        best.precision,
        best.recall,
        best.f1
    );
    ctx.note(format!("{} cells in {:.0} ms", result.rows.len(), ms(t)));
    Ok(())
}

pub fn export(_ctx: &Context, a: &ExportArgs) -> Result<()> {
    let db = load_database(&a.db)?;
    let text = serde_json::to_string_pretty(&export_json(&db)).expect("JSON export serializes");
    match &a.out {
        Some(path) => write_file(path, format!("{text}\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
