//! `keypos`: build, query and evaluate key-position databases.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 invalid data.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use keypos_core::evaluation::GroundTruth;
use keypos_core::model::{Modalities, QueryParams, SearchRadius};
use keypos_core::Error;

pub const EXIT_ARGS: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_INVALID: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "keypos", version, about = "Visual key-position localization with GIST, LDB and ORB bag-of-words descriptors")]
struct Cli {
    /// Suppress progress and timing output on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic trajectory (PNG frames plus index.jsonl).
    Synth(SynthArgs),
    /// Train an ORB vocabulary tree on a trajectory and write a KPVC file.
    TrainVocab(TrainVocabArgs),
    /// Extract descriptors of a trajectory and write a KPDB database.
    BuildDb(BuildDbArgs),
    /// Localize query frames against a database, one line per frame.
    Query(QueryArgs),
    /// Run a query trajectory and write trajectory error, sensitivity, precision and recall.
    Evaluate(EvaluateArgs),
    /// Evaluate every combination of parameter values.
    GridSearch(GridArgs),
    /// Dump a KPDB database as JSON.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 150)]
    frames: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Route length in meters.
    #[arg(long, default_value_t = 150.0)]
    length_m: f64,
    /// Generate a trajectory without key positions.
    #[arg(long)]
    no_keys: bool,
    /// Gaussian noise added to RGB and IR, in 8-bit levels.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Brightness gain applied to RGB and IR.
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    /// Write the frames in reverse walking order.
    #[arg(long)]
    reverse: bool,
}

#[derive(Args, Debug)]
struct TrainVocabArgs {
    /// Frame index (JSON Lines) of the training trajectory.
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = keypos_core::bow::DEFAULT_BRANCHING)]
    branching: u32,
    #[arg(long, default_value_t = keypos_core::bow::DEFAULT_DEPTH)]
    depth: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BuildDbArgs {
    #[arg(long)]
    index: PathBuf,
    /// Vocabulary file; required unless --train-vocab-inline is given.
    #[arg(long, required_unless_present = "train_vocab_inline")]
    vocab: Option<PathBuf>,
    /// Train the vocabulary on the database trajectory itself.
    #[arg(long, conflicts_with = "vocab")]
    train_vocab_inline: bool,
    /// Seed for inline vocabulary training.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Modalities concatenated into the GIST vector.
    #[arg(long, default_value = "rgb")]
    gist_modalities: Modalities,
    /// Modalities stored in the compounded LDB.
    #[arg(long, default_value = "rgb-ir-d")]
    modalities: Modalities,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    #[arg(long, default_value_t = 5)]
    k_gist: usize,
    #[arg(long, default_value_t = 5)]
    k_ldb: usize,
    #[arg(long, default_value_t = 5)]
    k_bow: usize,
    /// GNSS search radius in meters.
    #[arg(long, default_value_t = 30.0)]
    radius_m: f64,
    /// Radius as Euclidean distance in raw degrees; overrides --radius-m.
    #[arg(long)]
    legacy_r_deg: Option<f64>,
    /// Minimum key-labeled matches for a key-position verdict.
    #[arg(long, default_value_t = 5)]
    vote_n: usize,
    /// Modalities of the LDB channel.
    #[arg(long, default_value = "rgb-ir-d")]
    modalities: Modalities,
}

impl ParamArgs {
    fn params(&self) -> Result<QueryParams, Error> {
        let p = QueryParams {
            k_gist: self.k_gist,
            k_ldb: self.k_ldb,
            k_bow: self.k_bow,
            radius: match self.legacy_r_deg {
                Some(r) => SearchRadius::LegacyDegrees(r),
                None => SearchRadius::Meters(self.radius_m),
            },
            vote_threshold: self.vote_n,
            modalities: self.modalities,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    db: PathBuf,
    /// Frame index of the query frames.
    #[arg(long)]
    index: PathBuf,
    /// Only query frames with these ids.
    #[arg(long = "frame")]
    frames: Vec<u64>,
    /// One JSON object per line instead of text.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Metrics CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "aligned")]
    ground_truth: GroundTruth,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Directory for results.csv, results.svg and best.json.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    k_gist: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    k_ldb: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    k_bow: Vec<usize>,
    /// Radii in meters.
    #[arg(long, value_delimiter = ',', default_value = "30", conflicts_with = "legacy_r_deg")]
    radius_m: Vec<f64>,
    /// Radii in raw degrees; replaces --radius-m.
    #[arg(long, value_delimiter = ',')]
    legacy_r_deg: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    vote_n: Vec<usize>,
    #[arg(long, default_value = "rgb-ir-d")]
    modalities: Modalities,
    #[arg(long, default_value = "aligned")]
    ground_truth: GroundTruth,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    db: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::InvalidParams(_) => EXIT_ARGS,
        _ => EXIT_INVALID,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("KEYPOS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("KEYPOS_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("keypos: {msg}");
        return ExitCode::from(EXIT_ARGS);
    }
    let ctx = commands::Context { quiet: cli.quiet };
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(&ctx, a),
        Command::TrainVocab(a) => commands::train_vocab(&ctx, a),
        Command::BuildDb(a) => commands::build_db(&ctx, a),
        Command::Query(a) => commands::query(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::GridSearch(a) => commands::grid_search(&ctx, a),
        Command::Export(a) => commands::export(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("keypos: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
