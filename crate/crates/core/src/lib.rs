//! Visual key-position localization.
//!
//! A recorded walk (RGB, infrared and depth frames tagged with GNSS fixes)
//! becomes a [`localization::TrajectoryDatabase`] of three descriptors per
//! frame: a holistic GIST vector, a compounded LDB bit string and an ORB
//! bag-of-words vector. A query frame is matched against the database
//! frames that lie within a GNSS radius, the nearest neighbours of each
//! descriptor are pooled, and the query is declared a key position when
//! enough of them are labeled as one.
//!
//! ```
//! use keypos_core::bow::train_on_frames;
//! use keypos_core::evaluation::{evaluate_run, summarize, GroundTruth};
//! use keypos_core::localization::{build_database, DescriptorConfig};
//! use keypos_core::model::{QueryParams, SearchRadius};
//! use keypos_core::synth::{synth_trajectory, SynthSpec};
//!
//! let traj = synth_trajectory(&SynthSpec::with_default_keys(40, 1))?;
//! let config = DescriptorConfig::default();
//! let vocab = train_on_frames(&traj.frames, &config.fast, 9, 2, 0)?;
//! let db = build_database(&traj, &vocab, &config)?;
//!
//! let params = QueryParams { radius: SearchRadius::Meters(500.0), vote_threshold: 1, ..QueryParams::default() };
//! let summary = summarize(&evaluate_run(&db, &traj, &params, GroundTruth::Aligned)?)?;
//! assert_eq!(summary.full_trajectory_error, Some(0.0));
//! assert_eq!(summary.sensitivity, 1.0);
//! # Ok::<(), keypos_core::Error>(())
//! ```

mod binio;
pub mod bow;
pub mod error;
pub mod evaluation;
pub mod geo;
pub mod gist;
pub mod io;
pub mod ldb;
pub mod localization;
pub mod model;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
