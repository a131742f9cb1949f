//! Frame index (JSON Lines) reading and writing.
//!
//! One object per line:
//!
//! ```text
//! {"id":0,"t":0.0,"rgb":"f00000_rgb.png","depth":"f00000_depth.png","ir":"f00000_ir.png","lat":30.265,"lon":120.12,"key":1,"view":0}
//! ```
//!
//! Image paths are relative to the index file's directory. `depth`, `ir`,
//! `key` and `view` are optional.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_frame, FrameRecord, GeoCoordinate, ImagePlane, Samples, Trajectory};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexRecord {
    id: u64,
    t: f64,
    rgb: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ir: Option<String>,
    lat: f64,
    lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    view: Option<u32>,
}

fn read_png(path: &Path) -> Result<ImagePlane> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|source| {
        Error::Image {
            path: path.to_path_buf(),
            source,
        }
    })?;
    let (w, h) = (img.width(), img.height());
    match img {
        DynamicImage::ImageLuma8(b) => ImagePlane::gray8(w, h, b.into_raw()),
        DynamicImage::ImageLuma16(b) => ImagePlane::depth16(w, h, b.into_raw()),
        DynamicImage::ImageRgb8(b) => ImagePlane::rgb8(w, h, b.into_raw()),
        other => ImagePlane::rgb8(w, h, other.to_rgb8().into_raw()),
    }
}

/// Load a trajectory from a JSON Lines frame index. Frames get indexes
/// `0..N` in file order; blank lines are ignored.
pub fn load_trajectory(index_path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(index_path).map_err(|e| Error::io(index_path, e))?;
    let base = index_path.parent().unwrap_or(Path::new("."));
    let mut frames = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: IndexRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let load = |rel: &str| read_png(&base.join(rel));
        let frame = FrameRecord {
            index: frames.len(),
            id: rec.id,
            timestamp: rec.t,
            rgb: load(&rec.rgb)?,
            depth: rec.depth.as_deref().map(load).transpose()?,
            infrared: rec.ir.as_deref().map(load).transpose()?,
            geo: GeoCoordinate { lat: rec.lat, lon: rec.lon },
            key_position_id: rec.key,
            view_tag: rec.view,
        };
        let violations = validate_frame(&frame);
        if !violations.is_empty() {
            return Err(Error::InvalidFrame {
                line: line_no,
                id: rec.id,
                violations,
            });
        }
        frames.push(frame);
    }
    let name = index_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Trajectory { name, frames })
}

fn write_png(path: &Path, plane: &ImagePlane) -> Result<()> {
    let (w, h) = (plane.width, plane.height);
    let bad = || Error::InvalidInput(format!("cannot encode {}-channel {}-bit plane", plane.channels, plane.depth_bits()));
    let res = match (&plane.samples, plane.channels) {
        (Samples::U8(v), 3) => ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, v.clone()).ok_or_else(bad)?.save_with_format(path, image::ImageFormat::Png),
        (Samples::U8(v), 1) => ImageBuffer::<Luma<u8>, _>::from_raw(w, h, v.clone()).ok_or_else(bad)?.save_with_format(path, image::ImageFormat::Png),
        (Samples::U16(v), 1) => ImageBuffer::<Luma<u16>, _>::from_raw(w, h, v.clone()).ok_or_else(bad)?.save_with_format(path, image::ImageFormat::Png),
        _ => return Err(bad()),
    };
    res.map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Write every frame as PNG files plus `index.jsonl` into `dir` (created if
/// needed). Returns the index path.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut lines = Vec::with_capacity(traj.frames.len());
    for f in &traj.frames {
        let stem = format!("f{:05}", f.index);
        let rgb = format!("{stem}_rgb.png");
        write_png(&dir.join(&rgb), &f.rgb)?;
        let depth = f
            .depth
            .as_ref()
            .map(|p| {
                let name = format!("{stem}_depth.png");
                write_png(&dir.join(&name), p).map(|_| name)
            })
            .transpose()?;
        let ir = f
            .infrared
            .as_ref()
            .map(|p| {
                let name = format!("{stem}_ir.png");
                write_png(&dir.join(&name), p).map(|_| name)
            })
            .transpose()?;
        let rec = IndexRecord {
            id: f.id,
            t: f.timestamp,
            rgb,
            depth,
            ir,
            lat: f.geo.lat,
            lon: f.geo.lon,
            key: f.key_position_id,
            view: f.view_tag,
        };
        lines.push(serde_json::to_string(&rec).expect("index record serializes"));
    }
    let index = dir.join("index.jsonl");
    let mut file = std::fs::File::create(&index).map_err(|e| Error::io(&index, e))?;
    for l in &lines {
        writeln!(file, "{l}").map_err(|e| Error::io(&index, e))?;
    }
    Ok(index)
}
