//! Seeded synthetic trajectories for deterministic testing.
//!
//! Non-key frames are windows sliding along one long procedurally painted
//! street panorama, so neighbouring frames overlap heavily. Frames inside a
//! key span look at a separate landmark panorama (one per key id) from
//! successive viewing directions, mimicking a user turning around at a key
//! position. Every frame also receives a little per-frame sensor noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{offset_east, point_along, polyline_length};
use crate::model::{FrameRecord, GeoCoordinate, ImagePlane, Samples, Trajectory, FRAME_HEIGHT, FRAME_WIDTH};

/// Horizontal panorama shift between consecutive street frames, in pixels.
const PATH_SHIFT: usize = 6;
/// Shift between consecutive views of a landmark, in pixels.
const VIEW_SHIFT: usize = 24;

/// Inclusive frame span labeled with a key-position id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySpan {
    pub start: usize,
    pub end: usize,
    pub key_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub name: String,
    pub frame_count: usize,
    pub key_spans: Vec<KeySpan>,
    /// GNSS polyline the frames are spread along, evenly by arc length.
    pub geo_path: Vec<GeoCoordinate>,
    pub seed: u64,
}

impl SynthSpec {
    /// `frame_count` frames along a straight `length_m` route heading east
    /// from a fixed origin, without key spans.
    pub fn straight(frame_count: usize, length_m: f64, seed: u64) -> Self {
        let origin = GeoCoordinate { lat: 30.2650, lon: 120.1200 };
        SynthSpec {
            name: format!("synth-{seed}"),
            frame_count,
            key_spans: Vec::new(),
            geo_path: vec![origin, offset_east(origin, length_m)],
            seed,
        }
    }

    /// 150 m route with three key positions of 15, 17 and 15 views, scaled
    /// to `frame_count` frames.
    pub fn with_default_keys(frame_count: usize, seed: u64) -> Self {
        let mut spec = Self::straight(frame_count, 150.0, seed);
        let at = |frac: f64| (frac * frame_count as f64) as usize;
        let spans = [(0.13, 15, 1), (0.47, 17, 2), (0.77, 15, 3)];
        spec.key_spans = spans
            .iter()
            .filter_map(|&(frac, len, id)| {
                let start = at(frac);
                let len = len.min(frame_count / 10).max(1);
                (start + len <= frame_count).then_some(KeySpan {
                    start,
                    end: start + len - 1,
                    key_id: id,
                })
            })
            .collect();
        spec
    }
}

/// Raster of one panorama: RGB, IR and depth layers.
struct Panorama {
    width: usize,
    rgb: Vec<[u8; 3]>,
    ir: Vec<u8>,
    depth: Vec<u16>,
}

impl Panorama {
    fn paint(width: usize, rng: &mut ChaCha8Rng) -> Self {
        let h = FRAME_HEIGHT as usize;
        let horizon = rng.random_range(70..110usize);
        let sky = [rng.random_range(120..220u8), rng.random_range(140..230u8), rng.random_range(170..250u8)];
        let ground = [rng.random_range(40..120u8), rng.random_range(40..120u8), rng.random_range(30..100u8)];
        let mut p = Panorama {
            width,
            rgb: vec![[0; 3]; width * h],
            ir: vec![0; width * h],
            depth: vec![0; width * h],
        };
        for y in 0..h {
            for x in 0..width {
                let i = y * width + x;
                if y < horizon {
                    let fade = (y as f32 / horizon as f32 * 30.0) as u8;
                    p.rgb[i] = sky.map(|c| c.saturating_sub(fade));
                    p.ir[i] = 200 - fade;
                } else {
                    let t = (y - horizon) as f32 / (h - horizon) as f32;
                    p.rgb[i] = ground.map(|c| (c as f32 * (0.7 + 0.3 * t)) as u8);
                    p.ir[i] = (60.0 + 60.0 * t) as u8;
                    p.depth[i] = (9000.0 - 8000.0 * t) as u16;
                }
            }
        }
        let shapes = width / 9 + 12;
        for _ in 0..shapes {
            p.paint_shape(rng);
        }
        p
    }

    fn paint_shape(&mut self, rng: &mut ChaCha8Rng) {
        let h = FRAME_HEIGHT as i64;
        let w = self.width as i64;
        let sw = rng.random_range(8..70i64);
        let sh = rng.random_range(8..110i64);
        let x0 = rng.random_range(-sw / 2..w);
        let y0 = rng.random_range(10..h - 8);
        let color = [rng.random_range(15..240u8), rng.random_range(15..240u8), rng.random_range(15..240u8)];
        let ir = rng.random_range(20..235u8);
        let depth = rng.random_range(900..9000u16);
        let ellipse = rng.random_bool(0.35);
        // 0: flat, 1: stripes, 2: checker
        let texture = rng.random_range(0..3u8);
        let period = rng.random_range(3..9i64);
        let angle: f32 = rng.random_range(0.0..std::f32::consts::PI);
        let (sa, ca) = angle.sin_cos();
        for y in y0.max(0)..(y0 + sh).min(h) {
            for x in x0.max(0)..(x0 + sw).min(w) {
                if ellipse {
                    let nx = (x - x0) as f32 / sw as f32 * 2.0 - 1.0;
                    let ny = (y - y0) as f32 / sh as f32 * 2.0 - 1.0;
                    if nx * nx + ny * ny > 1.0 {
                        continue;
                    }
                }
                let dark = match texture {
                    1 => ((((x as f32) * ca + (y as f32) * sa) / period as f32).floor() as i64).rem_euclid(2) == 1,
                    2 => ((x - x0) / period + (y - y0) / period) % 2 == 1,
                    _ => false,
                };
                let k = if dark { 0.55 } else { 1.0 };
                let i = (y * w + x) as usize;
                self.rgb[i] = color.map(|c| (c as f32 * k) as u8);
                self.ir[i] = (ir as f32 * k) as u8;
                self.depth[i] = depth;
            }
        }
    }

    /// Copy the 320x240 window starting at column `offset`, adding sensor noise.
    fn window(&self, offset: usize, rng: &mut ChaCha8Rng) -> (ImagePlane, ImagePlane, ImagePlane) {
        let (fw, fh) = (FRAME_WIDTH as usize, FRAME_HEIGHT as usize);
        let mut rgb = Vec::with_capacity(fw * fh * 3);
        let mut ir = Vec::with_capacity(fw * fh);
        let mut depth = Vec::with_capacity(fw * fh);
        let jitter = |v: u8, n: i32| (v as i32 + n).clamp(0, 255) as u8;
        for y in 0..fh {
            for x in 0..fw {
                let i = y * self.width + offset + x;
                let n: i32 = rng.random_range(-2..=2);
                rgb.extend(self.rgb[i].map(|c| jitter(c, n)));
                ir.push(jitter(self.ir[i], rng.random_range(-2..=2)));
                let d = self.depth[i];
                depth.push(if d == 0 { 0 } else { (d as i32 + rng.random_range(-10..=10)) as u16 });
            }
        }
        (
            ImagePlane::rgb8(FRAME_WIDTH, FRAME_HEIGHT, rgb).unwrap(),
            ImagePlane::gray8(FRAME_WIDTH, FRAME_HEIGHT, ir).unwrap(),
            ImagePlane::depth16(FRAME_WIDTH, FRAME_HEIGHT, depth).unwrap(),
        )
    }
}

fn mix(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Generate the trajectory described by `spec`. Pure: identical specs give
/// identical trajectories.
pub fn synth_trajectory(spec: &SynthSpec) -> Result<Trajectory> {
    if spec.frame_count == 0 {
        return Err(Error::InvalidParams("frame count must be at least 1".into()));
    }
    if spec.geo_path.is_empty() {
        return Err(Error::InvalidParams("geo path needs at least one point".into()));
    }
    if let Some(p) = spec.geo_path.iter().find(|p| !p.is_valid()) {
        return Err(Error::InvalidParams(format!("geo path point ({}, {}) out of range", p.lat, p.lon)));
    }
    let mut label: Vec<Option<(u32, usize)>> = vec![None; spec.frame_count];
    for span in &spec.key_spans {
        if span.start > span.end || span.end >= spec.frame_count {
            return Err(Error::InvalidParams(format!(
                "key span {}..={} outside 0..{}",
                span.start, span.end, spec.frame_count
            )));
        }
        for (view, slot) in label[span.start..=span.end].iter_mut().enumerate() {
            if slot.is_some() {
                return Err(Error::InvalidParams(format!(
                    "key span {}..={} (id {}) overlaps another span",
                    span.start, span.end, span.key_id
                )));
            }
            *slot = Some((span.key_id, view));
        }
    }

    let street_frames = label.iter().filter(|l| l.is_none()).count();
    let street = Panorama::paint(
        FRAME_WIDTH as usize + PATH_SHIFT * street_frames.max(1),
        &mut ChaCha8Rng::seed_from_u64(mix(spec.seed, 0)),
    );
    let mut landmarks = std::collections::BTreeMap::new();
    for span in &spec.key_spans {
        let views = span.end - span.start + 1;
        landmarks.entry(span.key_id).or_insert_with(|| {
            Panorama::paint(
                FRAME_WIDTH as usize + VIEW_SHIFT * views,
                &mut ChaCha8Rng::seed_from_u64(mix(spec.seed, 1_000_000 + span.key_id as u64)),
            )
        });
    }

    let total = polyline_length(&spec.geo_path);
    let mut step = 0;
    let mut frames = Vec::with_capacity(spec.frame_count);
    for (index, lab) in label.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, 10 + index as u64));
        let (rgb, ir, depth) = match lab {
            None => {
                step += 1;
                street.window((step - 1) * PATH_SHIFT, &mut rng)
            }
            Some((key, view)) => {
                let pano = &landmarks[key];
                let offset = (view * VIEW_SHIFT).min(pano.width - FRAME_WIDTH as usize);
                pano.window(offset, &mut rng)
            }
        };
        let s = if spec.frame_count > 1 {
            total * index as f64 / (spec.frame_count - 1) as f64
        } else {
            0.0
        };
        frames.push(FrameRecord {
            index,
            id: index as u64,
            timestamp: index as f64,
            rgb,
            depth: Some(depth),
            infrared: Some(ir),
            geo: point_along(&spec.geo_path, s),
            key_position_id: lab.map(|l| l.0),
            view_tag: lab.map(|l| l.1 as u32),
        });
    }
    Ok(Trajectory {
        name: spec.name.clone(),
        frames,
    })
}

/// Photometric disturbance applied to the 8-bit planes (RGB and IR):
/// `v' = clamp(round(gain * v + N(0, noise_sigma * 255)))`. Depth is kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Standard deviation on the [0, 1] intensity scale.
    pub noise_sigma: f64,
    pub gain: f64,
    pub seed: u64,
}

fn perturb_u8(samples: &[u8], p: &Perturbation, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let normal = Normal::new(0.0, (p.noise_sigma * 255.0).max(0.0)).expect("finite sigma");
    samples
        .iter()
        .map(|&v| (v as f64 * p.gain + normal.sample(rng)).round().clamp(0.0, 255.0) as u8)
        .collect()
}

pub fn perturb_frame(frame: &FrameRecord, p: &Perturbation) -> FrameRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(p.seed, frame.index as u64));
    let mut out = frame.clone();
    for plane in [Some(&mut out.rgb), out.infrared.as_mut()].into_iter().flatten() {
        if let Samples::U8(v) = &plane.samples {
            plane.samples = Samples::U8(perturb_u8(v, p, &mut rng));
        }
    }
    out
}

pub fn perturb_trajectory(traj: &Trajectory, p: &Perturbation) -> Trajectory {
    Trajectory {
        name: format!("{}-perturbed", traj.name),
        frames: traj.frames.iter().map(|f| perturb_frame(f, p)).collect(),
    }
}

/// The same frames in reverse walking order, re-indexed from 0.
pub fn reversed(traj: &Trajectory) -> Trajectory {
    let n = traj.frames.len();
    Trajectory {
        name: format!("{}-reversed", traj.name),
        frames: traj
            .frames
            .iter()
            .rev()
            .enumerate()
            .map(|(i, f)| FrameRecord {
                index: i,
                timestamp: (n - 1 - f.index) as f64,
                ..f.clone()
            })
            .collect(),
    }
}
