//! Domain types shared by every descriptor channel: frames, trajectories and
//! query parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of every dataset frame, in pixels.
pub const FRAME_WIDTH: u32 = 320;
/// Height of every dataset frame, in pixels.
pub const FRAME_HEIGHT: u32 = 240;

/// A WGS-84 latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoordinate {
    pub lat: f64,
    pub lon: f64,
}

impl GeoCoordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let geo = GeoCoordinate { lat, lon };
        if !geo.is_valid() {
            return Err(Error::InvalidInput(format!(
                "coordinate ({lat}, {lon}) out of range"
            )));
        }
        Ok(geo)
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Raw sample storage of an [`ImagePlane`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Samples {
    U8(Vec<u8>),
    U16(Vec<u16>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::U8(v) => v.len(),
            Samples::U16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bits(&self) -> u8 {
        match self {
            Samples::U8(_) => 8,
            Samples::U16(_) => 16,
        }
    }
}

/// A row-major, channel-interleaved image as captured by the camera.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePlane {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub samples: Samples,
}

impl ImagePlane {
    /// An 8-bit, 3-channel RGB plane.
    pub fn rgb8(width: u32, height: u32, samples: Vec<u8>) -> Result<Self> {
        Self::checked(width, height, 3, Samples::U8(samples))
    }

    /// An 8-bit single-channel plane (infrared).
    pub fn gray8(width: u32, height: u32, samples: Vec<u8>) -> Result<Self> {
        Self::checked(width, height, 1, Samples::U8(samples))
    }

    /// A 16-bit single-channel plane (depth in millimeters, 0 = no reading).
    pub fn depth16(width: u32, height: u32, samples: Vec<u16>) -> Result<Self> {
        Self::checked(width, height, 1, Samples::U16(samples))
    }

    fn checked(width: u32, height: u32, channels: u8, samples: Samples) -> Result<Self> {
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{width}x{height}x{channels} plane needs {expected} samples, got {}",
                samples.len()
            )));
        }
        Ok(ImagePlane {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn depth_bits(&self) -> u8 {
        self.samples.bits()
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.samples {
            Samples::U8(v) => Some(v),
            Samples::U16(_) => None,
        }
    }

    pub fn as_u16(&self) -> Option<&[u16]> {
        match &self.samples {
            Samples::U16(v) => Some(v),
            Samples::U8(_) => None,
        }
    }
}

/// One image channel of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Rgb,
    Depth,
    Infrared,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Rgb => "rgb",
            Modality::Depth => "depth",
            Modality::Infrared => "infrared",
        })
    }
}

/// A combination of modalities feeding one descriptor channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Modalities {
    #[serde(rename = "rgb")]
    Rgb,
    #[serde(rename = "rgb-ir")]
    RgbIr,
    #[default]
    #[serde(rename = "rgb-ir-d")]
    RgbIrD,
}

impl Modalities {
    pub fn count(self) -> usize {
        match self {
            Modalities::Rgb => 1,
            Modalities::RgbIr => 2,
            Modalities::RgbIrD => 3,
        }
    }

    pub fn includes(self, modality: Modality) -> bool {
        match modality {
            Modality::Rgb => true,
            Modality::Infrared => self != Modalities::Rgb,
            Modality::Depth => self == Modalities::RgbIrD,
        }
    }

    /// Concatenation order used by GIST: RGB, IR, depth.
    pub fn gist_order(self) -> Vec<Modality> {
        [Modality::Rgb, Modality::Infrared, Modality::Depth]
            .into_iter()
            .filter(|m| self.includes(*m))
            .collect()
    }

    /// Concatenation order used by the compounded LDB: RGB, depth, IR.
    pub fn ldb_order(self) -> Vec<Modality> {
        [Modality::Rgb, Modality::Depth, Modality::Infrared]
            .into_iter()
            .filter(|m| self.includes(*m))
            .collect()
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Modalities::Rgb => 0,
            Modalities::RgbIr => 1,
            Modalities::RgbIrD => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Modalities::Rgb),
            1 => Some(Modalities::RgbIr),
            2 => Some(Modalities::RgbIrD),
            _ => None,
        }
    }
}

impl fmt::Display for Modalities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modalities::Rgb => "rgb",
            Modalities::RgbIr => "rgb-ir",
            Modalities::RgbIrD => "rgb-ir-d",
        })
    }
}

impl std::str::FromStr for Modalities {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgb" => Ok(Modalities::Rgb),
            "rgb-ir" => Ok(Modalities::RgbIr),
            "rgb-ir-d" => Ok(Modalities::RgbIrD),
            other => Err(Error::InvalidParams(format!(
                "unknown modality combination {other:?} (expected rgb, rgb-ir or rgb-ir-d)"
            ))),
        }
    }
}

/// One captured instant of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    /// Ordinal position in the trajectory.
    pub index: usize,
    /// Identifier carried by the frame index file.
    pub id: u64,
    pub timestamp: f64,
    pub rgb: ImagePlane,
    pub depth: Option<ImagePlane>,
    pub infrared: Option<ImagePlane>,
    pub geo: GeoCoordinate,
    pub key_position_id: Option<u32>,
    pub view_tag: Option<u32>,
}

impl FrameRecord {
    pub fn is_key_position(&self) -> bool {
        self.key_position_id.is_some()
    }

    pub fn plane(&self, modality: Modality) -> Option<&ImagePlane> {
        match modality {
            Modality::Rgb => Some(&self.rgb),
            Modality::Depth => self.depth.as_ref(),
            Modality::Infrared => self.infrared.as_ref(),
        }
    }

    /// Fetch a modality or fail with [`Error::MissingModality`].
    pub fn require(&self, modality: Modality) -> Result<&ImagePlane> {
        self.plane(modality).ok_or(Error::MissingModality {
            index: self.index,
            modality,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub name: String,
    pub frames: Vec<FrameRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// A single broken invariant of a frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    Dimensions {
        modality: Modality,
        width: u32,
        height: u32,
    },
    Channels {
        modality: Modality,
        expected: u8,
        found: u8,
    },
    Encoding {
        modality: Modality,
        expected_bits: u8,
        found_bits: u8,
    },
    SampleCount {
        modality: Modality,
        expected: usize,
        found: usize,
    },
    Latitude(f64),
    Longitude(f64),
    Timestamp(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimensions {
                modality,
                width,
                height,
            } => write!(
                f,
                "{modality} plane is {width}x{height}, expected {FRAME_WIDTH}x{FRAME_HEIGHT}"
            ),
            Violation::Channels {
                modality,
                expected,
                found,
            } => write!(f, "{modality} plane has {found} channels, expected {expected}"),
            Violation::Encoding {
                modality,
                expected_bits,
                found_bits,
            } => write!(
                f,
                "{modality} plane has {found_bits}-bit samples, expected {expected_bits}-bit"
            ),
            Violation::SampleCount {
                modality,
                expected,
                found,
            } => write!(f, "{modality} plane has {found} samples, expected {expected}"),
            Violation::Latitude(v) => write!(f, "latitude {v} outside [-90, 90]"),
            Violation::Longitude(v) => write!(f, "longitude {v} outside [-180, 180]"),
            Violation::Timestamp(v) => write!(f, "timestamp {v} is not finite"),
        }
    }
}

/// Check a frame against the dataset contract. An empty report means valid.
pub fn validate_frame(frame: &FrameRecord) -> Vec<Violation> {
    let mut report = Vec::new();
    check_plane(&mut report, Modality::Rgb, &frame.rgb, 3, 8);
    if let Some(depth) = &frame.depth {
        check_plane(&mut report, Modality::Depth, depth, 1, 16);
    }
    if let Some(ir) = &frame.infrared {
        check_plane(&mut report, Modality::Infrared, ir, 1, 8);
    }
    if !(-90.0..=90.0).contains(&frame.geo.lat) {
        report.push(Violation::Latitude(frame.geo.lat));
    }
    if !(-180.0..=180.0).contains(&frame.geo.lon) {
        report.push(Violation::Longitude(frame.geo.lon));
    }
    if !frame.timestamp.is_finite() {
        report.push(Violation::Timestamp(frame.timestamp));
    }
    report
}

fn check_plane(
    report: &mut Vec<Violation>,
    modality: Modality,
    plane: &ImagePlane,
    channels: u8,
    bits: u8,
) {
    if plane.width != FRAME_WIDTH || plane.height != FRAME_HEIGHT {
        report.push(Violation::Dimensions {
            modality,
            width: plane.width,
            height: plane.height,
        });
    }
    if plane.channels != channels {
        report.push(Violation::Channels {
            modality,
            expected: channels,
            found: plane.channels,
        });
    }
    if plane.depth_bits() != bits {
        report.push(Violation::Encoding {
            modality,
            expected_bits: bits,
            found_bits: plane.depth_bits(),
        });
    }
    let expected = plane.width as usize * plane.height as usize * plane.channels as usize;
    if plane.samples.len() != expected {
        report.push(Violation::SampleCount {
            modality,
            expected,
            found: plane.samples.len(),
        });
    }
}

/// Geographic search radius around the query coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "unit", content = "value", rename_all = "snake_case")]
pub enum SearchRadius {
    /// Great-circle distance in meters.
    Meters(f64),
    /// Euclidean distance over raw (lat, lon) degrees.
    LegacyDegrees(f64),
}

impl SearchRadius {
    pub fn value(self) -> f64 {
        match self {
            SearchRadius::Meters(v) | SearchRadius::LegacyDegrees(v) => v,
        }
    }

    pub fn is_legacy(self) -> bool {
        matches!(self, SearchRadius::LegacyDegrees(_))
    }
}

/// Free parameters of a localization query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryParams {
    pub k_gist: usize,
    pub k_ldb: usize,
    pub k_bow: usize,
    pub radius: SearchRadius,
    /// Minimum number of key-labeled matches for a key-position verdict.
    pub vote_threshold: usize,
    /// Modality combination of the compounded LDB channel.
    pub modalities: Modalities,
}

impl Default for QueryParams {
    fn default() -> Self {
        QueryParams {
            k_gist: 5,
            k_ldb: 5,
            k_bow: 5,
            radius: SearchRadius::Meters(30.0),
            vote_threshold: 5,
            modalities: Modalities::RgbIrD,
        }
    }
}

impl QueryParams {
    pub fn k_total(&self) -> usize {
        self.k_gist + self.k_ldb + self.k_bow
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.k_total() == 0 {
            return fail("k_gist, k_ldb and k_bow are all zero".into());
        }
        let r = self.radius.value();
        if !(r.is_finite() && r > 0.0) {
            return fail(format!("radius must be positive, got {r}"));
        }
        if self.vote_threshold == 0 {
            return fail("vote threshold must be at least 1".into());
        }
        if self.vote_threshold > self.k_total() {
            return fail(format!(
                "vote threshold {} exceeds k_gist + k_ldb + k_bow = {}",
                self.vote_threshold,
                self.k_total()
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(width: u32, height: u32) -> FrameRecord {
        let n = (width * height) as usize;
        FrameRecord {
            index: 0,
            id: 0,
            timestamp: 0.0,
            rgb: ImagePlane::rgb8(width, height, vec![0; n * 3]).unwrap(),
            depth: None,
            infrared: None,
            geo: GeoCoordinate { lat: 30.0, lon: 120.0 },
            key_position_id: None,
            view_tag: None,
        }
    }

    #[test]
    fn valid_frame_has_empty_report() {
        assert!(validate_frame(&frame(320, 240)).is_empty());
    }

    #[test]
    fn wrong_resolution_is_reported() {
        let report = validate_frame(&frame(640, 480));
        assert_eq!(
            report,
            vec![Violation::Dimensions {
                modality: Modality::Rgb,
                width: 640,
                height: 480
            }]
        );
    }

    #[test]
    fn eight_bit_depth_is_an_encoding_violation() {
        let mut f = frame(320, 240);
        f.depth = Some(ImagePlane::gray8(320, 240, vec![0; 320 * 240]).unwrap());
        let report = validate_frame(&f);
        assert!(report.contains(&Violation::Encoding {
            modality: Modality::Depth,
            expected_bits: 16,
            found_bits: 8
        }));
    }

    #[test]
    fn out_of_range_geo() {
        let mut f = frame(320, 240);
        f.geo.lat = 91.0;
        f.geo.lon = -181.0;
        let report = validate_frame(&f);
        assert_eq!(report, vec![Violation::Latitude(91.0), Violation::Longitude(-181.0)]);
    }

    #[test]
    fn params_invariants() {
        assert!(QueryParams::default().validate().is_ok());
        let mut p = QueryParams {
            vote_threshold: 16,
            ..QueryParams::default()
        };
        assert!(p.validate().is_err());
        p.vote_threshold = 0;
        assert!(p.validate().is_err());
        let p = QueryParams {
            k_gist: 0,
            k_ldb: 0,
            k_bow: 0,
            vote_threshold: 1,
            ..QueryParams::default()
        };
        assert!(p.validate().is_err());
        let p = QueryParams {
            radius: SearchRadius::Meters(0.0),
            ..QueryParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn modality_orders() {
        use Modality::*;
        assert_eq!(Modalities::RgbIrD.gist_order(), vec![Rgb, Infrared, Depth]);
        assert_eq!(Modalities::RgbIrD.ldb_order(), vec![Rgb, Depth, Infrared]);
        assert_eq!(Modalities::RgbIr.ldb_order(), vec![Rgb, Infrared]);
        assert_eq!("rgb-ir".parse::<Modalities>().unwrap(), Modalities::RgbIr);
        assert!("ir".parse::<Modalities>().is_err());
    }
}
