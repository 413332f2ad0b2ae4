//! Dataset manifests, landmark sets and frame-sampling policies.
//!
//! A manifest is a line-oriented, tab-separated text file:
//!
//! ```text
//! #defakehop-manifest v1 split=train
//! image_ref	label	video_id	frame_index	landmarks
//! frames/v001_0000.png	0	v001	0	x0,y0,x1,y1,...,x67,y67
//! ```
//!
//! The first line is the format header, the second the column header. Both
//! are required and must match exactly (apart from the `split` value). Blank
//! lines and further lines starting with `#` are ignored. `label` is `0`
//! (real) or `1` (fake); `landmarks` holds 136 comma-separated numbers.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_LANDMARKS: usize = 68;
pub const MANIFEST_MAGIC: &str = "#defakehop-manifest";
pub const MANIFEST_VERSION: &str = "v1";
pub const MANIFEST_COLUMNS: [&str; 5] = ["image_ref", "label", "video_id", "frame_index", "landmarks"];

/// Frames sampled per second from training videos.
pub const TRAIN_FRAMES_PER_SECOND: f64 = 3.0;
/// Frames sampled uniformly from each test video.
pub const TEST_FRAMES_PER_VIDEO: usize = 100;

/// A 2-D point in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }
}

/// The 68 facial landmarks of one face, in the standard 68-point ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() != NUM_LANDMARKS {
            return Err(Error::Validation(format!(
                "expected {NUM_LANDMARKS} landmarks, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Validation(format!("landmark {i} is not finite")));
            }
            if p.x < 0.0 || p.y < 0.0 {
                return Err(Error::Validation(format!("landmark {i} has a negative coordinate")));
            }
        }
        let set = LandmarkSet { points };
        let bbox = set.bounding_box();
        if bbox.width() <= 0.0 || bbox.height() <= 0.0 {
            return Err(Error::Validation("landmark bounding box is degenerate".into()));
        }
        Ok(set)
    }

    /// Builds a set from interleaved `x0, y0, x1, y1, ...` coordinates.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if coords.len() != 2 * NUM_LANDMARKS {
            return Err(Error::Validation(format!(
                "expected {NUM_LANDMARKS} landmarks ({} numbers), got {} numbers",
                2 * NUM_LANDMARKS,
                coords.len()
            )));
        }
        Self::new(coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn get(&self, index: usize) -> Point {
        self.points[index]
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut b = BoundingBox {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in &self.points {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    /// Centroid of a group of landmarks.
    pub fn centroid(&self, indices: &[usize]) -> Point {
        let n = indices.len() as f64;
        let (sx, sy) = indices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &i| (sx + self.points[i].x, sy + self.points[i].y));
        Point::new(sx / n, sy / n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Real = 0,
    Fake = 1,
}

impl Label {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::Real),
            1 => Ok(Label::Fake),
            other => Err(Error::Validation(format!("label must be 0 or 1, got {other}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_fake(self) -> bool {
        self == Label::Fake
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub image_ref: String,
    pub landmarks: LandmarkSet,
    pub label: Label,
    pub video_id: String,
    pub frame_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Argument(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub split: Split,
    records: Vec<FrameRecord>,
}

impl DatasetManifest {
    /// Validates the record list: non-empty, unique frame indices per video,
    /// and both labels present for a training split.
    pub fn new(split: Split, records: Vec<FrameRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("manifest has no records".into()));
        }
        let mut seen = HashSet::new();
        for r in &records {
            if r.image_ref.contains(['\t', '\n']) || r.video_id.contains(['\t', '\n']) {
                return Err(Error::Validation(format!(
                    "record {:?}: fields may not contain tabs or newlines",
                    r.image_ref
                )));
            }
            if !seen.insert((r.video_id.as_str(), r.frame_index)) {
                return Err(Error::Validation(format!(
                    "duplicate frame_index {} in video {:?}",
                    r.frame_index, r.video_id
                )));
            }
        }
        let manifest = DatasetManifest { split, records };
        if split == Split::Train && !manifest.has_both_labels() {
            return Err(Error::Validation("a train manifest must contain both labels".into()));
        }
        Ok(manifest)
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_both_labels(&self) -> bool {
        let fakes = self.records.iter().filter(|r| r.label.is_fake()).count();
        fakes > 0 && fakes < self.records.len()
    }

    /// Distinct video ids in first-appearance order.
    pub fn video_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.video_id.as_str()))
            .map(|r| r.video_id.as_str())
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_manifest(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serialize_manifest(self)).map_err(|e| Error::io(path, e))
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_manifest(bytes: &[u8]) -> Result<DatasetManifest> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_error(1, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (_, header) = lines.next().ok_or_else(|| Error::Validation("manifest is empty".into()))?;
    let split = parse_header(header)?;

    match lines.next() {
        Some((_, cols)) if cols.split('\t').eq(MANIFEST_COLUMNS) => {}
        Some((n, _)) => {
            return Err(parse_error(n, format!("expected column header {:?}", MANIFEST_COLUMNS.join("\t"))))
        }
        None => return Err(Error::Validation("manifest has no records".into())),
    }

    let mut records = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        records.push(parse_record(n, line)?);
    }
    DatasetManifest::new(split, records)
}

fn parse_header(header: &str) -> Result<Split> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MANIFEST_MAGIC) {
        return Err(parse_error(1, format!("missing {MANIFEST_MAGIC} header")));
    }
    match parts.next() {
        Some(MANIFEST_VERSION) => {}
        Some(v) => return Err(parse_error(1, format!("unsupported format version {v:?}"))),
        None => return Err(parse_error(1, "missing format version")),
    }
    let split = parts
        .next()
        .and_then(|kv| kv.strip_prefix("split="))
        .ok_or_else(|| parse_error(1, "missing split=train|test"))?;
    split.parse().map_err(|_| parse_error(1, format!("unknown split {split:?}")))
}

fn parse_record(n: usize, line: &str) -> Result<FrameRecord> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != MANIFEST_COLUMNS.len() {
        return Err(parse_error(
            n,
            format!("expected {} tab-separated fields, got {}", MANIFEST_COLUMNS.len(), fields.len()),
        ));
    }
    let [image_ref, label, video_id, frame_index, landmarks] = fields[..] else {
        unreachable!()
    };
    if image_ref.is_empty() {
        return Err(parse_error(n, "empty image_ref"));
    }
    let label = match label {
        "0" => Label::Real,
        "1" => Label::Fake,
        other => return Err(parse_error(n, format!("label must be 0 or 1, got {other:?}"))),
    };
    let frame_index = frame_index
        .parse::<u64>()
        .map_err(|_| parse_error(n, format!("bad frame_index {frame_index:?}")))?;
    let coords = landmarks
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| parse_error(n, format!("bad landmark coordinate: {e}")))?;
    let landmarks = LandmarkSet::from_flat(&coords).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("line {n}: {msg}")),
        other => other,
    })?;
    Ok(FrameRecord {
        image_ref: image_ref.to_string(),
        landmarks,
        label,
        video_id: video_id.to_string(),
        frame_index,
    })
}

/// Canonical text form. Floats use the shortest representation that parses
/// back to the same value, so `parse(serialize(m)) == m` bit for bit.
pub fn serialize_manifest(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MANIFEST_MAGIC} {MANIFEST_VERSION} split={}", manifest.split.as_str());
    out.push_str(&MANIFEST_COLUMNS.join("\t"));
    out.push('\n');
    for r in &manifest.records {
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t",
            r.image_ref,
            r.label.as_u8(),
            r.video_id,
            r.frame_index
        );
        for (i, p) in r.landmarks.points().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{},{}", p.x, p.y);
        }
        out.push('\n');
    }
    out
}

/// Frame indices to decode from a video.
///
/// Training videos are sampled at three frames per second with an integer
/// stride of `floor(fps / 3)` (at least 1) starting at frame 0. Test videos get
/// 100 indices spread uniformly over `[0, frame_count - 1]`, or every frame
/// when the video is shorter than that.
pub fn sample_frame_indices(frame_count: usize, fps: f64, split: Split) -> Result<Vec<usize>> {
    if frame_count == 0 {
        return Err(Error::Argument("frame_count must be at least 1".into()));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::Argument(format!("fps must be positive, got {fps}")));
    }
    match split {
        Split::Train => {
            let stride = ((fps / TRAIN_FRAMES_PER_SECOND).floor() as usize).max(1);
            Ok((0..frame_count).step_by(stride).collect())
        }
        Split::Test => {
            let wanted = TEST_FRAMES_PER_VIDEO;
            if frame_count <= wanted {
                return Ok((0..frame_count).collect());
            }
            // round(i * (n - 1) / (wanted - 1)), in integer arithmetic
            let span = (frame_count - 1) as u128;
            let denom = (wanted - 1) as u128;
            Ok((0..wanted as u128)
                .map(|i| ((2 * i * span + denom) / (2 * denom)) as usize)
                .collect())
        }
    }
}
