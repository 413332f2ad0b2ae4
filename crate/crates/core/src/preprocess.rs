//! Face chips and the landmark / region blocks cut out of them.
//!
//! Coordinates are continuous: pixel `(i, j)` covers `[j, j+1) x [i, i+1)`
//! in `(x, y)`, and landmarks are given in that space. A chip is a square
//! crop around the landmark bounding box, expanded by 30% of the box size on
//! every side, resampled bilinearly to 128x128. No alignment is done.

use ndarray::{s, Array3, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{LandmarkSet, Point, NUM_LANDMARKS};

pub const CHIP_SIZE: usize = 128;
pub const CROP_MARGIN: f64 = 0.3;
pub const CHANNELS: usize = 3;

/// `H x W x 3` image with values in `[0, 1]`.
pub type Image = Array3<f64>;

/// Maps source-image coordinates to chip coordinates: `(p - origin) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChipTransform {
    pub origin: Point,
    pub scale: f64,
}

impl ChipTransform {
    pub fn to_chip(&self, p: Point) -> Point {
        Point::new((p.x - self.origin.x) * self.scale, (p.y - self.origin.y) * self.scale)
    }

    pub fn to_source(&self, p: Point) -> Point {
        Point::new(p.x / self.scale + self.origin.x, p.y / self.scale + self.origin.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceChip {
    pub pixels: Image,
    pub transform: ChipTransform,
}

/// Crops the face described by `landmarks` into a 128x128 chip.
pub fn crop_face(image: &Image, landmarks: &LandmarkSet) -> Result<FaceChip> {
    let (height, width, channels) = image.dim();
    if channels != CHANNELS {
        return Err(Error::Geometry(format!("expected a 3-channel image, got {channels}")));
    }
    let bbox = landmarks.bounding_box();
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(Error::Geometry("landmark bounding box is degenerate".into()));
    }
    if bbox.min_x >= width as f64 || bbox.min_y >= height as f64 {
        return Err(Error::Geometry("landmark bounding box lies outside the image".into()));
    }

    let side = (1.0 + 2.0 * CROP_MARGIN) * bbox.width().max(bbox.height());
    let center = bbox.center();
    let transform = ChipTransform {
        origin: Point::new(center.x - 0.5 * side, center.y - 0.5 * side),
        scale: CHIP_SIZE as f64 / side,
    };

    let mut pixels = Array3::<f64>::zeros((CHIP_SIZE, CHIP_SIZE, CHANNELS));
    for row in 0..CHIP_SIZE {
        for col in 0..CHIP_SIZE {
            let src = transform.to_source(Point::new(col as f64 + 0.5, row as f64 + 0.5));
            if src.x < 0.0 || src.y < 0.0 || src.x >= width as f64 || src.y >= height as f64 {
                continue;
            }
            sample_bilinear(image, src.x - 0.5, src.y - 0.5, |c, v| pixels[[row, col, c]] = v);
        }
    }
    Ok(FaceChip { pixels, transform })
}

/// Bilinear lookup at pixel-index coordinates; neighbours are clamped to the
/// image so samples in the outer half-pixel use the edge value.
fn sample_bilinear(image: &Image, x: f64, y: f64, mut put: impl FnMut(usize, f64)) {
    let (height, width, channels) = image.dim();
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    for c in 0..channels {
        let top = image[[y0, x0, c]] * (1.0 - fx) + image[[y0, x1, c]] * fx;
        let bottom = image[[y1, x0, c]] * (1.0 - fx) + image[[y1, x1, c]] * fx;
        put(c, top * (1.0 - fy) + bottom * fy);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    LeftEye,
    RightEye,
    Mouth,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::LeftEye => "left-eye",
            Region::RightEye => "right-eye",
            Region::Mouth => "mouth",
        }
    }
}

/// Where a block comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockOrigin {
    Landmark(usize),
    Region(Region),
}

impl BlockOrigin {
    pub fn is_landmark(&self) -> bool {
        matches!(self, BlockOrigin::Landmark(_))
    }

    pub fn describe(&self) -> String {
        match self {
            BlockOrigin::Landmark(i) => format!("landmark {i}"),
            BlockOrigin::Region(r) => r.name().to_string(),
        }
    }
}

/// One block position: what it is centred on and how big it is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSlot {
    pub origin: BlockOrigin,
    /// Landmarks whose centroid is the block centre.
    pub anchor: Vec<usize>,
    pub size: usize,
}

impl BlockSlot {
    pub fn landmark(index: usize, size: usize) -> Self {
        BlockSlot {
            origin: BlockOrigin::Landmark(index),
            anchor: vec![index],
            size,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_block_size(self.size)?;
        if self.anchor.is_empty() {
            return Err(Error::Config("block slot has no anchor landmarks".into()));
        }
        if let Some(&bad) = self.anchor.iter().find(|&&i| i >= NUM_LANDMARKS) {
            return Err(Error::Config(format!("landmark index {bad} out of range 0..68")));
        }
        Ok(())
    }
}

fn validate_block_size(size: usize) -> Result<()> {
    if size % 2 == 0 || size < 3 || size > CHIP_SIZE {
        return Err(Error::Config(format!("block size must be odd and within 3..=128, got {size}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDefinition {
    pub region: Region,
    pub landmarks: Vec<usize>,
}

/// The detector's block layout: small blocks on individual landmarks and
/// large blocks on facial regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayoutConfig {
    pub landmark_indices: Vec<usize>,
    pub small_block_size: usize,
    pub regions: Vec<RegionDefinition>,
    pub large_block_size: usize,
}

pub const LANDMARK_BLOCKS: usize = 8;
pub const REGION_BLOCKS: usize = 3;

impl Default for BlockLayoutConfig {
    /// Eye corners and upper-lid points, the nose tip and the inner mouth.
    fn default() -> Self {
        BlockLayoutConfig {
            landmark_indices: vec![36, 38, 39, 42, 44, 45, 30, 62],
            small_block_size: 13,
            regions: vec![
                RegionDefinition {
                    region: Region::LeftEye,
                    landmarks: (36..=41).collect(),
                },
                RegionDefinition {
                    region: Region::RightEye,
                    landmarks: (42..=47).collect(),
                },
                RegionDefinition {
                    region: Region::Mouth,
                    landmarks: (48..=67).collect(),
                },
            ],
            large_block_size: 31,
        }
    }
}

impl BlockLayoutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.landmark_indices.len() != LANDMARK_BLOCKS {
            return Err(Error::Config(format!(
                "expected {LANDMARK_BLOCKS} landmark indices, got {}",
                self.landmark_indices.len()
            )));
        }
        if self.regions.len() != REGION_BLOCKS {
            return Err(Error::Config(format!(
                "expected {REGION_BLOCKS} regions, got {}",
                self.regions.len()
            )));
        }
        self.slots().iter().try_for_each(BlockSlot::validate)
    }

    /// Block slots in extraction order: landmarks first, then regions.
    pub fn slots(&self) -> Vec<BlockSlot> {
        let landmarks = self
            .landmark_indices
            .iter()
            .map(|&i| BlockSlot::landmark(i, self.small_block_size));
        let regions = self.regions.iter().map(|r| BlockSlot {
            origin: BlockOrigin::Region(r.region),
            anchor: r.landmarks.clone(),
            size: self.large_block_size,
        });
        landmarks.chain(regions).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub pixels: Image,
    pub origin: BlockOrigin,
    /// Chip pixel `(row, col)` at the block centre.
    pub center: (usize, usize),
}

impl Block {
    pub fn size(&self) -> usize {
        self.pixels.dim().0
    }
}

/// Integer chip pixel holding `p`, clamped so a block of `size` fits.
pub fn block_center(p: Point, size: usize) -> (usize, usize) {
    let half = (size / 2) as f64;
    let hi = (CHIP_SIZE - 1) as f64 - half;
    let clamp = |v: f64| v.floor().clamp(half, hi) as usize;
    (clamp(p.y), clamp(p.x))
}

pub fn block_view(chip: &Image, center: (usize, usize), size: usize) -> ArrayView3<'_, f64> {
    let half = size / 2;
    let (r, c) = center;
    chip.slice(s![r - half..=r + half, c - half..=c + half, ..])
}

/// Cuts the 8 landmark blocks and 3 region blocks of `config` out of `chip`.
/// `landmarks` are in source-image coordinates.
pub fn extract_blocks(chip: &FaceChip, landmarks: &LandmarkSet, config: &BlockLayoutConfig) -> Result<Vec<Block>> {
    config.validate()?;
    Ok(extract_slots(chip, landmarks, &config.slots()))
}

/// Same as [`extract_blocks`] for an arbitrary slot list.
pub fn extract_slots(chip: &FaceChip, landmarks: &LandmarkSet, slots: &[BlockSlot]) -> Vec<Block> {
    slots
        .iter()
        .map(|slot| {
            let anchor = chip.transform.to_chip(landmarks.centroid(&slot.anchor));
            let center = block_center(anchor, slot.size);
            Block {
                pixels: block_view(&chip.pixels, center, slot.size).to_owned(),
                origin: slot.origin.clone(),
                center,
            }
        })
        .collect()
}
