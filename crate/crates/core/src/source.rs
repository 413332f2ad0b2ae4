//! Where frame pixels come from.

use std::path::{Path, PathBuf};

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::preprocess::Image;

/// Resolves a manifest `image_ref` to an RGB image with values in `[0, 1]`.
pub trait FrameSource: Sync {
    fn load(&self, image_ref: &str) -> Result<Image>;
}

/// Image files resolved relative to a root directory, usually the one
/// holding the manifest.
#[derive(Debug, Clone)]
pub struct FsFrameSource {
    root: PathBuf,
}

impl FsFrameSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FsFrameSource { root: root.into() }
    }

    /// Source rooted at the directory containing `manifest`.
    pub fn for_manifest(manifest: &Path) -> Self {
        let root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        FsFrameSource::new(root)
    }

    pub fn resolve(&self, image_ref: &str) -> PathBuf {
        self.root.join(image_ref)
    }
}

impl FrameSource for FsFrameSource {
    fn load(&self, image_ref: &str) -> Result<Image> {
        load_image(&self.resolve(image_ref))
    }
}

pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(Array3::from_shape_fn((h as usize, w as usize, 3), |(y, x, c)| {
        f64::from(rgb.get_pixel(x as u32, y as u32)[c]) / 255.0
    }))
}

/// Writes an image as 8-bit PNG, rounding each channel.
pub fn save_png(image: &Image, path: &Path) -> Result<()> {
    let (h, w, _) = image.dim();
    let buf = image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let px = |c| (image[[y as usize, x as usize, c]].clamp(0.0, 1.0) * 255.0).round() as u8;
        image::Rgb([px(0), px(1), px(2)])
    });
    buf.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
