//! Deterministic synthetic face corpus with a planted signal.
//!
//! Every video gets its own smooth skin texture, pose offset and face size.
//! Frames of fake videos carry extra high-frequency noise inside the two eye
//! boxes and nowhere else, so a detector should find the eyes discriminant
//! and the cheeks not.

use std::path::{Path, PathBuf};

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{DatasetManifest, FrameRecord, Label, LandmarkSet, Point, Split, NUM_LANDMARKS};
use crate::preprocess::Image;
use crate::source::{save_png, FrameSource};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub videos: usize,
    pub frames_per_video: usize,
    pub image_size: usize,
    /// Face width in pixels before the per-video scale jitter.
    pub face_width: f64,
    /// Half-width of the uniform noise added to fake eye boxes.
    pub noise_amplitude: f64,
    /// Pixels added on each side of the eye landmarks' bounding box.
    pub eye_padding: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            videos: 200,
            frames_per_video: 10,
            image_size: 160,
            face_width: 80.0,
            noise_amplitude: 0.12,
            eye_padding: 4.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: [f64; 3],
}

#[derive(Debug, Clone)]
struct VideoSpec {
    label: Label,
    center: Point,
    face_width: f64,
    base: [f64; 3],
    waves: Vec<Wave>,
}

/// The 68-point layout in face units: x in `[0, 1]` across the jaw, y from
/// the brows (about 0.18) to the chin (1.0).
pub fn template_landmarks() -> Vec<Point> {
    let mut pts = Vec::with_capacity(NUM_LANDMARKS);
    let pi = std::f64::consts::PI;
    for i in 0..17 {
        let t = i as f64 / 16.0;
        pts.push(Point::new(0.5 - 0.5 * (pi * t).cos(), 0.25 + 0.75 * (pi * t).sin()));
    }
    for i in 0..5 {
        pts.push(Point::new(0.12 + 0.075 * i as f64, 0.2 - 0.02 * (2.0 - (i as f64 - 2.0).abs())));
    }
    for i in 0..5 {
        pts.push(Point::new(0.58 + 0.075 * i as f64, 0.2 - 0.02 * (2.0 - (i as f64 - 2.0).abs())));
    }
    for i in 0..4 {
        pts.push(Point::new(0.5, 0.3 + 0.08 * i as f64));
    }
    for i in 0..5 {
        pts.push(Point::new(0.4 + 0.05 * i as f64, 0.62));
    }
    for cx in [0.3, 0.7] {
        let (w, h, cy) = (0.16, 0.06, 0.33);
        pts.extend([
            Point::new(cx - w / 2.0, cy),
            Point::new(cx - w / 6.0, cy - h / 2.0),
            Point::new(cx + w / 6.0, cy - h / 2.0),
            Point::new(cx + w / 2.0, cy),
            Point::new(cx + w / 6.0, cy + h / 2.0),
            Point::new(cx - w / 6.0, cy + h / 2.0),
        ]);
    }
    let ellipse = |n: usize, rx: f64, ry: f64| {
        (0..n).map(move |k| {
            let a = pi + 2.0 * pi * k as f64 / n as f64;
            Point::new(0.5 + rx * a.cos(), 0.8 + ry * a.sin())
        })
    };
    pts.extend(ellipse(12, 0.18, 0.07));
    pts.extend(ellipse(8, 0.12, 0.035));
    debug_assert_eq!(pts.len(), NUM_LANDMARKS);
    pts
}

const TEMPLATE_CENTER: Point = Point { x: 0.5, y: 0.59 };

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    config: SynthConfig,
    videos: Vec<VideoSpec>,
    template: Vec<Point>,
}

impl SyntheticCorpus {
    /// Odd-numbered videos are fake, even-numbered ones real.
    pub fn generate(config: SynthConfig) -> Result<Self> {
        if config.videos < 2 || config.frames_per_video == 0 {
            return Err(Error::Argument("need at least 2 videos with at least 1 frame each".into()));
        }
        if config.image_size < 32 || config.face_width <= 0.0 || config.noise_amplitude < 0.0 {
            return Err(Error::Argument("invalid synthetic image geometry".into()));
        }
        let size = config.image_size as f64;
        let videos = (0..config.videos)
            .map(|v| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, v as u64, u64::MAX));
                let waves = (0..3)
                    .map(|_| {
                        let wavelength = rng.random_range(20.0..60.0);
                        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        let k = std::f64::consts::TAU / wavelength;
                        Wave {
                            kx: k * angle.cos(),
                            ky: k * angle.sin(),
                            phase: rng.random_range(0.0..std::f64::consts::TAU),
                            amp: [(); 3].map(|_| rng.random_range(0.02..0.06)),
                        }
                    })
                    .collect();
                VideoSpec {
                    label: if v % 2 == 1 { Label::Fake } else { Label::Real },
                    center: Point::new(
                        size / 2.0 + rng.random_range(-4.0..4.0),
                        size / 2.0 + rng.random_range(-4.0..4.0),
                    ),
                    face_width: config.face_width * rng.random_range(0.95..1.05),
                    base: [
                        rng.random_range(0.6..0.8),
                        rng.random_range(0.45..0.6),
                        rng.random_range(0.35..0.5),
                    ],
                    waves,
                }
            })
            .collect();
        Ok(SyntheticCorpus {
            config,
            videos,
            template: template_landmarks(),
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn num_videos(&self) -> usize {
        self.videos.len()
    }

    pub fn label(&self, video: usize) -> Label {
        self.videos[video].label
    }

    pub fn video_id(video: usize) -> String {
        format!("v{video:04}")
    }

    pub fn image_ref(video: usize, frame: usize) -> String {
        format!("frames/v{video:04}_f{frame:03}.png")
    }

    /// Inverse of [`SyntheticCorpus::image_ref`].
    pub fn parse_ref(image_ref: &str) -> Option<(usize, usize)> {
        let stem = image_ref.strip_prefix("frames/v")?.strip_suffix(".png")?;
        let (v, f) = stem.split_once("_f")?;
        Some((v.parse().ok()?, f.parse().ok()?))
    }

    fn frame_rng(&self, video: usize, frame: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(self.config.seed, video as u64, frame as u64))
    }

    /// Source-image landmarks of a frame, with pose jitter and a little
    /// per-point detector noise.
    pub fn landmarks(&self, video: usize, frame: usize) -> LandmarkSet {
        let spec = &self.videos[video];
        let mut rng = self.frame_rng(video, frame);
        let (jx, jy) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let points = self
            .template
            .iter()
            .map(|p| {
                Point::new(
                    spec.center.x + jx + (p.x - TEMPLATE_CENTER.x) * spec.face_width + rng.random_range(-0.3..0.3),
                    spec.center.y + jy + (p.y - TEMPLATE_CENTER.y) * spec.face_width + rng.random_range(-0.3..0.3),
                )
            })
            .collect();
        LandmarkSet::new(points).expect("template stays inside the image")
    }

    pub fn record(&self, video: usize, frame: usize) -> FrameRecord {
        FrameRecord {
            image_ref: Self::image_ref(video, frame),
            landmarks: self.landmarks(video, frame),
            label: self.label(video),
            video_id: Self::video_id(video),
            frame_index: frame as u64,
        }
    }

    pub fn render(&self, video: usize, frame: usize) -> Image {
        let spec = &self.videos[video];
        let size = self.config.image_size;
        let lm = self.landmarks(video, frame);
        let mut rng = self.frame_rng(video, frame);
        // pixel noise comes from a stream separate from the landmark jitter
        rng.set_stream(1);

        let eye_boxes: Vec<(Point, Point)> = [36..42, 42..48]
            .into_iter()
            .map(|r| {
                let idx: Vec<usize> = r.collect();
                let xs = idx.iter().map(|&i| lm.get(i).x);
                let ys = idx.iter().map(|&i| lm.get(i).y);
                let (x0, x1) = xs.fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(x), b.max(x)));
                let (y0, y1) = ys.fold((f64::MAX, f64::MIN), |(a, b), y| (a.min(y), b.max(y)));
                let pad = self.config.eye_padding;
                (Point::new(x0 - pad, y0 - pad), Point::new(x1 + pad, y1 + pad))
            })
            .collect();
        let eyes: Vec<(Point, f64, f64)> = [36..42, 42..48]
            .into_iter()
            .map(|r| {
                let idx: Vec<usize> = r.collect();
                let (a, b) = (lm.get(idx[0]), lm.get(idx[3]));
                (lm.centroid(&idx), (b.x - a.x).abs() / 2.0, spec.face_width * 0.045)
            })
            .collect();
        let mouth_idx: Vec<usize> = (48..60).collect();
        let mouth = (lm.centroid(&mouth_idx), spec.face_width * 0.18, spec.face_width * 0.07);
        let inside = |p: Point, (c, rx, ry): (Point, f64, f64)| {
            let (dx, dy) = ((p.x - c.x) / rx, (p.y - c.y) / ry);
            dx * dx + dy * dy <= 1.0
        };
        let fake = spec.label == Label::Fake;

        let mut img = Array3::zeros((size, size, 3));
        for y in 0..size {
            for x in 0..size {
                let p = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                let mut px = spec.base;
                for w in &spec.waves {
                    let s = (w.kx * p.x + w.ky * p.y + w.phase).sin();
                    for c in 0..3 {
                        px[c] += w.amp[c] * s;
                    }
                }
                if eyes.iter().any(|&e| inside(p, e)) {
                    px.iter_mut().for_each(|v| *v -= 0.3);
                }
                if inside(p, mouth) {
                    px[1] -= 0.15;
                    px[2] -= 0.15;
                }
                let in_eye_box = eye_boxes
                    .iter()
                    .any(|(lo, hi)| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y);
                for (c, v) in px.iter().enumerate() {
                    let mut v = v + rng.random_range(-0.02..0.02);
                    if fake && in_eye_box {
                        v += rng.random_range(-self.config.noise_amplitude..=self.config.noise_amplitude);
                    }
                    img[[y, x, c]] = v.clamp(0.0, 1.0);
                }
            }
        }
        img
    }

    /// Video-stratified split: the last `test_fraction` of each class goes
    /// to test. Returns (train videos, test videos).
    pub fn split_videos(&self, test_fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::Argument(format!("test fraction must be in (0, 1), got {test_fraction}")));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for label in [Label::Real, Label::Fake] {
            let vids: Vec<usize> = (0..self.num_videos()).filter(|&v| self.label(v) == label).collect();
            let n_test = ((vids.len() as f64 * test_fraction).round() as usize).clamp(1, vids.len() - 1);
            let cut = vids.len() - n_test;
            train.extend_from_slice(&vids[..cut]);
            test.extend_from_slice(&vids[cut..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((train, test))
    }

    pub fn manifest(&self, split: Split, videos: &[usize]) -> Result<DatasetManifest> {
        let records = videos
            .iter()
            .flat_map(|&v| (0..self.config.frames_per_video).map(move |f| (v, f)))
            .map(|(v, f)| self.record(v, f))
            .collect();
        DatasetManifest::new(split, records)
    }

    /// Renders every frame to `dir/frames` and writes `train.tsv` and
    /// `test.tsv` next to it.
    pub fn write(&self, dir: &Path, test_fraction: f64) -> Result<(PathBuf, PathBuf)> {
        let (train_videos, test_videos) = self.split_videos(test_fraction)?;
        let frames = dir.join("frames");
        std::fs::create_dir_all(&frames).map_err(|e| Error::io(&frames, e))?;
        for v in 0..self.num_videos() {
            for f in 0..self.config.frames_per_video {
                save_png(&self.render(v, f), &dir.join(Self::image_ref(v, f)))?;
            }
        }
        let train_path = dir.join("train.tsv");
        let test_path = dir.join("test.tsv");
        self.manifest(Split::Train, &train_videos)?.save(&train_path)?;
        self.manifest(Split::Test, &test_videos)?.save(&test_path)?;
        Ok((train_path, test_path))
    }
}

impl FrameSource for SyntheticCorpus {
    fn load(&self, image_ref: &str) -> Result<Image> {
        match Self::parse_ref(image_ref) {
            Some((v, f)) if v < self.num_videos() && f < self.config.frames_per_video => Ok(self.render(v, f)),
            _ => Err(Error::io(
                image_ref,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a frame of this synthetic corpus"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticCorpus {
        SyntheticCorpus::generate(SynthConfig {
            videos: 4,
            frames_per_video: 2,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn deterministic_render() {
        let a = small();
        let b = small();
        assert_eq!(a.render(1, 1), b.render(1, 1));
        assert_ne!(a.render(1, 0), a.render(1, 1));
        assert_eq!(a.landmarks(3, 1), b.landmarks(3, 1));
    }

    #[test]
    fn noise_only_in_fake_eye_boxes() {
        let c = small();
        let img = c.render(1, 0);
        let lm = c.landmarks(1, 0);
        let cheek = lm.get(3);
        let eye = lm.centroid(&[36, 37, 38, 39, 40, 41]);
        // local roughness: mean absolute horizontal difference
        let rough = |p: Point| {
            let (cx, cy) = (p.x as usize, p.y as usize);
            let mut s = 0.0;
            for y in cy - 2..=cy + 2 {
                for x in cx - 4..cx + 4 {
                    s += (img[[y, x + 1, 0]] - img[[y, x, 0]]).abs();
                }
            }
            s / 40.0
        };
        assert!(rough(eye) > 2.0 * rough(cheek));
    }

    #[test]
    fn refs_round_trip_and_split() {
        assert_eq!(SyntheticCorpus::parse_ref(&SyntheticCorpus::image_ref(12, 7)), Some((12, 7)));
        let c = SyntheticCorpus::generate(SynthConfig {
            videos: 20,
            frames_per_video: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        let (train, test) = c.split_videos(0.3).unwrap();
        assert_eq!(train.len() + test.len(), 20);
        assert_eq!(test.iter().filter(|&&v| c.label(v) == Label::Fake).count(), 3);
        assert!(c.load("frames/v0099_f000.png").is_err());
    }
}
