//! Lightweight fake-face detection.
//!
//! Frames are cropped around their 68 facial landmarks, cut into small
//! landmark blocks and large region blocks, and passed through a learned
//! Saab filter bank per block. Spatial PCA compacts each response channel,
//! a discriminant feature test keeps the responses that best separate real
//! from fake on the training set, and a gradient-boosted tree ensemble scores
//! each frame. Video scores are the mean of their frame scores.

pub mod config;
pub mod error;
pub mod gbdt;
pub mod ingest;
pub mod linalg;
pub mod persist;
pub mod pipeline;
pub mod preprocess;
pub mod saab;
pub mod select;
pub mod source;
pub mod spatialpca;
pub mod synth;

pub use error::{Error, Result};
