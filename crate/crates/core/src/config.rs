//! Run configuration.
//!
//! Config files are flat TOML: every key is optional and overrides the
//! default. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! selector = "dft"            # or "energy"
//! landmark_keep_fraction = 0.35
//! max_trees = 500
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::GbdtConfig;
use crate::preprocess::{BlockLayoutConfig, Region};
use crate::saab::{output_size, DEFAULT_STRIDE, KERNEL_SIZE};
use crate::select::{DEFAULT_NUM_SPLITS, LANDMARK_KEEP_FRACTION, REGION_KEEP_FRACTION};
use crate::spatialpca::{DEFAULT_ENERGY_CUTOFF, DEFAULT_MAX_COMPONENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    /// Supervised discriminant feature test.
    Dft,
    /// Unsupervised ranking by Saab channel energy.
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub layout: BlockLayoutConfig,
    pub stride: usize,
    pub num_splits: usize,
    pub landmark_keep_fraction: f64,
    pub region_keep_fraction: f64,
    pub selector: SelectorKind,
    pub spatial_energy_cutoff: f64,
    pub spatial_max_components: usize,
    pub gbdt: GbdtConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            layout: BlockLayoutConfig::default(),
            stride: DEFAULT_STRIDE,
            num_splits: DEFAULT_NUM_SPLITS,
            landmark_keep_fraction: LANDMARK_KEEP_FRACTION,
            region_keep_fraction: REGION_KEEP_FRACTION,
            selector: SelectorKind::Dft,
            spatial_energy_cutoff: DEFAULT_ENERGY_CUTOFF,
            spatial_max_components: DEFAULT_MAX_COMPONENTS,
            gbdt: GbdtConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        output_size(self.layout.small_block_size, KERNEL_SIZE, self.stride)?;
        output_size(self.layout.large_block_size, KERNEL_SIZE, self.stride)?;
        if self.num_splits == 0 {
            return Err(Error::Config("num_splits must be at least 1".into()));
        }
        for (name, f) in [
            ("landmark_keep_fraction", self.landmark_keep_fraction),
            ("region_keep_fraction", self.region_keep_fraction),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {f}")));
            }
        }
        if !(self.spatial_energy_cutoff > 0.0 && self.spatial_energy_cutoff <= 1.0) {
            return Err(Error::Config(format!(
                "spatial_energy_cutoff must be in (0, 1], got {}",
                self.spatial_energy_cutoff
            )));
        }
        if self.spatial_max_components == 0 {
            return Err(Error::Config("spatial_max_components must be at least 1".into()));
        }
        self.gbdt.validate()
    }

    /// Sets the run seed, which also seeds the classifier's holdout split.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.gbdt.seed = seed;
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let config = file.apply(RunConfig::default());
        config.validate()?;
        Ok(config)
    }

    /// Flat TOML holding every key, loadable by [`RunConfig::from_toml`].
    pub fn to_toml(&self) -> String {
        let region = |r: Region| {
            self.layout
                .regions
                .iter()
                .find(|d| d.region == r)
                .map(|d| d.landmarks.clone())
        };
        let file = ConfigFile {
            seed: Some(self.seed),
            stride: Some(self.stride),
            num_splits: Some(self.num_splits),
            landmark_keep_fraction: Some(self.landmark_keep_fraction),
            region_keep_fraction: Some(self.region_keep_fraction),
            selector: Some(self.selector),
            spatial_energy_cutoff: Some(self.spatial_energy_cutoff),
            spatial_max_components: Some(self.spatial_max_components),
            landmark_indices: Some(self.layout.landmark_indices.clone()),
            small_block_size: Some(self.layout.small_block_size),
            large_block_size: Some(self.layout.large_block_size),
            left_eye_landmarks: region(Region::LeftEye),
            right_eye_landmarks: region(Region::RightEye),
            mouth_landmarks: region(Region::Mouth),
            max_leaves: Some(self.gbdt.max_leaves),
            max_trees: Some(self.gbdt.max_trees),
            learning_rate: Some(self.gbdt.learning_rate),
            num_bins: Some(self.gbdt.num_bins),
            min_data_in_leaf: Some(self.gbdt.min_data_in_leaf),
            min_sum_hessian: Some(self.gbdt.min_sum_hessian),
            lambda_l2: Some(self.gbdt.lambda_l2),
            min_split_gain: Some(self.gbdt.min_split_gain),
            validation_fraction: Some(self.gbdt.validation_fraction),
            early_stopping_rounds: Some(self.gbdt.early_stopping_rounds),
            early_stopping_min_delta: Some(self.gbdt.early_stopping_min_delta),
        };
        toml::to_string(&file).expect("flat config serialises")
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    stride: Option<usize>,
    num_splits: Option<usize>,
    landmark_keep_fraction: Option<f64>,
    region_keep_fraction: Option<f64>,
    selector: Option<SelectorKind>,
    spatial_energy_cutoff: Option<f64>,
    spatial_max_components: Option<usize>,
    landmark_indices: Option<Vec<usize>>,
    small_block_size: Option<usize>,
    large_block_size: Option<usize>,
    left_eye_landmarks: Option<Vec<usize>>,
    right_eye_landmarks: Option<Vec<usize>>,
    mouth_landmarks: Option<Vec<usize>>,
    max_leaves: Option<usize>,
    max_trees: Option<usize>,
    learning_rate: Option<f64>,
    num_bins: Option<usize>,
    min_data_in_leaf: Option<usize>,
    min_sum_hessian: Option<f64>,
    lambda_l2: Option<f64>,
    min_split_gain: Option<f64>,
    validation_fraction: Option<f64>,
    early_stopping_rounds: Option<usize>,
    early_stopping_min_delta: Option<f64>,
}

impl ConfigFile {
    fn apply(self, mut c: RunConfig) -> RunConfig {
        macro_rules! set {
            ($($src:ident => $($dst:ident).+;)*) => {
                $(if let Some(v) = self.$src { c.$($dst).+ = v; })*
            };
        }
        set! {
            stride => stride;
            num_splits => num_splits;
            landmark_keep_fraction => landmark_keep_fraction;
            region_keep_fraction => region_keep_fraction;
            selector => selector;
            spatial_energy_cutoff => spatial_energy_cutoff;
            spatial_max_components => spatial_max_components;
            landmark_indices => layout.landmark_indices;
            small_block_size => layout.small_block_size;
            large_block_size => layout.large_block_size;
            max_leaves => gbdt.max_leaves;
            max_trees => gbdt.max_trees;
            learning_rate => gbdt.learning_rate;
            num_bins => gbdt.num_bins;
            min_data_in_leaf => gbdt.min_data_in_leaf;
            min_sum_hessian => gbdt.min_sum_hessian;
            lambda_l2 => gbdt.lambda_l2;
            min_split_gain => gbdt.min_split_gain;
            validation_fraction => gbdt.validation_fraction;
            early_stopping_rounds => gbdt.early_stopping_rounds;
            early_stopping_min_delta => gbdt.early_stopping_min_delta;
        }
        for (region, landmarks) in [
            (Region::LeftEye, self.left_eye_landmarks),
            (Region::RightEye, self.right_eye_landmarks),
            (Region::Mouth, self.mouth_landmarks),
        ] {
            if let (Some(l), Some(def)) = (landmarks, c.layout.regions.iter_mut().find(|d| d.region == region)) {
                def.landmarks = l;
            }
        }
        match self.seed {
            Some(seed) => c.with_seed(seed),
            None => c,
        }
    }
}
