//! Training and inference across all stages.
//!
//! Each block slot owns a Saab bank, a spatial PCA model and a feature
//! selector. A frame's classifier input is, per slot in layout order, the
//! selected raw Saab responses followed by the spatial PCA coefficients.

pub mod audit;
pub mod landmarks;
pub mod metrics;

use ndarray::{s, Array2, ArrayView3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SelectorKind};
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, predict_proba, GbdtModel};
use crate::ingest::{DatasetManifest, FrameRecord};
use crate::preprocess::{crop_face, extract_slots, BlockOrigin, BlockSlot, Image};
use crate::saab::{apply_saab_view, output_size, SaabFilterBank, SaabFitter, KERNEL_SIZE, PATCH_DIM};
use crate::select::{fit_dft, fit_energy_selector, DftSelector, EnergySelector, FeatureMatrix};
use crate::source::FrameSource;
use crate::spatialpca::{apply_spatial_pca, fit_spatial_pca, SpatialPcaModel};

pub use audit::{audit_parameters, audit_shape, BlockShape, ModelShape, ParameterReport};
pub use landmarks::{landmark_discriminability, landmark_table, CHEEK_LANDMARKS, EYE_LANDMARKS};
pub use metrics::{compute_auc, evaluate, EvaluationReport, FrameScore, VideoScore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlockSelector {
    Dft(DftSelector),
    Energy(EnergySelector),
}

impl BlockSelector {
    pub fn kept_indices(&self) -> &[usize] {
        match self {
            BlockSelector::Dft(s) => s.kept_indices(),
            BlockSelector::Energy(s) => s.kept_indices(),
        }
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            BlockSelector::Dft(s) => s.apply(row),
            BlockSelector::Energy(s) => s.apply(row),
        }
    }
}

/// Fitted stages of one block slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotModel {
    pub slot: BlockSlot,
    pub bank: SaabFilterBank,
    pub spatial: SpatialPcaModel,
    pub selector: BlockSelector,
}

impl SlotModel {
    pub fn num_features(&self) -> usize {
        self.selector.kept_indices().len() + self.spatial.total_components()
    }

    /// Appends this slot's features for one block to `out`.
    pub fn features(&self, block: ArrayView3<'_, f64>, stride: usize, out: &mut Vec<f64>) -> Result<()> {
        let responses = apply_saab_view(&self.bank, block, stride)?;
        let flat = responses.as_slice().expect("standard layout");
        out.extend(self.selector.apply(flat)?);
        out.extend(apply_spatial_pca(&self.spatial, responses.view())?);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFeatures {
    pub origin: BlockOrigin,
    pub raw: usize,
    pub spatial: usize,
}

/// Column layout of the classifier input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub blocks: Vec<BlockFeatures>,
}

impl FeatureSchema {
    pub fn of_slots(slots: &[SlotModel]) -> Self {
        FeatureSchema {
            blocks: slots
                .iter()
                .map(|s| BlockFeatures {
                    origin: s.slot.origin.clone(),
                    raw: s.selector.kept_indices().len(),
                    spatial: s.spatial.total_components(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.raw + b.spatial).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One name per column, e.g. `landmark 36/raw3` or `left-eye/pca7`.
    pub fn column_names(&self) -> Vec<String> {
        self.blocks
            .iter()
            .flat_map(|b| {
                let name = b.origin.describe();
                let raw = (0..b.raw).map({
                    let name = name.clone();
                    move |i| format!("{name}/raw{i}")
                });
                let pca = (0..b.spatial).map(move |i| format!("{name}/pca{i}"));
                raw.chain(pca)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Snapshot of the configuration the model was trained with.
    pub config: RunConfig,
    pub slots: Vec<SlotModel>,
    pub schema: FeatureSchema,
    pub classifier: GbdtModel,
}

impl DetectorModel {
    pub fn banks(&self) -> impl Iterator<Item = &SaabFilterBank> {
        self.slots.iter().map(|s| &s.bank)
    }

    pub fn num_features(&self) -> usize {
        self.schema.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != FeatureSchema::of_slots(&self.slots) {
            return Err(Error::Validation("feature schema does not match the fitted slots".into()));
        }
        if self.schema.len() != self.classifier.num_features {
            return Err(Error::Validation(format!(
                "classifier expects {} features but the blocks produce {}",
                self.classifier.num_features,
                self.schema.len()
            )));
        }
        Ok(())
    }
}

/// Loads and crops every frame and cuts the given slots, in parallel over
/// frames. Returns blocks indexed `[slot][frame]`.
pub fn collect_blocks(records: &[FrameRecord], source: &dyn FrameSource, slots: &[BlockSlot]) -> Result<Vec<Vec<Image>>> {
    let per_frame: Vec<Vec<Image>> = records
        .par_iter()
        .map(|r| {
            let image = source.load(&r.image_ref)?;
            let chip = crop_face(&image, &r.landmarks)?;
            Ok(extract_slots(&chip, &r.landmarks, slots)
                .into_iter()
                .map(|b| b.pixels)
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut by_slot: Vec<Vec<Image>> = (0..slots.len()).map(|_| Vec::with_capacity(records.len())).collect();
    for frame in per_frame {
        for (dst, block) in by_slot.iter_mut().zip(frame) {
            dst.push(block);
        }
    }
    Ok(by_slot)
}

/// Fits Saab, spatial PCA and the selector for one slot and returns the
/// slot's training features (`N x num_features`).
pub fn fit_slot(
    slot: &BlockSlot,
    blocks: &[Image],
    labels: &[u8],
    keep_fraction: f64,
    config: &RunConfig,
) -> Result<(SlotModel, Array2<f64>)> {
    let name = slot.origin.describe();
    let stride = config.stride;

    let mut fitter = SaabFitter::default();
    for b in blocks {
        fitter.push_block(b.view(), stride)?;
    }
    let bank = fitter.finish().map_err(|e| e.in_stage(format!("saab[{name}]")))?;

    let side = output_size(slot.size, KERNEL_SIZE, stride)?;
    let dim = side * side * PATCH_DIM;
    let mut flat = vec![0.0; blocks.len() * dim];
    flat.par_chunks_mut(dim)
        .zip(blocks.par_iter())
        .try_for_each(|(row, b)| -> Result<()> {
            let r = apply_saab_view(&bank, b.view(), stride)?;
            row.copy_from_slice(r.as_slice().expect("standard layout"));
            Ok(())
        })?;
    let raw = Array2::from_shape_vec((blocks.len(), dim), flat).expect("sized above");

    let views: Vec<ArrayView3<'_, f64>> = raw
        .rows()
        .into_iter()
        .map(|r| ArrayView3::from_shape((side, side, PATCH_DIM), r.to_slice().expect("contiguous rows")).expect("sized"))
        .collect();
    let spatial = fit_spatial_pca(
        &views,
        bank.channel_energy(),
        config.spatial_energy_cutoff,
        config.spatial_max_components,
    )
    .map_err(|e| e.in_stage(format!("spatialpca[{name}]")))?;
    let coeffs: Vec<Vec<f64>> = views
        .par_iter()
        .map(|v| apply_spatial_pca(&spatial, v.view()))
        .collect::<Result<_>>()?;
    drop(views);

    let (selector, raw) = match config.selector {
        SelectorKind::Dft => {
            let matrix = FeatureMatrix::new(raw, labels.to_vec()).map_err(|e| e.in_stage(format!("dft[{name}]")))?;
            let sel = fit_dft(&matrix, keep_fraction, config.num_splits).map_err(|e| e.in_stage(format!("dft[{name}]")))?;
            (BlockSelector::Dft(sel), matrix.values)
        }
        SelectorKind::Energy => {
            let energy = bank.channel_energy();
            let per_feature: Vec<f64> = (0..dim).map(|k| energy[k % PATCH_DIM]).collect();
            let sel = fit_energy_selector(&per_feature, keep_fraction).map_err(|e| e.in_stage(format!("energy[{name}]")))?;
            (BlockSelector::Energy(sel), raw)
        }
    };

    let kept = selector.kept_indices();
    let n_spatial = spatial.total_components();
    let features = Array2::from_shape_fn((blocks.len(), kept.len() + n_spatial), |(i, j)| {
        if j < kept.len() {
            raw[[i, kept[j]]]
        } else {
            coeffs[i][j - kept.len()]
        }
    });
    let model = SlotModel {
        slot: slot.clone(),
        bank,
        spatial,
        selector,
    };
    Ok((model, features))
}

fn keep_fraction_for(slot: &BlockSlot, config: &RunConfig) -> f64 {
    if slot.origin.is_landmark() {
        config.landmark_keep_fraction
    } else {
        config.region_keep_fraction
    }
}

pub fn labels_of(records: &[FrameRecord]) -> Vec<u8> {
    records.iter().map(|r| r.label.as_u8()).collect()
}

/// Fits every stage on `manifest`. Deterministic given the config's seed.
pub fn train_detector(manifest: &DatasetManifest, source: &dyn FrameSource, config: &RunConfig) -> Result<DetectorModel> {
    config.validate()?;
    let records = manifest.records();
    let labels = labels_of(records);
    let slots = config.layout.slots();

    let mut blocks = collect_blocks(records, source, &slots).map_err(|e| e.in_stage("blocks"))?;
    let mut models = Vec::with_capacity(slots.len());
    let mut parts = Vec::with_capacity(slots.len());
    for (slot, slot_blocks) in slots.iter().zip(blocks.iter_mut()) {
        let (model, features) = fit_slot(slot, slot_blocks, &labels, keep_fraction_for(slot, config), config)?;
        slot_blocks.clear();
        slot_blocks.shrink_to_fit();
        models.push(model);
        parts.push(features);
    }
    let total: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut features = Array2::zeros((records.len(), total));
    let mut col = 0;
    for p in parts {
        features.slice_mut(s![.., col..col + p.ncols()]).assign(&p);
        col += p.ncols();
    }

    let classifier = fit_gbdt(features.view(), &labels, &config.gbdt).map_err(|e| e.in_stage("gbdt"))?;
    let model = DetectorModel {
        config: config.clone(),
        schema: FeatureSchema::of_slots(&models),
        slots: models,
        classifier,
    };
    model.validate()?;
    Ok(model)
}

/// Classifier input for one frame image.
pub fn image_features(model: &DetectorModel, record: &FrameRecord, image: &Image) -> Result<Vec<f64>> {
    let chip = crop_face(image, &record.landmarks)?;
    let slots: Vec<BlockSlot> = model.slots.iter().map(|s| s.slot.clone()).collect();
    let blocks = extract_slots(&chip, &record.landmarks, &slots);
    let mut out = Vec::with_capacity(model.num_features());
    for (slot, block) in model.slots.iter().zip(&blocks) {
        slot.features(block.pixels.view(), model.config.stride, &mut out)?;
    }
    if out.len() != model.classifier.num_features {
        return Err(Error::Validation(format!(
            "frame produced {} features but the classifier expects {}",
            out.len(),
            model.classifier.num_features
        )));
    }
    Ok(out)
}

pub fn frame_features(model: &DetectorModel, record: &FrameRecord, source: &dyn FrameSource) -> Result<Vec<f64>> {
    let image = source.load(&record.image_ref)?;
    image_features(model, record, &image)
}

/// Probability that the frame is fake.
pub fn predict_frame(model: &DetectorModel, record: &FrameRecord, source: &dyn FrameSource) -> Result<f64> {
    predict_proba(&model.classifier, &frame_features(model, record, source)?)
}

/// Frame scores in record order, computed in parallel.
pub fn predict_frames(model: &DetectorModel, records: &[FrameRecord], source: &dyn FrameSource) -> Result<Vec<f64>> {
    records.par_iter().map(|r| predict_frame(model, r, source)).collect()
}

/// Mean of the frame scores.
pub fn predict_video(model: &DetectorModel, frames: &[FrameRecord], source: &dyn FrameSource) -> Result<f64> {
    mean_score(&predict_frames(model, frames, source)?)
}

pub fn mean_score(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Argument("cannot score a video with no frames".into()));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
