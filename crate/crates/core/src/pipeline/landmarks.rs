//! Per-landmark discriminability: one small-block detector per landmark,
//! scored by frame-level test AUC.

use std::fmt::Write;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, predict_proba};
use crate::ingest::{DatasetManifest, NUM_LANDMARKS};
use crate::preprocess::BlockSlot;
use crate::source::FrameSource;

use super::{collect_blocks, compute_auc, fit_slot, labels_of};

/// Eye landmarks of the default block layout.
pub const EYE_LANDMARKS: [usize; 6] = [36, 38, 39, 42, 44, 45];
/// Jaw-line points beside the cheeks.
pub const CHEEK_LANDMARKS: [usize; 8] = [2, 3, 4, 5, 11, 12, 13, 14];

/// Landmarks processed per pass over the images; bounds memory.
const GROUP: usize = 17;

pub fn landmark_group(index: usize) -> &'static str {
    match index {
        0..=16 => "jaw",
        17..=26 => "brow",
        27..=35 => "nose",
        36..=47 => "eye",
        _ => "mouth",
    }
}

/// Test AUC of a single-block detector for each of the 68 landmarks.
pub fn landmark_discriminability(
    train: &DatasetManifest,
    test: &DatasetManifest,
    source: &dyn FrameSource,
    config: &RunConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    let train_labels = labels_of(train.records());
    let test_labels = labels_of(test.records());
    if !test.has_both_labels() {
        return Err(Error::Metric("test manifest needs both classes".into()));
    }
    let mut aucs = Vec::with_capacity(NUM_LANDMARKS);
    let indices: Vec<usize> = (0..NUM_LANDMARKS).collect();
    for group in indices.chunks(GROUP) {
        let slots: Vec<BlockSlot> = group
            .iter()
            .map(|&i| BlockSlot::landmark(i, config.layout.small_block_size))
            .collect();
        let train_blocks = collect_blocks(train.records(), source, &slots)?;
        let test_blocks = collect_blocks(test.records(), source, &slots)?;
        for ((slot, tr), te) in slots.iter().zip(&train_blocks).zip(&test_blocks) {
            let stage = slot.origin.describe();
            let (model, features) = fit_slot(slot, tr, &train_labels, config.landmark_keep_fraction, config)
                .map_err(|e| e.in_stage(stage.clone()))?;
            let clf = fit_gbdt(features.view(), &train_labels, &config.gbdt)
                .map_err(|e| e.in_stage(format!("{stage}: gbdt")))?;
            let scores = te
                .iter()
                .map(|b| {
                    let mut row = Vec::with_capacity(model.num_features());
                    model.features(b.view(), config.stride, &mut row)?;
                    predict_proba(&clf, &row)
                })
                .collect::<Result<Vec<f64>>>()?;
            aucs.push(compute_auc(&scores, &test_labels)?);
        }
    }
    Ok(aucs)
}

/// Tab-separated `landmark, group, auc` rows.
pub fn landmark_table(aucs: &[f64]) -> String {
    let mut out = String::from("landmark\tgroup\tauc\n");
    for (i, a) in aucs.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{}\t{a}", landmark_group(i));
    }
    out
}
