//! ROC AUC and frame/video evaluation reports.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::ingest::{DatasetManifest, Label};
use crate::source::FrameSource;

use super::{mean_score, predict_frames, DetectorModel};

/// Probability that a random positive scores above a random negative, with
/// ties counting one half. Computed from midranks in `O(N log N)`.
pub fn compute_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of 1-based midranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += midrank * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameScore {
    pub video_id: String,
    pub frame_index: u64,
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoScore {
    pub video_id: String,
    pub label: Label,
    pub frames: usize,
    pub score: f64,
}

/// Groups frame scores by video, in order of first appearance, and averages
/// them. Frames of one video must share a label.
pub fn aggregate_videos(frames: &[FrameScore]) -> Result<Vec<VideoScore>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: std::collections::HashMap<&str, (Label, Vec<f64>)> = Default::default();
    for f in frames {
        let entry = groups.entry(&f.video_id).or_insert_with(|| {
            order.push(&f.video_id);
            (f.label, Vec::new())
        });
        if entry.0 != f.label {
            return Err(Error::Validation(format!("video {} has frames with both labels", f.video_id)));
        }
        entry.1.push(f.score);
    }
    order
        .into_iter()
        .map(|id| {
            let (label, scores) = &groups[id];
            Ok(VideoScore {
                video_id: id.to_string(),
                label: *label,
                frames: scores.len(),
                score: mean_score(scores)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub frames: Vec<FrameScore>,
    pub videos: Vec<VideoScore>,
    /// `None` when the frames do not cover both classes.
    pub frame_auc: Option<f64>,
    pub video_auc: Option<f64>,
}

fn optional_auc(scores: &[f64], labels: &[u8]) -> Result<Option<f64>> {
    match compute_auc(scores, labels) {
        Ok(a) => Ok(Some(a)),
        Err(Error::Metric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

impl EvaluationReport {
    pub fn from_frames(frames: Vec<FrameScore>) -> Result<Self> {
        let videos = aggregate_videos(&frames)?;
        let frame_auc = optional_auc(
            &frames.iter().map(|f| f.score).collect::<Vec<_>>(),
            &frames.iter().map(|f| f.label.as_u8()).collect::<Vec<_>>(),
        )?;
        let video_auc = optional_auc(
            &videos.iter().map(|v| v.score).collect::<Vec<_>>(),
            &videos.iter().map(|v| v.label.as_u8()).collect::<Vec<_>>(),
        )?;
        Ok(EvaluationReport {
            frames,
            videos,
            frame_auc,
            video_auc,
        })
    }

    pub fn summary(&self) -> String {
        let fmt = |a: Option<f64>| a.map_or_else(|| "undefined".to_string(), |a| format!("{a:.6}"));
        format!(
            "frames\t{}\nvideos\t{}\nframe_auc\t{}\nvideo_auc\t{}\n",
            self.frames.len(),
            self.videos.len(),
            fmt(self.frame_auc),
            fmt(self.video_auc)
        )
    }

    pub fn frames_tsv(&self) -> String {
        let mut out = String::from("video_id\tframe_index\tlabel\tscore\n");
        for f in &self.frames {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", f.video_id, f.frame_index, f.label.as_u8(), f.score);
        }
        out
    }

    pub fn videos_tsv(&self) -> String {
        let mut out = String::from("video_id\tlabel\tframes\tscore\n");
        for v in &self.videos {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", v.video_id, v.label.as_u8(), v.frames, v.score);
        }
        out
    }
}

/// Scores every frame of `manifest` and aggregates per video.
pub fn evaluate(model: &DetectorModel, manifest: &DatasetManifest, source: &dyn FrameSource) -> Result<EvaluationReport> {
    model.validate()?;
    let records = manifest.records();
    let scores = predict_frames(model, records, source)?;
    let frames = records
        .iter()
        .zip(scores)
        .map(|(r, score)| FrameScore {
            video_id: r.video_id.clone(),
            frame_index: r.frame_index,
            label: r.label,
            score,
        })
        .collect();
    EvaluationReport::from_frames(frames)
}
