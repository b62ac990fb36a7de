//! Segmentation quality: region similarity J, boundary F-measure, J&F,
//! and per-frame series with temporal segment means.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::MaskError;
use crate::mask::Mask;

/// Jaccard index. Both empty is a perfect prediction (1.0).
pub fn region_j(pred: &Mask, gt: &Mask) -> Result<f64, MaskError> {
    pred.iou(gt)
}

/// Boundary tolerance used when none is configured: `ceil(0.008 * diagonal)`.
pub fn default_tolerance(width: u32, height: u32) -> u32 {
    let diag = (f64::from(width).powi(2) + f64::from(height).powi(2)).sqrt();
    (0.008 * diag).ceil() as u32
}

/// Boundary F-measure. A boundary pixel matches if some pixel of the other
/// boundary lies within Chebyshev distance `tolerance`.
pub fn contour_f(pred: &Mask, gt: &Mask, tolerance: u32) -> Result<f64, MaskError> {
    if !pred.same_shape(gt) {
        return Err(MaskError::ShapeMismatch {
            left: (pred.width(), pred.height()),
            right: (gt.width(), gt.height()),
        });
    }
    let pb = pred.boundary();
    let gb = gt.boundary();
    let (np, ng) = (pb.count(), gb.count());
    if np == 0 && ng == 0 {
        return Ok(1.0);
    }
    if np == 0 || ng == 0 {
        return Ok(0.0);
    }
    let precision = pb.intersection_count(&gb.dilate_square(tolerance))? as f64 / np as f64;
    let recall = gb.intersection_count(&pb.dilate_square(tolerance))? as f64 / ng as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Tight inclusive box `(x_min, y_min, x_max, y_max)`, or `None` if empty.
pub fn mask_to_bbox(mask: &Mask) -> Option<(u32, u32, u32, u32)> {
    mask.iter_ones().fold(None, |acc, (x, y)| {
        Some(match acc {
            None => (x, y, x, y),
            Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub time: u32,
    pub j: f64,
    pub f: f64,
    pub jf: f64,
}

impl FrameScore {
    pub fn new(time: u32, j: f64, f: f64) -> Self {
        Self { time, j, f, jf: (j + f) / 2.0 }
    }

    pub fn evaluate(time: u32, pred: &Mask, gt: &Mask, tolerance: u32) -> Result<Self, MaskError> {
        Ok(Self::new(time, region_j(pred, gt)?, contour_f(pred, gt, tolerance)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub j: f64,
    pub f: f64,
    pub jf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    pub mean: Means,
    /// Equal-width temporal segments in frame order.
    pub segments: Vec<Means>,
}

fn means(scores: &[FrameScore]) -> Means {
    let n = scores.len() as f64;
    let (j, f, jf) = scores
        .iter()
        .fold((0.0, 0.0, 0.0), |(j, f, jf), s| (j + s.j, f + s.f, jf + s.jf));
    Means { j: j / n, f: f / n, jf: jf / n }
}

/// Index ranges of `count` equal-width segments over `n` items; the last
/// absorbs the remainder. `count` is clamped to `1..=n`.
pub fn segment_bounds(n: usize, count: usize) -> Vec<std::ops::Range<usize>> {
    let count = count.clamp(1, n.max(1));
    let width = n / count;
    (0..count)
        .map(|i| {
            let end = if i + 1 == count { n } else { (i + 1) * width };
            i * width..end
        })
        .collect()
}

/// Overall and per-segment means. `None` for an empty series.
pub fn series_and_summary(scores: &[FrameScore], segment_count: usize) -> Option<Summary> {
    if scores.is_empty() {
        return None;
    }
    Some(Summary {
        frames: scores.len(),
        mean: means(scores),
        segments: segment_bounds(scores.len(), segment_count)
            .into_iter()
            .map(|r| means(&scores[r]))
            .collect(),
    })
}

/// Per-frame CSV with header `time,j,f,jf`.
pub fn scores_csv(scores: &[FrameScore]) -> String {
    let mut out = String::from("time,j,f,jf\n");
    for s in scores {
        writeln!(out, "{},{:.6},{:.6},{:.6}", s.time, s.j, s.f, s.jf).expect("write to string");
    }
    out
}
