//! Object-aware memory bank construction.
//!
//! A bank holds the prompt record plus up to N earlier records of one
//! pathway. The object-aware policy scans backward from the newest record and
//! keeps only frames whose predicted IoU clears `delta_iou` and whose
//! occlusion score is positive; each kept entry then gets a modulation weight
//! by its rank in ascending occlusion-score order.

use std::sync::Arc;

use crate::config::Hyperparams;
use crate::types::{FrameRecord, Pathway};

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub record: Arc<FrameRecord>,
    pub weight: f64,
}

/// Memory handed to the decoder for one pathway at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBankView {
    /// Ascending frame index; the prompt is first.
    pub entries: Vec<BankEntry>,
    pub built_for_time: u32,
}

/// Builds the memory bank a pathway's leaf presents to the decoder.
pub trait MemoryBuilder: Send + Sync {
    fn build(&self, leaf: &Pathway, time: u32) -> MemoryBankView;
}

/// Scans the pathway backward from its leaf and keeps up to `n` records
/// passing both quality gates, then appends the prompt. Output is sorted by
/// frame index.
pub fn select_memory_frames(leaf: &Pathway, n: usize, delta_iou: f64) -> Vec<Arc<FrameRecord>> {
    collect_frames(leaf, n, |r| r.predicted_iou > delta_iou && r.occlusion_score > 0.0)
}

/// The `n` most recent non-prompt records plus the prompt, without gating.
pub fn select_recent_frames(leaf: &Pathway, n: usize) -> Vec<Arc<FrameRecord>> {
    collect_frames(leaf, n, |_| true)
}

fn collect_frames(
    leaf: &Pathway,
    n: usize,
    accept: impl Fn(&FrameRecord) -> bool,
) -> Vec<Arc<FrameRecord>> {
    let mut picked = Vec::with_capacity(n + 1);
    let mut accepted = 0usize;
    for node in leaf.ancestry() {
        let record = &node.record;
        if record.is_prompt {
            picked.push(Arc::clone(record));
            continue;
        }
        if accepted < n && accept(record) {
            picked.push(Arc::clone(record));
            accepted += 1;
        }
    }
    picked.reverse();
    picked
}

/// Linearly spaced weights in `[w_low, w_high]` assigned by rank in
/// ascending occlusion-score order. Ties keep input order, so callers pass
/// scores in ascending frame order. A single entry gets the midpoint.
pub fn compute_modulation_weights(occlusion_scores: &[f64], w_low: f64, w_high: f64) -> Vec<f64> {
    let m = occlusion_scores.len();
    match m {
        0 => return Vec::new(),
        1 => return vec![(w_low + w_high) / 2.0],
        _ => {}
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| occlusion_scores[a].total_cmp(&occlusion_scores[b]));
    let span = w_high - w_low;
    let mut weights = vec![0.0; m];
    for (rank, &idx) in order.iter().enumerate() {
        let w = w_low + rank as f64 / (m - 1) as f64 * span;
        weights[idx] = w.clamp(w_low, w_high);
    }
    weights
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameSelection {
    /// Backward scan with the IoU and occlusion gates.
    Gated { delta_iou: f64 },
    /// FIFO over the most recent frames.
    Recency,
}

/// A concrete memory policy: how frames are picked and whether they are
/// modulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryPolicy {
    pub memory_frames: usize,
    pub selection: FrameSelection,
    /// Weight bounds; `None` gives every entry weight 1.
    pub modulation: Option<(f64, f64)>,
}

impl MemoryPolicy {
    /// Gated selection plus modulation, from the hyperparameters.
    pub fn object_aware(h: &Hyperparams) -> Self {
        Self {
            memory_frames: h.memory_frames,
            selection: FrameSelection::Gated { delta_iou: h.delta_iou },
            modulation: Some((h.w_low, h.w_high)),
        }
    }

    /// Plain FIFO memory with unit weights.
    pub fn fifo(memory_frames: usize) -> Self {
        Self {
            memory_frames,
            selection: FrameSelection::Recency,
            modulation: None,
        }
    }

    pub fn select(&self, leaf: &Pathway) -> Vec<Arc<FrameRecord>> {
        match self.selection {
            FrameSelection::Gated { delta_iou } => {
                select_memory_frames(leaf, self.memory_frames, delta_iou)
            }
            FrameSelection::Recency => select_recent_frames(leaf, self.memory_frames),
        }
    }
}

impl MemoryBuilder for MemoryPolicy {
    fn build(&self, leaf: &Pathway, time: u32) -> MemoryBankView {
        let records = self.select(leaf);
        let weights = match self.modulation {
            Some((lo, hi)) => {
                let occ: Vec<f64> = records.iter().map(|r| r.occlusion_score).collect();
                compute_modulation_weights(&occ, lo, hi)
            }
            None => vec![1.0; records.len()],
        };
        MemoryBankView {
            entries: records
                .into_iter()
                .zip(weights)
                .map(|(record, weight)| BankEntry { record, weight })
                .collect(),
            built_for_time: time,
        }
    }
}

/// Object-aware bank for `leaf` at `time` under `h`.
pub fn build_bank(leaf: &Pathway, h: &Hyperparams, time: u32) -> MemoryBankView {
    MemoryPolicy::object_aware(h).build(leaf, time)
}
