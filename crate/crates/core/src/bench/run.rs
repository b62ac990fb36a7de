use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{DecoderBackend, FrameRef};
use crate::config::Hyperparams;
use crate::memory::{FrameSelection, MemoryPolicy};
use crate::metrics::{default_tolerance, series_and_summary, FrameScore, Summary};
use crate::search::{brute_force_best, track, SearchOptions, StepTrace, DEFAULT_ENUMERATION_CAP};
use crate::simworld::SimWorld;
use crate::types::{CommittedFrame, FrameRecord, PathwayNode};

use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Tree,
    Greedy,
    Oracle,
}

/// Memory of the greedy baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreedyOptions {
    /// Recency-only memory, no gates, no modulation. Overrides the toggles.
    pub strict: bool,
    /// Use the IoU/occlusion gates when not strict.
    pub gating: bool,
    /// Use modulation weights when not strict.
    pub modulation: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self { strict: true, gating: false, modulation: false }
    }
}

/// Everything that decides how one scenario is tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSettings {
    pub mode: Mode,
    pub hyper: Hyperparams,
    pub memory: MemoryPolicy,
    pub options: SearchOptions,
    pub segments: usize,
    pub tolerance: Option<u32>,
}

impl TrackSettings {
    pub fn tree(hyper: Hyperparams) -> Self {
        Self {
            mode: Mode::Tree,
            memory: MemoryPolicy::object_aware(&hyper),
            hyper,
            options: SearchOptions::default(),
            segments: 4,
            tolerance: None,
        }
    }

    /// Single pathway, no diversification; memory per `greedy`.
    pub fn greedy(hyper: Hyperparams, greedy: GreedyOptions) -> Self {
        let memory = if greedy.strict {
            MemoryPolicy::fifo(hyper.memory_frames)
        } else {
            MemoryPolicy {
                memory_frames: hyper.memory_frames,
                selection: if greedy.gating {
                    FrameSelection::Gated { delta_iou: hyper.delta_iou }
                } else {
                    FrameSelection::Recency
                },
                modulation: greedy.modulation.then_some((hyper.w_low, hyper.w_high)),
            }
        };
        Self {
            mode: Mode::Greedy,
            hyper: Hyperparams { pathways: 1, ..hyper },
            memory,
            options: SearchOptions { diversify: false, ..SearchOptions::default() },
            segments: 4,
            tolerance: None,
        }
    }

    pub fn oracle(hyper: Hyperparams) -> Self {
        Self { mode: Mode::Oracle, ..Self::tree(hyper) }
    }
}

/// Result of tracking one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub name: String,
    pub scores: Vec<FrameScore>,
    pub summary: Summary,
    pub masklet: Vec<CommittedFrame>,
    pub traces: Vec<StepTrace>,
    pub final_score: f64,
}

/// Tracks the scenario's target from its frame-0 ground truth and scores
/// frames `1..num_frames` against ground truth.
pub fn run_scenario(
    world: &Arc<SimWorld>,
    backend: &dyn DecoderBackend,
    settings: &TrackSettings,
) -> Result<ScenarioRun, BenchError> {
    let spec = &world.spec;
    let object = spec.target();
    let prompt = FrameRecord::prompt(0, world.mask(object, 0).clone(), b"prompt".to_vec());
    let frames: Vec<FrameRef> = (1..spec.num_frames).map(FrameRef::index).collect();
    let run_err = |e: crate::error::SearchError| BenchError::Run(format!("{}: {e}", spec.name));

    let (records, traces, final_score) = match settings.mode {
        Mode::Tree | Mode::Greedy => {
            let (masklet, traces) = track(
                object as u32,
                prompt,
                &frames,
                backend,
                &settings.memory,
                &settings.hyper,
                settings.options,
            )
            .map_err(run_err)?;
            (masklet.records, traces, masklet.score)
        }
        Mode::Oracle => {
            let root = PathwayNode::root(prompt);
            let (best, score) = brute_force_best(
                &root,
                object as u32,
                &frames,
                backend,
                &settings.memory,
                &settings.hyper,
                DEFAULT_ENUMERATION_CAP,
            )
            .map_err(run_err)?;
            (best.records(), Vec::new(), score)
        }
    };

    let tolerance = settings
        .tolerance
        .unwrap_or_else(|| default_tolerance(spec.width, spec.height));
    let scores = records
        .iter()
        .skip(1)
        .map(|r| FrameScore::evaluate(r.frame_index, &r.mask, world.mask(object, r.frame_index), tolerance))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| BenchError::Run(format!("{}: {e}", spec.name)))?;
    let summary = series_and_summary(&scores, settings.segments)
        .ok_or_else(|| BenchError::Run(format!("{}: no frames to score", spec.name)))?;
    Ok(ScenarioRun {
        name: spec.name.clone(),
        scores,
        summary,
        masklet: records.iter().map(|r| CommittedFrame::from(r.as_ref())).collect(),
        traces,
        final_score,
    })
}
