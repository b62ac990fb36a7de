//! Constrained tree search over segmentation hypotheses.
//!
//! Each step expands every live pathway with one decode call (three
//! candidates each), scores every candidate as
//! `parent + ln(predicted_iou + epsilon)`, and keeps P of them. When every
//! decode call of the step reports a low-magnitude occlusion score the step
//! is uncertain, and the kept set is forced to have distinct rounded IoUs so
//! the beam does not collapse onto near-identical masks.
//!
//! Candidates are ranked by the total order
//! `(tentative score desc, parent beam position asc, candidate index asc)`.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::backend::{DecodeRequest, DecoderBackend, FrameRef};
use crate::config::Hyperparams;
use crate::error::SearchError;
use crate::memory::{MemoryBankView, MemoryBuilder};
use crate::types::{BeamState, CandidatePrediction, FrameRecord, Pathway, PathwayNode};

/// Default cap on the number of pathways [`brute_force_best`] may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 59_049; // 3^10

/// `parent_score + ln(predicted_iou + epsilon)`.
pub fn score_update(parent_score: f64, predicted_iou: f64, epsilon: f64) -> Result<f64, SearchError> {
    if !(0.0..=1.0).contains(&predicted_iou) {
        return Err(SearchError::Domain(predicted_iou));
    }
    Ok(parent_score + (predicted_iou + epsilon).ln())
}

/// One child proposal of a live pathway.
#[derive(Debug, Clone)]
pub struct ExpansionCandidate {
    pub parent: Pathway,
    /// Index of the parent in the (sorted) beam it was expanded from.
    pub parent_position: usize,
    pub candidate_index: usize,
    pub frame_index: u32,
    pub prediction: CandidatePrediction,
    pub tentative_score: f64,
}

impl ExpansionCandidate {
    fn into_node(self) -> Pathway {
        let record = FrameRecord::committed(self.frame_index, self.prediction);
        PathwayNode::child(&self.parent, record, self.tentative_score, self.candidate_index as u8)
    }
}

/// The ranking used by pruning, diversity selection and finalization.
pub fn total_order(a: &ExpansionCandidate, b: &ExpansionCandidate) -> Ordering {
    b.tentative_score
        .total_cmp(&a.tentative_score)
        .then(a.parent_position.cmp(&b.parent_position))
        .then(a.candidate_index.cmp(&b.candidate_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Apply distinct-IoU selection on uncertain steps.
    pub diversify: bool,
    /// Issue the decode calls of one step from several threads when the
    /// backend allows it.
    pub concurrent_decode: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { diversify: true, concurrent_decode: false }
    }
}

/// Decodes every leaf against its own memory bank. Output order is leaf
/// order, then candidate order.
pub fn expand(
    leaves: &[Pathway],
    object_id: u32,
    time: u32,
    frame: &FrameRef,
    backend: &dyn DecoderBackend,
    memory: &dyn MemoryBuilder,
    epsilon: f64,
) -> Result<Vec<ExpansionCandidate>, SearchError> {
    expand_with_banks(leaves, object_id, time, frame, backend, memory, epsilon, false)
        .map(|(c, _)| c)
}

#[allow(clippy::too_many_arguments)]
fn expand_with_banks(
    leaves: &[Pathway],
    object_id: u32,
    time: u32,
    frame: &FrameRef,
    backend: &dyn DecoderBackend,
    memory: &dyn MemoryBuilder,
    epsilon: f64,
    concurrent: bool,
) -> Result<(Vec<ExpansionCandidate>, Vec<MemoryBankView>), SearchError> {
    let decode_leaf = |position: usize, leaf: &Pathway| {
        let bank = memory.build(leaf, time);
        let request = DecodeRequest {
            object_id,
            time,
            frame: frame.clone(),
            bank,
        };
        let attach = |source| SearchError::Backend {
            leaf: position,
            frame_index: time,
            source,
        };
        let response = backend.decode(&request).map_err(attach)?;
        let mut out = Vec::with_capacity(3);
        for (k, prediction) in response.candidates.iter().enumerate() {
            let tentative_score = score_update(leaf.cumulative_score, prediction.predicted_iou, epsilon)?;
            out.push((k, tentative_score));
        }
        response.validate(request.canvas()).map_err(attach)?;
        let candidates: Vec<ExpansionCandidate> = response
            .candidates
            .into_iter()
            .zip(out)
            .map(|(prediction, (k, tentative_score))| ExpansionCandidate {
                parent: Arc::clone(leaf),
                parent_position: position,
                candidate_index: k,
                frame_index: time,
                prediction,
                tentative_score,
            })
            .collect();
        Ok((candidates, request.bank))
    };

    let per_leaf: Vec<Result<_, SearchError>> = if concurrent && leaves.len() > 1 {
        leaves.par_iter().enumerate().map(|(i, l)| decode_leaf(i, l)).collect()
    } else {
        leaves.iter().enumerate().map(|(i, l)| decode_leaf(i, l)).collect()
    };
    let mut candidates = Vec::with_capacity(leaves.len() * 3);
    let mut banks = Vec::with_capacity(leaves.len());
    for r in per_leaf {
        let (c, b) = r?;
        candidates.extend(c);
        banks.push(b);
    }
    Ok((candidates, banks))
}

/// True when the largest |occlusion score| over the step's decode calls is
/// below `delta_conf`.
pub fn is_uncertain(candidates: &[ExpansionCandidate], delta_conf: f64) -> bool {
    if candidates.is_empty() {
        return false;
    }
    // Candidates of one call share the score, so the max over candidates
    // equals the max over calls.
    let max_abs = candidates
        .iter()
        .map(|c| c.prediction.occlusion_score.abs())
        .fold(0.0_f64, f64::max);
    max_abs < delta_conf
}

fn ranked(mut candidates: Vec<ExpansionCandidate>) -> Vec<ExpansionCandidate> {
    candidates.sort_by(total_order);
    candidates
}

/// Keeps the `p` best candidates under [`total_order`].
pub fn prune_top_p(candidates: Vec<ExpansionCandidate>, p: usize) -> Vec<Pathway> {
    let mut ranked = ranked(candidates);
    ranked.truncate(p);
    ranked.into_iter().map(ExpansionCandidate::into_node).collect()
}

/// Distinctness key of a predicted IoU: rounded half-to-even at `decimals`
/// places, or the raw value when rounding is disabled.
fn iou_key(iou: f64, decimals: Option<u32>) -> u64 {
    match decimals {
        Some(d) => {
            let scale = 10f64.powi(d as i32);
            ((iou * scale).round_ties_even() / scale).to_bits()
        }
        None => iou.to_bits(),
    }
}

/// Walks candidates best first and keeps one per distinct rounded IoU. If
/// that yields fewer than `p`, the best skipped candidates fill the rest.
/// Output is sorted under [`total_order`].
pub fn select_diverse(candidates: Vec<ExpansionCandidate>, p: usize, decimals: Option<u32>) -> Vec<Pathway> {
    let ranked = ranked(candidates);
    let target = p.min(ranked.len());
    let mut keep = vec![false; ranked.len()];
    let mut seen: Vec<u64> = Vec::with_capacity(target);
    let mut kept = 0;
    for (i, c) in ranked.iter().enumerate() {
        if kept == target {
            break;
        }
        let key = iou_key(c.prediction.predicted_iou, decimals);
        if !seen.contains(&key) {
            seen.push(key);
            keep[i] = true;
            kept += 1;
        }
    }
    for flag in keep.iter_mut() {
        if kept == target {
            break;
        }
        if !*flag {
            *flag = true;
            kept += 1;
        }
    }
    ranked
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then(|| c.into_node()))
        .collect()
}

/// What happened during one step, for logs and plots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTrace {
    pub object_id: u32,
    pub time: u32,
    pub uncertain: bool,
    pub leaf_scores: Vec<f64>,
    /// `(parent beam position, candidate index)` of each kept leaf.
    pub chosen: Vec<(usize, u8)>,
    /// Per parent: `(frame index, weight)` of its memory bank entries.
    pub banks: Vec<Vec<(u32, f64)>>,
}

/// Advances the beam by one frame. On error the input state is untouched.
pub fn step(
    state: &BeamState,
    frame: &FrameRef,
    backend: &dyn DecoderBackend,
    memory: &dyn MemoryBuilder,
    h: &Hyperparams,
    options: SearchOptions,
) -> Result<(BeamState, StepTrace), SearchError> {
    if state.leaves.is_empty() {
        return Err(SearchError::EmptyBeam);
    }
    let time = state.time + 1;
    let concurrent = options.concurrent_decode && backend.supports_concurrent_decode();
    let (candidates, banks) = expand_with_banks(
        &state.leaves,
        state.object_id,
        time,
        frame,
        backend,
        memory,
        h.epsilon,
        concurrent,
    )?;
    let uncertain = is_uncertain(&candidates, h.delta_conf);
    let position_of = |c: &ExpansionCandidate| (c.parent_position, c.candidate_index as u8);
    // Selection consumes the candidates; remember the keys to report them.
    let keys: Vec<((usize, u8), f64, u64)> = candidates
        .iter()
        .map(|c| (position_of(c), c.tentative_score, Arc::as_ptr(&c.parent) as u64))
        .collect();
    let leaves = if uncertain && options.diversify {
        select_diverse(candidates, h.pathways, h.iou_rounding_decimals)
    } else {
        prune_top_p(candidates, h.pathways)
    };
    let chosen = leaves
        .iter()
        .map(|leaf| {
            let parent = leaf.parent.as_ref().map(|p| Arc::as_ptr(p) as u64).unwrap_or(0);
            keys.iter()
                .find(|(pos, score, ptr)| {
                    *ptr == parent && pos.1 == leaf.branch && score.to_bits() == leaf.cumulative_score.to_bits()
                })
                .map(|(pos, _, _)| *pos)
                .unwrap_or((usize::MAX, leaf.branch))
        })
        .collect();
    let trace = StepTrace {
        object_id: state.object_id,
        time,
        uncertain,
        leaf_scores: leaves.iter().map(|l| l.cumulative_score).collect(),
        chosen,
        banks: banks
            .iter()
            .map(|b| b.entries.iter().map(|e| (e.record.frame_index, e.weight)).collect())
            .collect(),
    };
    Ok((
        BeamState {
            object_id: state.object_id,
            time,
            leaves,
        },
        trace,
    ))
}

/// The committed result of a finished search.
#[derive(Debug, Clone)]
pub struct Masklet {
    pub leaf: Pathway,
    pub score: f64,
    /// Root (prompt) first.
    pub records: Vec<Arc<FrameRecord>>,
}

/// Best leaf of the beam and its record chain.
pub fn finalize(state: &BeamState) -> Result<Masklet, SearchError> {
    let leaf = state.leaves.first().ok_or(SearchError::EmptyBeam)?;
    Ok(Masklet {
        leaf: Arc::clone(leaf),
        score: leaf.cumulative_score,
        records: leaf.records(),
    })
}

/// Runs the search from a prompt over `frames` (times `prompt + 1 ..`).
pub fn track(
    object_id: u32,
    prompt: FrameRecord,
    frames: &[FrameRef],
    backend: &dyn DecoderBackend,
    memory: &dyn MemoryBuilder,
    h: &Hyperparams,
    options: SearchOptions,
) -> Result<(Masklet, Vec<StepTrace>), SearchError> {
    h.validate()?;
    let mut state = BeamState::from_prompt(object_id, prompt);
    let mut traces = Vec::with_capacity(frames.len());
    for frame in frames {
        let (next, trace) = step(&state, frame, backend, memory, h, options)?;
        state = next;
        traces.push(trace);
    }
    Ok((finalize(&state)?, traces))
}

/// Pathway order for exhaustive search: higher score first, then the
/// parents' order, then candidate index. Coincides with the beam's ranking
/// when nothing is pruned.
fn pathway_order(a: &PathwayNode, b: &PathwayNode) -> Ordering {
    if std::ptr::eq(a, b) {
        return Ordering::Equal;
    }
    b.cumulative_score
        .total_cmp(&a.cumulative_score)
        .then_with(|| match (&a.parent, &b.parent) {
            (Some(pa), Some(pb)) => pathway_order(pa, pb),
            _ => Ordering::Equal,
        })
        .then(a.branch.cmp(&b.branch))
}

/// Exhaustive search over all `3^T` candidate sequences, rebuilding each
/// sequence's memory bank at every step. Refuses when `3^T > cap`.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_best(
    root: &Pathway,
    object_id: u32,
    frames: &[FrameRef],
    backend: &dyn DecoderBackend,
    memory: &dyn MemoryBuilder,
    h: &Hyperparams,
    cap: u128,
) -> Result<(Pathway, f64), SearchError> {
    let leaves = 3u128.checked_pow(frames.len() as u32).unwrap_or(u128::MAX);
    if leaves > cap {
        return Err(SearchError::CapExceeded { leaves, cap });
    }
    let mut best: Option<Pathway> = None;
    enumerate(root, object_id, frames, backend, memory, h.epsilon, &mut best)?;
    let best = best.unwrap_or_else(|| Arc::clone(root));
    let score = best.cumulative_score;
    Ok((best, score))
}

fn enumerate(
    node: &Pathway,
    object_id: u32,
    frames: &[FrameRef],
    backend: &dyn DecoderBackend,
    memory: &dyn MemoryBuilder,
    epsilon: f64,
    best: &mut Option<Pathway>,
) -> Result<(), SearchError> {
    let Some((frame, rest)) = frames.split_first() else {
        let better = match best {
            None => true,
            Some(current) => pathway_order(node, current) == Ordering::Less,
        };
        if better {
            *best = Some(Arc::clone(node));
        }
        return Ok(());
    };
    let time = node.record.frame_index + 1;
    let children = expand(std::slice::from_ref(node), object_id, time, frame, backend, memory, epsilon)?;
    for child in children {
        let child = child.into_node();
        enumerate(&child, object_id, rest, backend, memory, epsilon, best)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::backend::{DecodeResponse, Script, ScriptedBackend};
    use crate::mask::Mask;
    use crate::memory::MemoryPolicy;

    fn mask() -> Mask {
        Mask::empty(4, 4).unwrap()
    }

    fn root() -> Pathway {
        PathwayNode::root(FrameRecord::prompt(0, mask(), vec![]))
    }

    fn cand(parent: &Pathway, position: usize, k: usize, score: f64, iou: f64, occ: f64) -> ExpansionCandidate {
        ExpansionCandidate {
            parent: Arc::clone(parent),
            parent_position: position,
            candidate_index: k,
            frame_index: 1,
            prediction: CandidatePrediction { mask: mask(), predicted_iou: iou, occlusion_score: occ, payload: vec![] },
            tentative_score: score,
        }
    }

    fn per_time(responses: &[(u32, f64, [f64; 3])]) -> ScriptedBackend {
        let table: BTreeMap<u32, DecodeResponse> = responses
            .iter()
            .map(|&(t, occ, ious)| {
                (t, DecodeResponse::new(occ, ious.map(|iou| (mask(), iou, vec![]))))
            })
            .collect();
        ScriptedBackend::new(Script::PerTime(table))
    }

    #[test]
    fn score_update_values() {
        assert_eq!(score_update(0.0, 1.0, 1e-10).unwrap(), (1.0f64 + 1e-10).ln());
        assert!((score_update(0.0, 1.0, 1e-10).unwrap() - 1e-10).abs() < 1e-15);
        assert!((score_update(-0.5, 0.5, 1e-10).unwrap() - -1.193_147_2).abs() < 1e-6);
        assert!((score_update(0.0, 0.0, 1e-10).unwrap() - -23.025_850_9).abs() < 1e-6);
        assert!(matches!(score_update(0.0, 1.2, 1e-10), Err(SearchError::Domain(_))));
        assert!(matches!(score_update(0.0, -0.1, 1e-10), Err(SearchError::Domain(_))));
    }

    #[test]
    fn expand_yields_three_per_leaf_with_scores() {
        let backend = per_time(&[(1, 3.0, [0.9, 0.5, 0.1])]);
        let policy = MemoryPolicy::object_aware(&Hyperparams::default());
        let cands = expand(&[root()], 0, 1, &FrameRef::index(1), &backend, &policy, 1e-10).unwrap();
        assert_eq!(cands.len(), 3);
        let expected = [-0.1054, -0.6931, -2.3026];
        for (c, e) in cands.iter().zip(expected) {
            assert!((c.tentative_score - e).abs() < 1e-4);
        }
        let leaves = vec![root(), root(), root()];
        let cands = expand(&leaves, 0, 1, &FrameRef::index(1), &backend, &policy, 1e-10).unwrap();
        assert_eq!(cands.len(), 9);
        assert_eq!(cands[4].parent_position, 1);
        assert_eq!(cands[4].candidate_index, 1);
    }

    #[test]
    fn expand_surfaces_out_of_range_iou() {
        let backend = per_time(&[(1, 3.0, [1.2, 0.5, 0.1])]);
        let policy = MemoryPolicy::fifo(6);
        let err = expand(&[root()], 0, 1, &FrameRef::index(1), &backend, &policy, 1e-10).unwrap_err();
        assert!(matches!(err, SearchError::Domain(v) if v == 1.2));
    }

    #[test]
    fn uncertainty_uses_max_abs_occlusion() {
        let r = root();
        let c = |occ| cand(&r, 0, 0, 0.0, 0.5, occ);
        assert!(is_uncertain(&[c(0.5), c(-1.0), c(1.9)], 2.0));
        assert!(!is_uncertain(&[c(0.5), c(-3.0)], 2.0));
        assert!(!is_uncertain(&[c(0.0)], 0.0));
        assert!(!is_uncertain(&[], 2.0));
    }

    #[test]
    fn prune_keeps_best_scores() {
        let r = root();
        let scores = [-1.0, -2.0, -3.0, -1.5, -0.2, -4.0];
        let cands: Vec<_> = scores.iter().enumerate().map(|(i, &s)| cand(&r, i / 3, i % 3, s, 0.5, 3.0)).collect();
        let kept = prune_top_p(cands, 3);
        let got: Vec<f64> = kept.iter().map(|n| n.cumulative_score).collect();
        assert_eq!(got, vec![-0.2, -1.0, -1.5]);
    }

    #[test]
    fn prune_breaks_ties_by_parent_position() {
        let (a, b) = (root(), root());
        let kept = prune_top_p(vec![cand(&b, 1, 0, -1.0, 0.5, 3.0), cand(&a, 0, 2, -1.0, 0.5, 3.0)], 1);
        assert!(Arc::ptr_eq(kept[0].parent.as_ref().unwrap(), &a));
        assert_eq!(kept[0].branch, 2);
    }

    #[test]
    fn prune_clamps_to_available() {
        let r = root();
        let cands: Vec<_> = (0..3).map(|k| cand(&r, 0, k, -(k as f64), 0.5, 3.0)).collect();
        assert_eq!(prune_top_p(cands, 4).len(), 3);
    }

    #[test]
    fn diverse_skips_duplicate_rounded_iou() {
        let r = root();
        let cands = vec![
            cand(&r, 0, 0, -0.1, 0.874, 0.0),
            cand(&r, 0, 1, -0.2, 0.871, 0.0),
            cand(&r, 0, 2, -0.3, 0.55, 0.0),
            cand(&r, 1, 0, -0.4, 0.23, 0.0),
        ];
        let kept = select_diverse(cands, 3, Some(2));
        let scores: Vec<f64> = kept.iter().map(|n| n.cumulative_score).collect();
        assert_eq!(scores, vec![-0.1, -0.3, -0.4]);
    }

    #[test]
    fn diverse_fills_by_score_when_short() {
        let r = root();
        let cands: Vec<_> = (0..5).map(|i| cand(&r, i / 3, i % 3, -(i as f64), 0.8, 0.0)).collect();
        let kept = select_diverse(cands, 3, Some(2));
        let scores: Vec<f64> = kept.iter().map(|n| n.cumulative_score).collect();
        assert_eq!(scores, vec![0.0, -1.0, -2.0]);
    }

    #[test]
    fn rounding_granularity() {
        assert_eq!(iou_key(0.4, Some(0)), 0.0f64.to_bits());
        assert_eq!(iou_key(0.6, Some(0)), 1.0f64.to_bits());
        assert_eq!(iou_key(0.4, Some(0)), iou_key(0.44, Some(0)));
        assert_ne!(iou_key(0.4, Some(1)), iou_key(0.44, Some(2)));
        // Half-to-even at the rounding position.
        assert_eq!(iou_key(0.5, Some(0)), 0.0f64.to_bits());
        assert_eq!(iou_key(0.25, Some(1)), 0.2f64.to_bits());
        assert_ne!(iou_key(0.871, None), iou_key(0.874, None));
    }

    #[test]
    fn first_step_grows_beam_from_single_root() {
        let backend = per_time(&[(1, 3.0, [0.9, 0.5, 0.1]), (2, 3.0, [0.8, 0.7, 0.6])]);
        let h = Hyperparams::default();
        let policy = MemoryPolicy::object_aware(&h);
        let state = BeamState::from_prompt(0, FrameRecord::prompt(0, mask(), vec![]));
        let (s1, trace) = step(&state, &FrameRef::index(1), &backend, &policy, &h, SearchOptions::default()).unwrap();
        assert_eq!(s1.leaves.len(), 3);
        assert_eq!(s1.time, 1);
        assert!(!trace.uncertain);
        let got: Vec<f64> = s1.leaves.iter().map(|l| l.cumulative_score).collect();
        let want: Vec<f64> = [0.9f64, 0.5, 0.1].iter().map(|x| (x + 1e-10).ln()).collect();
        assert_eq!(got, want);
        assert_eq!(trace.chosen, vec![(0, 0), (0, 1), (0, 2)]);
        let (s2, _) = step(&s1, &FrameRef::index(2), &backend, &policy, &h, SearchOptions::default()).unwrap();
        assert_eq!(s2.leaves.len(), 3);
        // All three survivors descend from the best first-step leaf.
        for leaf in &s2.leaves {
            assert!(Arc::ptr_eq(leaf.parent.as_ref().unwrap(), &s1.leaves[0]));
        }
    }

    #[test]
    fn failed_step_reports_leaf() {
        let backend = per_time(&[(1, 3.0, [0.9, 0.5, 0.1])]);
        let h = Hyperparams::default();
        let policy = MemoryPolicy::object_aware(&h);
        let state = BeamState::from_prompt(0, FrameRecord::prompt(0, mask(), vec![]));
        let (s1, _) = step(&state, &FrameRef::index(1), &backend, &policy, &h, SearchOptions::default()).unwrap();
        let err = step(&s1, &FrameRef::index(2), &backend, &policy, &h, SearchOptions::default()).unwrap_err();
        assert!(matches!(err, SearchError::Backend { leaf: 0, frame_index: 2, .. }));
        assert_eq!(s1.leaves.len(), 3);
    }

    #[test]
    fn finalize_picks_top_leaf() {
        let r = root();
        let state = BeamState {
            object_id: 0,
            time: 1,
            leaves: prune_top_p(vec![cand(&r, 0, 0, -0.9, 0.5, 3.0), cand(&r, 0, 1, -0.2, 0.5, 3.0)], 2),
        };
        let m = finalize(&state).unwrap();
        assert_eq!(m.score, -0.2);
        assert_eq!(m.records.len(), 2);
        assert!(m.records[0].is_prompt);
        let empty = BeamState { object_id: 0, time: 0, leaves: vec![] };
        assert!(matches!(finalize(&empty), Err(SearchError::EmptyBeam)));
    }

    #[test]
    fn brute_force_with_no_frames_returns_root() {
        let r = root();
        let backend = ScriptedBackend::seeded(1, None, 3.0);
        let h = Hyperparams::default();
        let policy = MemoryPolicy::object_aware(&h);
        let (best, score) = brute_force_best(&r, 0, &[], &backend, &policy, &h, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(Arc::ptr_eq(&best, &r));
        assert_eq!(score, 0.0);
    }

    #[test]
    fn brute_force_refuses_above_cap() {
        let r = root();
        let backend = ScriptedBackend::seeded(1, None, 3.0);
        let h = Hyperparams::default();
        let policy = MemoryPolicy::object_aware(&h);
        let frames: Vec<_> = (1..=11).map(FrameRef::index).collect();
        let err = brute_force_best(&r, 0, &frames, &backend, &policy, &h, DEFAULT_ENUMERATION_CAP).unwrap_err();
        assert!(matches!(err, SearchError::CapExceeded { .. }));
    }
}
