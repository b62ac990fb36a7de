//! Domain types shared by the search, memory and backend modules.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mask::Mask;

/// Occlusion score carried by prompt records: the largest finite value, so
/// the prompt always sorts last in ascending occlusion order.
pub const PROMPT_OCCLUSION_SCORE: f64 = f64::MAX;

/// One mask proposal from a single decode call.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePrediction {
    pub mask: Mask,
    pub predicted_iou: f64,
    /// Shared by all candidates of the same decode call.
    pub occlusion_score: f64,
    /// Backend-private memory features, stored if this candidate is committed.
    pub payload: Vec<u8>,
}

/// One committed step on a pathway.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: u32,
    pub mask: Mask,
    pub predicted_iou: f64,
    pub occlusion_score: f64,
    pub payload: Vec<u8>,
    pub is_prompt: bool,
}

impl FrameRecord {
    /// Ground-truth prompt record: IoU 1 and the maximal occlusion score.
    pub fn prompt(frame_index: u32, mask: Mask, payload: Vec<u8>) -> Self {
        Self {
            frame_index,
            mask,
            predicted_iou: 1.0,
            occlusion_score: PROMPT_OCCLUSION_SCORE,
            payload,
            is_prompt: true,
        }
    }

    pub fn committed(frame_index: u32, candidate: CandidatePrediction) -> Self {
        Self {
            frame_index,
            mask: candidate.mask,
            predicted_iou: candidate.predicted_iou,
            occlusion_score: candidate.occlusion_score,
            payload: candidate.payload,
            is_prompt: false,
        }
    }
}

/// Immutable tree node. A pathway is the chain from a leaf back to the root.
#[derive(Debug)]
pub struct PathwayNode {
    pub record: Arc<FrameRecord>,
    pub parent: Option<Arc<PathwayNode>>,
    pub cumulative_score: f64,
    /// Candidate index (0..3) this node was expanded from; 0 for the root.
    pub branch: u8,
    /// Number of edges from the root.
    pub depth: usize,
}

pub type Pathway = Arc<PathwayNode>;

impl PathwayNode {
    pub fn root(record: FrameRecord) -> Pathway {
        Arc::new(Self {
            record: Arc::new(record),
            parent: None,
            cumulative_score: 0.0,
            branch: 0,
            depth: 0,
        })
    }

    /// Child of `parent` holding `record`, with the given cumulative score.
    pub fn child(parent: &Pathway, record: FrameRecord, score: f64, branch: u8) -> Pathway {
        Arc::new(Self {
            record: Arc::new(record),
            parent: Some(Arc::clone(parent)),
            cumulative_score: score,
            branch,
            depth: parent.depth + 1,
        })
    }

    /// Nodes from this one back to the root.
    pub fn ancestry(self: &Arc<Self>) -> impl Iterator<Item = &PathwayNode> + '_ {
        let mut cur: Option<&PathwayNode> = Some(self.as_ref());
        std::iter::from_fn(move || {
            let node = cur?;
            cur = node.parent.as_deref();
            Some(node)
        })
    }

    /// Records root first.
    pub fn records(self: &Arc<Self>) -> Vec<Arc<FrameRecord>> {
        let mut out: Vec<_> = self.ancestry().map(|n| Arc::clone(&n.record)).collect();
        out.reverse();
        out
    }

    /// Candidate indices from the root's first child down to this node.
    pub fn branch_path(self: &Arc<Self>) -> Vec<u8> {
        let mut out: Vec<u8> = self
            .ancestry()
            .filter(|n| n.parent.is_some())
            .map(|n| n.branch)
            .collect();
        out.reverse();
        out
    }
}

impl Drop for PathwayNode {
    // Unlink long chains iteratively so dropping a deep tree cannot overflow the stack.
    fn drop(&mut self) {
        let mut next = self.parent.take();
        while let Some(node) = next {
            match Arc::try_unwrap(node) {
                Ok(mut inner) => next = inner.parent.take(),
                Err(_) => break,
            }
        }
    }
}

/// The live leaves of one object's tree at a given time.
#[derive(Debug, Clone)]
pub struct BeamState {
    pub object_id: u32,
    pub time: u32,
    /// Sorted best first.
    pub leaves: Vec<Pathway>,
}

impl BeamState {
    /// Beam holding only the prompt root.
    pub fn from_prompt(object_id: u32, prompt: FrameRecord) -> Self {
        let time = prompt.frame_index;
        Self {
            object_id,
            time,
            leaves: vec![PathwayNode::root(prompt)],
        }
    }
}

/// Checks the structural invariants of the pathway ending at `leaf`: the
/// score recurrence (bit-exact), strictly increasing frame indices, and a
/// single prompt record at the root.
pub fn validate_pathway(leaf: &Pathway, epsilon: f64) -> Result<(), String> {
    for node in leaf.ancestry() {
        match &node.parent {
            None => {
                if !node.record.is_prompt {
                    return Err("root record is not the prompt".into());
                }
                if node.cumulative_score != 0.0 {
                    return Err(format!("root score {} != 0", node.cumulative_score));
                }
            }
            Some(parent) => {
                if node.record.is_prompt {
                    return Err(format!("non-root prompt at frame {}", node.record.frame_index));
                }
                if node.record.frame_index <= parent.record.frame_index {
                    return Err(format!(
                        "frame index {} does not follow {}",
                        node.record.frame_index, parent.record.frame_index
                    ));
                }
                let expected =
                    parent.cumulative_score + (node.record.predicted_iou + epsilon).ln();
                if node.cumulative_score != expected {
                    return Err(format!(
                        "score recurrence broken at frame {}: {} != {}",
                        node.record.frame_index, node.cumulative_score, expected
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Serializable summary of one committed frame, used in outputs and traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommittedFrame {
    pub frame_index: u32,
    pub predicted_iou: f64,
    pub occlusion_score: f64,
    pub mask_rle: String,
}

impl From<&FrameRecord> for CommittedFrame {
    fn from(r: &FrameRecord) -> Self {
        Self {
            frame_index: r.frame_index,
            predicted_iou: r.predicted_iou,
            occlusion_score: r.occlusion_score,
            mask_rle: r.mask.to_rle(),
        }
    }
}
