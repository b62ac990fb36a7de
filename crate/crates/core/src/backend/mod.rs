//! Decoder backend contract and transports.
//!
//! The engine never looks inside a frame or a memory payload: it hands the
//! backend a [`DecodeRequest`] (frame id plus the pathway's weighted memory
//! bank) and receives exactly three [`CandidatePrediction`]s that share one
//! occlusion score.

mod external;
pub mod protocol;
mod replay;
mod scripted;

use sha2::{Digest, Sha256};

pub use external::{ExternalBackend, DEFAULT_TIMEOUT};
pub use replay::{RecordingBackend, ReplayBackend, Trace};
pub use scripted::{echo_candidates, Script, ScriptedBackend, ECHO_IOUS, ECHO_OCCLUSION};

use crate::error::BackendError;
use crate::mask::Mask;
use crate::memory::MemoryBankView;
use crate::types::CandidatePrediction;

/// Candidates produced per decode call.
pub const CANDIDATES_PER_CALL: usize = 3;

/// Opaque frame identifier; the backend owns the pixels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameRef(pub String);

impl FrameRef {
    /// Conventional id for frame `t` of a sequence.
    pub fn index(t: u32) -> Self {
        Self(format!("{t:06}"))
    }

    /// Parses ids produced by [`FrameRef::index`].
    pub fn as_index(&self) -> Option<u32> {
        self.0.parse().ok()
    }
}

#[derive(Debug, Clone)]
pub struct DecodeRequest {
    pub object_id: u32,
    pub time: u32,
    pub frame: FrameRef,
    pub bank: MemoryBankView,
}

impl DecodeRequest {
    /// Canvas size, taken from the prompt (first) entry.
    pub fn canvas(&self) -> Option<(u32, u32)> {
        self.bank
            .entries
            .first()
            .map(|e| (e.record.mask.width(), e.record.mask.height()))
    }

    /// Replay key: object, time, and each entry's frame index, weight
    /// quantized to 1e-4, and mask RLE.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"treemem-request-v1\n");
        h.update(self.object_id.to_le_bytes());
        h.update(self.time.to_le_bytes());
        h.update((self.bank.entries.len() as u64).to_le_bytes());
        for e in &self.bank.entries {
            h.update(e.record.frame_index.to_le_bytes());
            let w = (e.weight * 1e4).round() as i64;
            h.update(w.to_le_bytes());
            let rle = e.record.mask.to_rle();
            h.update((rle.len() as u64).to_le_bytes());
            h.update(rle.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResponse {
    pub candidates: [CandidatePrediction; CANDIDATES_PER_CALL],
}

impl DecodeResponse {
    /// Builds a response whose candidates share `occlusion_score`.
    pub fn new(occlusion_score: f64, items: [(Mask, f64, Vec<u8>); CANDIDATES_PER_CALL]) -> Self {
        Self {
            candidates: items.map(|(mask, predicted_iou, payload)| CandidatePrediction {
                mask,
                predicted_iou,
                occlusion_score,
                payload,
            }),
        }
    }

    pub fn occlusion_score(&self) -> f64 {
        self.candidates[0].occlusion_score
    }

    /// Checks the response contract: IoUs in [0, 1], one finite occlusion
    /// score shared by all candidates, masks on the expected canvas.
    pub fn validate(&self, canvas: Option<(u32, u32)>) -> Result<(), BackendError> {
        let occ = self.candidates[0].occlusion_score;
        if !occ.is_finite() {
            return Err(BackendError::Protocol {
                field: "occ".into(),
                reason: format!("not finite: {occ}"),
            });
        }
        for (k, c) in self.candidates.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.predicted_iou) {
                return Err(BackendError::Protocol {
                    field: format!("items[{k}].iou"),
                    reason: format!("{} outside [0, 1]", c.predicted_iou),
                });
            }
            if c.occlusion_score.to_bits() != occ.to_bits() {
                return Err(BackendError::Protocol {
                    field: format!("items[{k}].occ"),
                    reason: "occlusion score differs within one call".into(),
                });
            }
            if let Some((w, h)) = canvas {
                if c.mask.width() != w || c.mask.height() != h {
                    return Err(BackendError::Protocol {
                        field: format!("items[{k}].mask_rle"),
                        reason: format!(
                            "mask is {}x{}, canvas is {w}x{h}",
                            c.mask.width(),
                            c.mask.height()
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A mask decoder conditioned on a memory bank.
pub trait DecoderBackend: Send + Sync {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError>;

    /// Whether independent decode calls may be issued from several threads.
    fn supports_concurrent_decode(&self) -> bool {
        false
    }
}

impl<B: DecoderBackend + ?Sized> DecoderBackend for Box<B> {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        (**self).decode(request)
    }

    fn supports_concurrent_decode(&self) -> bool {
        (**self).supports_concurrent_decode()
    }
}

impl<B: DecoderBackend + ?Sized> DecoderBackend for &B {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        (**self).decode(request)
    }

    fn supports_concurrent_decode(&self) -> bool {
        (**self).supports_concurrent_decode()
    }
}
