//! NDJSON wire protocol (version 1) between the engine and an external
//! decoder process.
//!
//! ```text
//! engine  -> {"type":"hello","version":1}
//! adapter -> {"type":"hello","version":1,"concurrent":false}
//! engine  -> {"type":"decode","object_id":..,"time":..,"frame":"..","width":..,"height":..,"bank":[..]}
//! adapter -> {"type":"candidates","occ":..,"items":[{"iou":..,"mask_rle":"..","payload_b64":".."} x3]}
//! engine  -> {"type":"bye"}
//! ```
//!
//! Floats are written in shortest round-trip decimal form.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{DecodeRequest, DecodeResponse, CANDIDATES_PER_CALL};
use crate::error::BackendError;
use crate::mask::Mask;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EngineMessage {
    Hello { version: u32 },
    Decode(WireDecode),
    Bye,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDecode {
    pub object_id: u32,
    pub time: u32,
    pub frame: String,
    pub width: u32,
    pub height: u32,
    pub bank: Vec<WireBankEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireBankEntry {
    pub frame_index: u32,
    pub weight: f64,
    pub iou: f64,
    pub occ: f64,
    pub mask_rle: String,
    pub payload_b64: String,
    pub is_prompt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AdapterMessage {
    Hello {
        version: u64,
        #[serde(default)]
        concurrent: bool,
    },
    Candidates(WireCandidates),
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidates {
    pub occ: f64,
    pub items: Vec<WireCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub iou: f64,
    pub mask_rle: String,
    #[serde(default)]
    pub payload_b64: String,
}

impl WireDecode {
    pub fn from_request(req: &DecodeRequest) -> Result<Self, BackendError> {
        let (width, height) = req
            .canvas()
            .ok_or_else(|| BackendError::Schema("request bank is empty".into()))?;
        Ok(Self {
            object_id: req.object_id,
            time: req.time,
            frame: req.frame.0.clone(),
            width,
            height,
            bank: req
                .bank
                .entries
                .iter()
                .map(|e| WireBankEntry {
                    frame_index: e.record.frame_index,
                    weight: e.weight,
                    iou: e.record.predicted_iou,
                    occ: e.record.occlusion_score,
                    mask_rle: e.record.mask.to_rle(),
                    payload_b64: B64.encode(&e.record.payload),
                    is_prompt: e.record.is_prompt,
                })
                .collect(),
        })
    }
}

impl WireBankEntry {
    pub fn mask(&self, width: u32, height: u32) -> Result<Mask, BackendError> {
        Ok(Mask::from_rle(width, height, &self.mask_rle)?)
    }

    pub fn payload(&self) -> Result<Vec<u8>, BackendError> {
        decode_payload(&self.payload_b64, "bank.payload_b64")
    }
}

fn decode_payload(text: &str, field: &str) -> Result<Vec<u8>, BackendError> {
    B64.decode(text).map_err(|e| BackendError::Protocol {
        field: field.into(),
        reason: e.to_string(),
    })
}

impl WireCandidates {
    pub fn from_response(resp: &DecodeResponse) -> Self {
        Self {
            occ: resp.occlusion_score(),
            items: resp
                .candidates
                .iter()
                .map(|c| WireCandidate {
                    iou: c.predicted_iou,
                    mask_rle: c.mask.to_rle(),
                    payload_b64: B64.encode(&c.payload),
                })
                .collect(),
        }
    }

    /// Decodes masks on a `width` x `height` canvas. Range checks are left to
    /// [`DecodeResponse::validate`].
    pub fn into_response(self, width: u32, height: u32) -> Result<DecodeResponse, BackendError> {
        if self.items.len() != CANDIDATES_PER_CALL {
            return Err(BackendError::Schema(format!(
                "expected {CANDIDATES_PER_CALL} candidates, got {}",
                self.items.len()
            )));
        }
        let mut parsed = Vec::with_capacity(CANDIDATES_PER_CALL);
        for (k, item) in self.items.into_iter().enumerate() {
            let mask = Mask::from_rle(width, height, &item.mask_rle).map_err(|e| {
                BackendError::Protocol {
                    field: format!("items[{k}].mask_rle"),
                    reason: e.to_string(),
                }
            })?;
            let payload = decode_payload(&item.payload_b64, &format!("items[{k}].payload_b64"))?;
            parsed.push((mask, item.iou, payload));
        }
        let items: [(Mask, f64, Vec<u8>); CANDIDATES_PER_CALL] = parsed
            .try_into()
            .map_err(|_| BackendError::Schema("candidate count".into()))?;
        Ok(DecodeResponse::new(self.occ, items))
    }
}
