use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::protocol::WireCandidates;
use super::{DecodeRequest, DecodeResponse, DecoderBackend};
use crate::error::BackendError;
use crate::mask::Mask;

/// Predicted IoUs of the echo candidates: identity, eroded, dilated.
pub const ECHO_IOUS: [f64; 3] = [0.9, 0.5, 0.7];
/// Occlusion score reported by echo decoders.
pub const ECHO_OCCLUSION: f64 = 3.0;

/// Echo decoding: the bank's most recent mask as-is, eroded by one
/// 4-neighbourhood step, and dilated by a 3x3 square.
pub fn echo_candidates(time: u32, newest: &Mask) -> DecodeResponse {
    let payload = |k: usize| format!("t{time}k{k}").into_bytes();
    DecodeResponse::new(
        ECHO_OCCLUSION,
        [
            (newest.clone(), ECHO_IOUS[0], payload(0)),
            (newest.erode_cross(1), ECHO_IOUS[1], payload(1)),
            (newest.dilate_square(1), ECHO_IOUS[2], payload(2)),
        ],
    )
}

/// Where a scripted backend's answers come from.
#[derive(Debug, Clone)]
pub enum Script {
    /// One fixed response per time step, regardless of memory.
    PerTime(BTreeMap<u32, DecodeResponse>),
    /// Responses keyed by request digest.
    Keyed(HashMap<String, DecodeResponse>),
    /// Pseudo-random responses derived from `(seed, request digest)`, so the
    /// answer depends on the whole memory bank.
    Seeded {
        seed: u64,
        /// Quantize IoUs to multiples of `1/levels`; produces score ties.
        iou_levels: Option<u32>,
        /// Occlusion scores are uniform in `[-occ_range, occ_range]`.
        occ_range: f64,
    },
    /// See [`echo_candidates`].
    Echo,
}

/// In-process decoder driven by a [`Script`].
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    script: Script,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        Self { script }
    }

    pub fn seeded(seed: u64, iou_levels: Option<u32>, occ_range: f64) -> Self {
        Self::new(Script::Seeded { seed, iou_levels, occ_range })
    }

    pub fn echo() -> Self {
        Self::new(Script::Echo)
    }

    /// Loads a JSON fixture (see [`ScriptFile`]).
    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)?;
        let file: ScriptFile =
            serde_json::from_str(&text).map_err(|e| BackendError::Schema(e.to_string()))?;
        file.into_backend()
    }
}

fn seeded_response(seed: u64, iou_levels: Option<u32>, occ_range: f64, req: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
    let (w, h) = req
        .canvas()
        .ok_or_else(|| BackendError::Decode("empty memory bank".into()))?;
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(req.digest().as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);

    let occ = if occ_range > 0.0 {
        rng.random_range(-occ_range..=occ_range)
    } else {
        0.0
    };
    let item = |rng: &mut ChaCha8Rng| -> Result<(Mask, f64, Vec<u8>), BackendError> {
        let x0 = rng.random_range(0..w);
        let x1 = rng.random_range(x0..w);
        let y0 = rng.random_range(0..h);
        let y1 = rng.random_range(y0..h);
        let mask = Mask::from_fn(w, h, |x, y| (x0..=x1).contains(&x) && (y0..=y1).contains(&y))?;
        let iou = match iou_levels {
            Some(levels) if levels > 0 => rng.random_range(0..=levels) as f64 / levels as f64,
            _ => rng.random::<f64>(),
        };
        let payload = rng.random::<[u8; 4]>().to_vec();
        Ok((mask, iou, payload))
    };
    let items = [item(&mut rng)?, item(&mut rng)?, item(&mut rng)?];
    Ok(DecodeResponse::new(occ, items))
}

impl DecoderBackend for ScriptedBackend {
    fn decode(&self, req: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        match &self.script {
            Script::PerTime(table) => table
                .get(&req.time)
                .cloned()
                .ok_or_else(|| BackendError::Decode(format!("no scripted response for time {}", req.time))),
            Script::Keyed(table) => {
                let digest = req.digest();
                table.get(&digest).cloned().ok_or(BackendError::ReplayMiss(digest))
            }
            Script::Seeded { seed, iou_levels, occ_range } => {
                seeded_response(*seed, *iou_levels, *occ_range, req)
            }
            Script::Echo => {
                let newest = req
                    .bank
                    .entries
                    .last()
                    .ok_or_else(|| BackendError::Decode("empty memory bank".into()))?;
                Ok(echo_candidates(req.time, &newest.record.mask))
            }
        }
    }

    fn supports_concurrent_decode(&self) -> bool {
        true
    }
}

/// JSON fixture format for scripted backends.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScriptFile {
    PerTime {
        width: u32,
        height: u32,
        /// Keyed by time step (decimal string).
        responses: BTreeMap<String, WireCandidates>,
    },
    Seeded {
        seed: u64,
        #[serde(default)]
        iou_levels: Option<u32>,
        #[serde(default = "default_occ_range")]
        occ_range: f64,
    },
    Echo,
}

fn default_occ_range() -> f64 {
    3.0
}

impl ScriptFile {
    pub fn into_backend(self) -> Result<ScriptedBackend, BackendError> {
        let script = match self {
            ScriptFile::PerTime { width, height, responses } => {
                let mut table = BTreeMap::new();
                for (t, cands) in responses {
                    let time: u32 = t
                        .parse()
                        .map_err(|_| BackendError::Schema(format!("bad time key {t:?}")))?;
                    let resp = cands.into_response(width, height)?;
                    resp.validate(Some((width, height)))?;
                    table.insert(time, resp);
                }
                Script::PerTime(table)
            }
            ScriptFile::Seeded { seed, iou_levels, occ_range } => Script::Seeded { seed, iou_levels, occ_range },
            ScriptFile::Echo => Script::Echo,
        };
        Ok(ScriptedBackend::new(script))
    }
}
