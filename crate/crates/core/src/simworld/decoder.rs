//! Mock decoder over a [`SimWorld`].
//!
//! The decoder's belief about which object it is tracking comes from its
//! memory: the target fidelity
//!
//! ```text
//! f = clamp(sum of weights of entries whose mask has IoU >= 0.5 with the
//!           target's ground truth at that entry's frame / sum of weights, 0, 1)
//! ```
//!
//! Every candidate mask `m` is scored as
//!
//! ```text
//! g    = f^POISON_EXPONENT
//! q(m) = g * Q_T(m) + (1 - g) * Q_D(m) + noise
//! Q_T(m) = IoU(m, target)                                 target visible
//!        = ABSENT_IOU * [m empty] + s * LURE * IoU(m, D)  target hidden
//! Q_D(m) = s * LURE * IoU(m, D)
//! ```
//!
//! where `D` is the nearest visible distractor and `s` its similarity. With
//! a clean memory and a visible target the score is the true IoU. While the
//! target is hidden a look-alike scores slightly above "absent", which is
//! what lures a greedy tracker; once distractor masks fill the memory, `f`
//! collapses and the target itself scores poorly.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::backend::{DecodeRequest, DecodeResponse, DecoderBackend};
use crate::error::BackendError;
use crate::mask::Mask;
use crate::memory::MemoryBankView;

use super::rng::{stream, stream_for, Channel};
use super::world::SimWorld;

/// Score of an empty mask while the target is hidden.
pub const ABSENT_IOU: f64 = 0.6;
/// Scale of a distractor's score relative to its similarity.
pub const LURE: f64 = 0.7;
/// Minimum IoU with the target's ground truth for a memory entry to count as
/// target-consistent.
pub const CONSISTENT_IOU: f64 = 0.5;
/// Sharpness of the poisoning: a few distractor frames in memory already
/// cost the target most of its score.
pub const POISON_EXPONENT: i32 = 2;
/// Erosion steps of the degraded candidate.
pub const HEAVY_EROSION: u32 = 3;

/// Weighted fraction of target-consistent bank entries.
pub fn target_fidelity(world: &SimWorld, object: usize, bank: &MemoryBankView) -> f64 {
    let (mut hit, mut total) = (0.0, 0.0);
    for e in &bank.entries {
        total += e.weight;
        let frame = e.record.frame_index;
        if frame >= world.num_frames() {
            continue;
        }
        let consistent = e
            .record
            .mask
            .iou(world.mask(object, frame))
            .is_ok_and(|iou| iou >= CONSISTENT_IOU);
        if consistent {
            hit += e.weight;
        }
    }
    if total > 0.0 {
        (hit / total).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Noise-free score of `m` under fidelity `f` (see the module docs).
pub fn perceived_iou(world: &SimWorld, object: usize, t: u32, f: f64, m: &Mask) -> f64 {
    let distractor = world.nearest_distractor(object, t).map(|d| {
        let s = world.spec.objects[d].distractor_similarity;
        s * LURE * m.iou(world.mask(d, t)).unwrap_or(0.0)
    });
    let q_d = distractor.unwrap_or(0.0);
    let q_t = if world.visible(object, t) {
        m.iou(world.mask(object, t)).unwrap_or(0.0)
    } else {
        let absent = if m.is_empty() { ABSENT_IOU } else { 0.0 };
        absent + q_d
    };
    let g = f.powi(POISON_EXPONENT);
    g * q_t + (1.0 - g) * q_d
}

fn jitter(mask: Mask, p: f64, rng: &mut impl Rng) -> Mask {
    if p <= 0.0 || rng.random::<f64>() >= p {
        return mask;
    }
    if rng.random::<bool>() {
        mask.erode_cross(1)
    } else {
        mask.dilate_square(1)
    }
}

/// One decode against the simulated world.
pub fn mock_decode(world: &SimWorld, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
    let object = request.object_id as usize;
    let t = request.time;
    if object >= world.spec.objects.len() {
        return Err(BackendError::Decode(format!("unknown object {object}")));
    }
    if t >= world.num_frames() {
        return Err(BackendError::Decode(format!("frame {t} beyond scenario end")));
    }
    let spec = &world.spec;
    let noise = spec.noise;
    let f = target_fidelity(world, object, &request.bank);
    let distractor = world.nearest_distractor(object, t);

    let target_mask = world.mask(object, t).clone();
    let base = [
        target_mask.clone(),
        match distractor {
            Some(d) => world.mask(d, t).clone(),
            None => target_mask.dilate_square(2),
        },
        target_mask.erode_cross(HEAVY_EROSION),
    ];

    let calibration = Normal::new(0.0, noise.iou_calibration_noise).expect("non-negative stddev");
    let memory = Normal::new(0.0, noise.memory_sensitivity).expect("non-negative stddev");
    let mut bank_rng = stream_for(spec.seed, format!("{object}:{t}:{}", request.digest()).as_bytes());
    let items: Vec<_> = base
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let mut rng = stream(spec.seed, object as u32, t, Channel::CandidateBase as u32 + k as u32);
            let m = jitter(m, noise.mask_jitter, &mut rng);
            let q = perceived_iou(world, object, t, f, &m)
                + calibration.sample(&mut rng)
                + memory.sample(&mut bank_rng);
            (m, q.clamp(0.0, 1.0), format!("sim:{object}:{t}:{k}").into_bytes())
        })
        .collect();
    let items: [_; 3] = items.try_into().expect("three candidates");

    let occ = if spec.objects[object].hidden_at(t) {
        let band = noise.uncertain_band;
        if band > 0.0 {
            stream(spec.seed, object as u32, t, Channel::Occlusion as u32).random_range(-band..=band)
        } else {
            0.0
        }
    } else {
        // The belief follows the memory: target if fidelity holds, else the
        // nearest visible look-alike, if any.
        let belief_visible = f >= 0.5 || distractor.is_some();
        if belief_visible {
            noise.occ_margin
        } else {
            -noise.occ_margin
        }
    };
    Ok(DecodeResponse::new(occ, items))
}

/// [`DecoderBackend`] over a shared [`SimWorld`].
#[derive(Debug, Clone)]
pub struct SimDecoder {
    world: Arc<SimWorld>,
}

impl SimDecoder {
    pub fn new(world: Arc<SimWorld>) -> Self {
        Self { world }
    }

    pub fn world(&self) -> &SimWorld {
        &self.world
    }
}

impl DecoderBackend for SimDecoder {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        mock_decode(&self.world, request)
    }

    fn supports_concurrent_decode(&self) -> bool {
        true
    }
}
