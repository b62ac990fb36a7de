//! Deterministic scenario families.
//!
//! * `clean`: a lone target, no occlusion, no mask jitter.
//! * `occlusion`: 200 frames; the target is hidden once, starting around
//!   frame 60-70, while a look-alike sits beside it; from mid-video the
//!   look-alike drifts away.
//! * `distractor`: no occlusion; a look-alike passes close to the target.
//! * `long`: like `occlusion` over 300 frames with a later window.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

use super::rng::{stream, Channel};
use super::scenario::{NoiseSpec, ObjectSpec, ScenarioSpec, Shape, Waypoint};

pub const FAMILIES: [&str; 4] = ["clean", "occlusion", "distractor", "long"];

const WIDTH: u32 = 96;
const HEIGHT: u32 = 72;

fn family_index(family: &str) -> Result<u32, SimError> {
    FAMILIES
        .iter()
        .position(|f| *f == family)
        .map(|i| i as u32)
        .ok_or_else(|| SimError::UnknownFamily(family.to_string()))
}

/// `count` specs of `family`, fully determined by `base_seed`.
pub fn generate_scenario_suite(family: &str, count: usize, base_seed: u64) -> Result<Vec<ScenarioSpec>, SimError> {
    let fam = family_index(family)?;
    if count == 0 {
        return Err(SimError::InvalidSpec("suite count must be at least 1".into()));
    }
    (0..count)
        .map(|i| {
            let mut rng = stream(base_seed, i as u32, 0, Channel::Suite as u32 + fam);
            let seed = rng.random::<u64>();
            let mut spec = match family {
                "clean" => clean(&mut rng, seed),
                "occlusion" => occluded(&mut rng, seed, 200, 60..=70),
                "distractor" => passing(&mut rng, seed),
                _ => occluded(&mut rng, seed, 300, 110..=130),
            };
            spec.name = format!("{family}-{i:04}");
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

/// A rect or disc of comparable footprint, and its half extent.
fn shape(rng: &mut ChaCha8Rng) -> (Shape, f64) {
    if rng.random::<bool>() {
        let w = rng.random_range(14..=18);
        let h = rng.random_range(14..=18);
        (Shape::Rect { w, h }, f64::from(w.max(h)) / 2.0)
    } else {
        let r = rng.random_range(7..=9);
        (Shape::Disc { radius: r }, f64::from(r))
    }
}

fn wp(t: u32, x: f64, y: f64) -> Waypoint {
    Waypoint { t, x, y }
}

fn clean(rng: &mut ChaCha8Rng, seed: u64) -> ScenarioSpec {
    let (s, _) = shape(rng);
    let y = rng.random_range(24.0..48.0);
    let num_frames = 60;
    ScenarioSpec {
        name: String::new(),
        seed,
        width: WIDTH,
        height: HEIGHT,
        num_frames,
        objects: vec![ObjectSpec {
            shape: s,
            trajectory: vec![wp(0, rng.random_range(20.0..30.0), y), wp(num_frames - 1, rng.random_range(60.0..76.0), y)],
            occlusion_windows: vec![],
            is_target: true,
            distractor_similarity: 0.0,
        }],
        noise: NoiseSpec { mask_jitter: 0.0, ..NoiseSpec::default() },
    }
}

/// Target moving right; a look-alike rides alongside (partial overlap)
/// through the occlusion window, then pulls away.
fn occluded(rng: &mut ChaCha8Rng, seed: u64, num_frames: u32, start: std::ops::RangeInclusive<u32>) -> ScenarioSpec {
    let last = num_frames - 1;
    let (ts, half) = shape(rng);
    let (ds, _) = shape(rng);
    let s = rng.random_range(start);
    let e = s + rng.random_range(12..=20);
    let y = rng.random_range(28.0..44.0);
    let x0 = rng.random_range(16.0..22.0);
    let x1 = rng.random_range(34.0..42.0);
    let target_x = |t: u32| x0 + (x1 - x0) * f64::from(t) / f64::from(last);
    let near = 2.0 * half - rng.random_range(6.0..8.0);
    let far = 2.0 * half + rng.random_range(14.0..18.0);
    let dy = rng.random_range(-2.0..2.0);
    let hold = (e + 1).max(num_frames / 2);
    let apart = hold + (last - hold) * 3 / 4;
    ScenarioSpec {
        name: String::new(),
        seed,
        width: WIDTH,
        height: HEIGHT,
        num_frames,
        objects: vec![
            ObjectSpec {
                shape: ts,
                trajectory: vec![wp(0, x0, y), wp(last, x1, y)],
                occlusion_windows: vec![[s, e]],
                is_target: true,
                distractor_similarity: 0.0,
            },
            ObjectSpec {
                shape: ds,
                trajectory: vec![
                    wp(0, target_x(0) + near, y + dy),
                    wp(hold, target_x(hold) + near, y + dy),
                    wp(apart, target_x(apart) + far, y + dy),
                    wp(last, target_x(last) + far, y + dy),
                ],
                occlusion_windows: vec![],
                is_target: false,
                distractor_similarity: rng.random_range(0.92..0.94),
            },
        ],
        noise: NoiseSpec::default(),
    }
}

/// No occlusion; a look-alike crosses just below the target.
fn passing(rng: &mut ChaCha8Rng, seed: u64) -> ScenarioSpec {
    let num_frames = 120;
    let last = num_frames - 1;
    let (ts, half) = shape(rng);
    let (ds, _) = shape(rng);
    let y = rng.random_range(24.0..32.0);
    let gap = 2.0 * half + rng.random_range(2.0..6.0);
    ScenarioSpec {
        name: String::new(),
        seed,
        width: WIDTH,
        height: HEIGHT,
        num_frames,
        objects: vec![
            ObjectSpec {
                shape: ts,
                trajectory: vec![wp(0, 20.0, y), wp(last, 76.0, y)],
                occlusion_windows: vec![],
                is_target: true,
                distractor_similarity: 0.0,
            },
            ObjectSpec {
                shape: ds,
                trajectory: vec![wp(0, 76.0, y + gap), wp(last, 20.0, y + gap)],
                occlusion_windows: vec![],
                is_target: false,
                distractor_similarity: rng.random_range(0.85..0.95),
            },
        ],
        noise: NoiseSpec::default(),
    }
}
