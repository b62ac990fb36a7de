//! Synthetic videos and a mock decoder that reproduce occlusion,
//! reappearance and look-alike distractors.

mod decoder;
mod rng;
mod scenario;
mod suite;
mod world;

pub use decoder::{
    mock_decode, perceived_iou, target_fidelity, SimDecoder, ABSENT_IOU, CONSISTENT_IOU, HEAVY_EROSION, LURE, POISON_EXPONENT,
};
pub use scenario::{NoiseSpec, ObjectSpec, ScenarioSpec, Shape, Waypoint};
pub use suite::{generate_scenario_suite, FAMILIES};
pub use world::{render_ground_truth, SimWorld};
