//! Constrained tree memory search for video object segmentation.
//!
//! The engine keeps P hypothesis pathways per object, scores them by
//! accumulated log predicted IoU, diversifies the beam on uncertain frames,
//! and conditions each pathway's decoder on an object-aware memory bank.
//! The decoder itself sits behind [`backend::DecoderBackend`].

pub mod backend;
pub mod bench;
pub mod config;
pub mod error;
pub mod mask;
pub mod memory;
pub mod metrics;
pub mod search;
pub mod simworld;
pub mod types;

pub use config::Hyperparams;
pub use mask::Mask;
