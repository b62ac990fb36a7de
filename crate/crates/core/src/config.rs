use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Search and memory hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Number of pathways kept alive after pruning (P).
    pub pathways: usize,
    /// Maximum number of non-prompt memory frames (N).
    pub memory_frames: usize,
    /// Added inside the logarithm of the score update.
    pub epsilon: f64,
    /// A step is uncertain when every decode call's |occlusion score| is below this.
    pub delta_conf: f64,
    /// Memory gate: a frame is eligible only if its predicted IoU exceeds this.
    pub delta_iou: f64,
    pub w_low: f64,
    pub w_high: f64,
    /// Decimal places used for the distinct-IoU test under uncertainty.
    /// `None` compares raw IoUs (rounding disabled).
    pub iou_rounding_decimals: Option<u32>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            pathways: 3,
            memory_frames: 6,
            epsilon: 1e-10,
            delta_conf: 2.0,
            delta_iou: 0.3,
            w_low: 0.95,
            w_high: 1.05,
            iou_rounding_decimals: Some(2),
        }
    }
}

fn violated(field: &'static str, constraint: &'static str) -> Result<(), ConfigError> {
    Err(ConfigError { field, constraint })
}

impl Hyperparams {
    /// Checks every field constraint in declaration order and reports the
    /// first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pathways < 1 {
            return violated("P", "P ≥ 1");
        }
        if self.memory_frames < 1 {
            return violated("N", "N ≥ 1");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return violated("epsilon", "epsilon > 0");
        }
        if !(self.delta_conf.is_finite() && self.delta_conf >= 0.0) {
            return violated("delta_conf", "delta_conf ≥ 0");
        }
        if !(0.0..=1.0).contains(&self.delta_iou) {
            return violated("delta_iou", "delta_iou in [0, 1]");
        }
        if !(self.w_low.is_finite() && self.w_low > 0.0) {
            return violated("w_low", "w_low > 0");
        }
        if !(self.w_high.is_finite() && self.w_high >= self.w_low) {
            return violated("w_high", "w_high ≥ w_low");
        }
        Ok(())
    }
}

pub fn validate_hyperparams(h: &Hyperparams) -> Result<(), ConfigError> {
    h.validate()
}
