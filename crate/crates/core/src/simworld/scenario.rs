use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Axis-aligned rectangle centred on the trajectory point.
    Rect { w: u32, h: u32 },
    /// Pixels whose centre lies strictly within `radius` of the point.
    Disc { radius: u32 },
}

/// One trajectory knot: the object's centre at frame `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub shape: Shape,
    /// Piecewise-linear path, sorted by `t`; held constant outside its span.
    pub trajectory: Vec<Waypoint>,
    /// Inclusive `[start, end]` frame ranges during which the object is hidden.
    #[serde(default)]
    pub occlusion_windows: Vec<[u32; 2]>,
    #[serde(default)]
    pub is_target: bool,
    /// How strongly the object attracts a decoder tracking something else.
    #[serde(default)]
    pub distractor_similarity: f64,
}

impl ObjectSpec {
    pub fn position(&self, t: u32) -> (f64, f64) {
        let path = &self.trajectory;
        let first = path[0];
        if t <= first.t {
            return (first.x, first.y);
        }
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.t {
                let u = f64::from(t - a.t) / f64::from(b.t - a.t);
                return (a.x + u * (b.x - a.x), a.y + u * (b.y - a.y));
            }
        }
        let last = path[path.len() - 1];
        (last.x, last.y)
    }

    pub fn hidden_at(&self, t: u32) -> bool {
        self.occlusion_windows.iter().any(|&[s, e]| (s..=e).contains(&t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of the predicted-IoU error.
    pub iou_calibration_noise: f64,
    /// Occlusion-score magnitude outside occlusion windows.
    pub occ_margin: f64,
    /// Occlusion scores inside the target's occlusion windows are uniform in
    /// `[-uncertain_band, uncertain_band]`.
    pub uncertain_band: f64,
    /// Probability that an emitted mask is eroded or dilated by one pixel.
    pub mask_jitter: f64,
    /// Standard deviation of a small IoU perturbation that depends on the
    /// whole memory bank, so decoders conditioned on different memories never
    /// report bit-identical scores.
    pub memory_sensitivity: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            iou_calibration_noise: 0.005,
            occ_margin: 5.0,
            uncertain_band: 1.5,
            mask_jitter: 0.1,
            memory_sensitivity: 1e-6,
        }
    }
}

impl NoiseSpec {
    /// No noise at all; decoders become exactly calibrated.
    pub fn silent() -> Self {
        Self {
            iou_calibration_noise: 0.0,
            mask_jitter: 0.0,
            memory_sensitivity: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub num_frames: u32,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidSpec(msg));
        if self.width == 0 || self.height == 0 {
            return bad("canvas must be non-empty".into());
        }
        if self.num_frames < 2 {
            return bad(format!("num_frames must be at least 2, got {}", self.num_frames));
        }
        if !self.objects.iter().any(|o| o.is_target) {
            return bad("no object is marked as target".into());
        }
        let n = &self.noise;
        for (name, v) in [
            ("iou_calibration_noise", n.iou_calibration_noise),
            ("occ_margin", n.occ_margin),
            ("uncertain_band", n.uncertain_band),
            ("mask_jitter", n.mask_jitter),
            ("memory_sensitivity", n.memory_sensitivity),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("noise.{name} must be non-negative, got {v}"));
            }
        }
        if n.mask_jitter > 1.0 {
            return bad("noise.mask_jitter is a probability".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.trajectory.is_empty() {
                return bad(format!("object {i} has no waypoints"));
            }
            if o.trajectory.windows(2).any(|p| p[0].t >= p[1].t) {
                return bad(format!("object {i} waypoints are not strictly increasing in t"));
            }
            for wp in &o.trajectory {
                let inside = wp.x >= 0.0
                    && wp.y >= 0.0
                    && wp.x <= f64::from(self.width)
                    && wp.y <= f64::from(self.height);
                if !inside {
                    return bad(format!("object {i} waypoint at t={} is outside the canvas", wp.t));
                }
            }
            for &[s, e] in &o.occlusion_windows {
                if s > e || e >= self.num_frames {
                    return bad(format!("object {i} occlusion window [{s}, {e}] out of range"));
                }
            }
            if !(0.0..=1.0).contains(&o.distractor_similarity) {
                return bad(format!("object {i} distractor_similarity outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Index of the first target object.
    pub fn target(&self) -> usize {
        self.objects.iter().position(|o| o.is_target).unwrap_or(0)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidSpec(format!("{}: {e}", path.display())))?;
        let spec: Self = serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidSpec(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
