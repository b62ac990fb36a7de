use crate::error::SimError;
use crate::mask::Mask;

use super::scenario::{ObjectSpec, ScenarioSpec, Shape};

fn rasterize(spec: &ScenarioSpec, object: &ObjectSpec, t: u32) -> Result<Mask, SimError> {
    let (cx, cy) = object.position(t);
    let mask = match object.shape {
        Shape::Rect { w, h } => {
            let x0 = (cx - f64::from(w) / 2.0).round() as i64;
            let y0 = (cy - f64::from(h) / 2.0).round() as i64;
            let (x1, y1) = (x0 + i64::from(w), y0 + i64::from(h));
            Mask::from_fn(spec.width, spec.height, |x, y| {
                let (x, y) = (i64::from(x), i64::from(y));
                x >= x0 && x < x1 && y >= y0 && y < y1
            })?
        }
        Shape::Disc { radius } => {
            let r2 = f64::from(radius).powi(2);
            Mask::from_fn(spec.width, spec.height, |x, y| {
                let dx = f64::from(x) + 0.5 - cx;
                let dy = f64::from(y) + 0.5 - cy;
                dx * dx + dy * dy < r2
            })?
        }
    };
    Ok(mask)
}

/// Ground-truth mask and visibility of every object at frame `t`. Hidden
/// objects render empty.
pub fn render_ground_truth(spec: &ScenarioSpec, t: u32) -> Result<Vec<(Mask, bool)>, SimError> {
    if t >= spec.num_frames {
        return Err(SimError::InvalidSpec(format!("frame {t} outside [0, {})", spec.num_frames)));
    }
    spec.objects
        .iter()
        .map(|o| {
            if o.hidden_at(t) {
                Ok((Mask::empty(spec.width, spec.height)?, false))
            } else {
                Ok((rasterize(spec, o, t)?, true))
            }
        })
        .collect()
}

/// A validated scenario with every ground-truth frame rendered up front.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub spec: ScenarioSpec,
    /// `[object][t]`.
    gt: Vec<Vec<Mask>>,
    visible: Vec<Vec<bool>>,
}

impl SimWorld {
    pub fn new(spec: ScenarioSpec) -> Result<Self, SimError> {
        spec.validate()?;
        let n = spec.objects.len();
        let mut gt = vec![Vec::with_capacity(spec.num_frames as usize); n];
        let mut visible = vec![Vec::with_capacity(spec.num_frames as usize); n];
        for t in 0..spec.num_frames {
            for (i, (mask, vis)) in render_ground_truth(&spec, t)?.into_iter().enumerate() {
                gt[i].push(mask);
                visible[i].push(vis);
            }
        }
        Ok(Self { spec, gt, visible })
    }

    pub fn num_frames(&self) -> u32 {
        self.spec.num_frames
    }

    pub fn mask(&self, object: usize, t: u32) -> &Mask {
        &self.gt[object][t as usize]
    }

    pub fn visible(&self, object: usize, t: u32) -> bool {
        self.visible[object][t as usize]
    }

    /// Visible object other than `object` whose centre is closest to
    /// `object`'s centre at `t`. Ties go to the lower index.
    pub fn nearest_distractor(&self, object: usize, t: u32) -> Option<usize> {
        let (x, y) = self.spec.objects[object].position(t);
        (0..self.spec.objects.len())
            .filter(|&i| i != object && self.visible(i, t))
            .map(|i| {
                let (ox, oy) = self.spec.objects[i].position(t);
                (i, (ox - x).powi(2) + (oy - y).powi(2))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::scenario::{NoiseSpec, Waypoint};

    fn spec(shape: Shape, windows: Vec<[u32; 2]>) -> ScenarioSpec {
        ScenarioSpec {
            name: String::new(),
            seed: 1,
            width: 40,
            height: 30,
            num_frames: 10,
            objects: vec![ObjectSpec {
                shape,
                trajectory: vec![Waypoint { t: 0, x: 10.0, y: 10.0 }, Waypoint { t: 9, x: 28.0, y: 10.0 }],
                occlusion_windows: windows,
                is_target: true,
                distractor_similarity: 0.0,
            }],
            noise: NoiseSpec::default(),
        }
    }

    #[test]
    fn rect_area_and_motion() {
        let s = spec(Shape::Rect { w: 6, h: 4 }, vec![]);
        let gt = render_ground_truth(&s, 0).unwrap();
        assert_eq!(gt[0].0.count(), 24);
        assert!(gt[0].1);
        let later = render_ground_truth(&s, 9).unwrap();
        assert_eq!(later[0].0.count(), 24);
        assert!(later[0].0.get(28, 10) && !later[0].0.get(10, 10));
    }

    #[test]
    fn disc_radius_zero_is_empty() {
        let s = spec(Shape::Disc { radius: 0 }, vec![]);
        assert!(render_ground_truth(&s, 3).unwrap()[0].0.is_empty());
        let s = spec(Shape::Disc { radius: 3 }, vec![]);
        // Centre on a pixel corner: 8 pixel centres per quadrant within r.
        assert_eq!(render_ground_truth(&s, 0).unwrap()[0].0.count(), 32);
    }

    #[test]
    fn occlusion_window_hides_object() {
        let s = spec(Shape::Rect { w: 4, h: 4 }, vec![[3, 5]]);
        let world = SimWorld::new(s).unwrap();
        assert!(world.visible(0, 2));
        for t in 3..=5 {
            assert!(!world.visible(0, t));
            assert!(world.mask(0, t).is_empty());
        }
        assert!(world.visible(0, 6));
    }

    #[test]
    fn frame_out_of_range_is_rejected() {
        let s = spec(Shape::Rect { w: 4, h: 4 }, vec![]);
        assert!(render_ground_truth(&s, 10).is_err());
    }
}
