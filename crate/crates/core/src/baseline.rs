//! Hover-and-drop reference trajectory: rise to a hover height, cross the
//! table in a straight line while slowing down as the target gets closer,
//! then drop vertically onto the grasp point. Obstacles are ignored.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::trajectory::{PlannerTag, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub hover_height: f64,
    /// Minimum waypoint spacing, m; also the spacing of the vertical phases.
    pub step_len: f64,
    /// Traverse step as a fraction of the remaining planar distance.
    pub speed_gain: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            hover_height: 0.35,
            step_len: 0.005,
            speed_gain: 0.04,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self, scene: &Scene, clearance: f64) -> Result<()> {
        if !(self.step_len.is_finite() && self.step_len > 0.0) {
            return Err(Error::validation("baseline.step_len", "must be > 0"));
        }
        if !(self.speed_gain.is_finite() && self.speed_gain > 0.0 && self.speed_gain <= 1.0) {
            return Err(Error::validation(
                "baseline.speed_gain",
                "must lie in (0, 1]",
            ));
        }
        if self.hover_height > scene.bounds.z_max {
            return Err(Error::validation(
                "baseline.hover_height",
                "must not exceed z_max",
            ));
        }
        let top = scene
            .objects
            .iter()
            .map(|o| o.grasp_height)
            .fold(0.0, f64::max);
        if self.hover_height.is_nan() || self.hover_height <= top + clearance {
            return Err(Error::validation(
                "baseline.hover_height",
                format!(
                    "must exceed the tallest grasp height plus clearance ({})",
                    top + clearance
                ),
            ));
        }
        Ok(())
    }
}

fn vertical(from: &Point3<f64>, to_z: f64, step: f64, out: &mut Vec<Point3<f64>>) {
    let span = to_z - from.z;
    let n = (span.abs() / step).ceil() as usize;
    for k in 1..=n {
        let z = if k == n {
            to_z
        } else {
            from.z + span * k as f64 / n as f64
        };
        out.push(Point3::new(from.x, from.y, z));
    }
}

pub fn gen_baseline_traj(
    scene: &Scene,
    target: u32,
    config: &BaselineConfig,
) -> Result<Trajectory> {
    let goal = scene.target(target)?.grasp_point();
    let plateau = config.hover_height.max(scene.start.z);
    let mut pts = vec![scene.start];

    vertical(&scene.start, plateau, config.step_len, &mut pts);

    let from = *pts.last().unwrap();
    let dir = goal.xy() - from.xy();
    let total = dir.norm();
    if total > 0.0 {
        let unit = dir / total;
        let mut travelled = 0.0;
        while travelled < total {
            let remaining = total - travelled;
            let step = (config.speed_gain * remaining)
                .max(config.step_len)
                .min(remaining);
            travelled = if step == remaining {
                total
            } else {
                travelled + step
            };
            let p = from.xy() + unit * travelled;
            pts.push(Point3::new(p.x, p.y, plateau));
        }
    }

    let above = *pts.last().unwrap();
    vertical(&above, goal.z, config.step_len, &mut pts);

    Ok(Trajectory {
        waypoints: pts,
        planner: PlannerTag::Baseline,
        target,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_uncluttered_scene, SceneObject, WorkspaceBounds};

    #[test]
    fn start_above_target_has_no_traverse() {
        let scene = Scene::new(
            WorkspaceBounds::default(),
            vec![SceneObject::new(1, 0.5, 0.3)],
            Point3::new(0.5, 0.3, 0.2),
        )
        .unwrap();
        let t = gen_baseline_traj(&scene, 1, &BaselineConfig::default()).unwrap();
        assert!(t.waypoints.iter().all(|p| p.x == 0.5 && p.y == 0.3));
        assert_eq!(t.max_z(), 0.35);
        assert_eq!(t.last().z, 0.05);
    }

    #[test]
    fn middle_target_in_row() {
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        let cfg = BaselineConfig::default();
        let t = gen_baseline_traj(&scene, 3, &cfg).unwrap();
        assert_eq!(t.max_z(), cfg.hover_height);
        let goal = scene.object(3).unwrap().grasp_point();
        assert!((t.last() - goal).norm() < 1e-12);
        assert!(t.converged);
    }

    #[test]
    fn traverse_steps_do_not_grow() {
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        let t = gen_baseline_traj(&scene, 1, &BaselineConfig::default()).unwrap();
        let traverse: Vec<f64> = t
            .waypoints
            .windows(2)
            .filter(|w| w[0].z == w[1].z)
            .map(|w| (w[1] - w[0]).norm())
            .collect();
        assert!(traverse.len() > 10);
        assert!(
            traverse.windows(2).all(|s| s[1] <= s[0] + 1e-15),
            "{traverse:?}"
        );
    }

    #[test]
    fn unknown_target() {
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        assert!(matches!(
            gen_baseline_traj(&scene, 99, &BaselineConfig::default()),
            Err(Error::UnknownTarget(99))
        ));
    }
}
