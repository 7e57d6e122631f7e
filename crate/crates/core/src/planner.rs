//! Entropy-scaled potential-field planner.
//!
//! The target attracts the end effector quadratically. Every other object is
//! an obstacle, a cylinder standing on the table; within the influence radius
//! `rho0` of its body it contributes
//!
//! ```text
//! U_i = φ(x) · g_i · [ ½·(1/ρ − 1/ρ0)²  +  z_lift·(1/ρ − 1/ρ0)·(h_i + ρ0 − z) ]
//! ```
//!
//! where ρ is the distance to the obstacle body (the vertical segment from
//! the table up to its grasp height `h_i`) and the second term lifts the path
//! (its −∂/∂z is `+z_lift·g_i·(1/ρ − 1/ρ0)`). Inside the influence region
//! `z < h_i + ρ0`, so the lift term never turns attractive. The effective
//! gain `g_i` grows with clutter (low ξ) and with how close the obstacle lies
//! to the straight start→target segment. `φ = d²/(d² + s²)`, with `d` the
//! distance to the goal, fades all repulsion out near the goal so that
//! neighbours of the target cannot hold the end effector away from it.
//!
//! Descent takes steps of `k_update · ∇U`, with the gradient norm capped at
//! `max_gradient`, until the goal is within `epsilon`. Waypoints over an
//! obstacle are then raised clear of its top and the height made
//! non-increasing; the planar path is kept.

use nalgebra::{Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::clutter;
use crate::error::{Error, Result};
use crate::scene::{Scene, SceneObject};
use crate::trajectory::{PlannerTag, Trajectory};

/// Repulsion is undefined this close to an obstacle axis.
pub const SINGULAR_DISTANCE: f64 = 1e-6;
/// Window, in iterations, over which a stall is detected.
pub const STALL_WINDOW: usize = 50;
/// Net displacement over [`STALL_WINDOW`] iterations below which the planner
/// declares a local minimum.
pub const STALL_DISPLACEMENT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub k_att: f64,
    pub k_rep: f64,
    /// Influence radius around an obstacle axis, m.
    pub rho0: f64,
    pub k_update: f64,
    /// Termination distance to the grasp point, m.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Weight of the clutter term in the effective repulsive gain.
    pub beta: f64,
    /// Length scale of the line-proximity factor, m.
    pub sigma_line: f64,
    pub z_lift: f64,
    /// Extra planar clearance enforced by the smoother, m.
    pub clearance_margin: f64,
    /// Cap on the gradient norm used for a single step.
    pub max_gradient: f64,
    /// Distance to the goal at which repulsion is faded to one half, m.
    pub goal_fade: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            k_att: 4.0,
            k_rep: 0.01,
            rho0: 0.12,
            k_update: 0.01,
            epsilon: 0.01,
            max_iters: 5000,
            beta: 2.0,
            sigma_line: 0.1,
            z_lift: 0.5,
            clearance_margin: 0.02,
            max_gradient: 2.0,
            goal_fade: 0.2,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self, scene: &Scene) -> Result<()> {
        let positive = [
            ("k_att", self.k_att),
            ("k_rep", self.k_rep),
            ("rho0", self.rho0),
            ("k_update", self.k_update),
            ("epsilon", self.epsilon),
            ("beta", self.beta),
            ("sigma_line", self.sigma_line),
            ("z_lift", self.z_lift),
            ("clearance_margin", self.clearance_margin),
            ("max_gradient", self.max_gradient),
            ("goal_fade", self.goal_fade),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("field.{name}"), "must be > 0"));
            }
        }
        if self.rho0 <= scene.max_radius() {
            return Err(Error::validation(
                "field.rho0",
                "must exceed the largest object radius",
            ));
        }
        if self.epsilon >= self.rho0 {
            return Err(Error::validation(
                "field.epsilon",
                "must be smaller than rho0",
            ));
        }
        if self.max_iters < 1 {
            return Err(Error::validation("field.max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

/// Closest point to `x` on the obstacle body, the vertical segment from the
/// table to the grasp height along the object axis.
pub fn body_point(obstacle: &SceneObject, x: &Point3<f64>) -> Point3<f64> {
    Point3::new(
        obstacle.position.x,
        obstacle.position.y,
        x.z.clamp(0.0, obstacle.grasp_height),
    )
}

/// Planar distance from `p` to the segment `a`–`b`.
fn point_segment_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// `exp(−dist²/σ²)`, where `dist` is the planar distance from the obstacle
/// center to the segment between the (projected) start and the target center.
pub fn line_proximity(
    obstacle: &SceneObject,
    start: &Point3<f64>,
    target: &SceneObject,
    sigma_line: f64,
) -> f64 {
    let d = point_segment_distance(
        obstacle.position.coords,
        start.xy().coords,
        target.position.coords,
    );
    (-(d * d) / (sigma_line * sigma_line)).exp()
}

#[derive(Debug, Clone)]
pub struct PotentialField<'a> {
    pub scene: &'a Scene,
    pub target: u32,
    pub xi: f64,
    /// Effective repulsive gain per object, aligned with `scene.objects`;
    /// zero for the target.
    pub gains: Vec<f64>,
    pub config: FieldConfig,
    goal: Point3<f64>,
}

pub fn build_field<'a>(
    scene: &'a Scene,
    target: u32,
    xi: f64,
    config: &FieldConfig,
) -> Result<PotentialField<'a>> {
    let goal_obj = scene.target(target)?;
    let clutter_scale = 1.0 + config.beta * (1.0 - xi);
    let gains = scene
        .objects
        .iter()
        .map(|o| {
            if o.id == target {
                0.0
            } else {
                config.k_rep
                    * clutter_scale
                    * line_proximity(o, &scene.start, goal_obj, config.sigma_line)
            }
        })
        .collect();
    Ok(PotentialField {
        scene,
        target,
        xi,
        gains,
        config: *config,
        goal: goal_obj.grasp_point(),
    })
}

impl PotentialField<'_> {
    pub fn goal(&self) -> Point3<f64> {
        self.goal
    }

    pub fn gain(&self, id: u32) -> Option<f64> {
        self.scene
            .objects
            .iter()
            .position(|o| o.id == id)
            .map(|i| self.gains[i])
    }

    fn fade(&self, to_goal: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let s2 = self.config.goal_fade * self.config.goal_fade;
        let d2 = to_goal.norm_squared();
        let denom = d2 + s2;
        (d2 / denom, to_goal * (2.0 * s2 / (denom * denom)))
    }

    fn active_obstacles<'s>(
        &'s self,
        x: &'s Point3<f64>,
    ) -> impl Iterator<Item = Result<(f64, Vector3<f64>, f64, f64)>> + 's {
        self.scene
            .objects
            .iter()
            .zip(&self.gains)
            .filter(|(_, &g)| g > 0.0)
            .filter_map(move |(o, &g)| {
                let delta = x - body_point(o, x);
                let rho = delta.norm();
                if rho < SINGULAR_DISTANCE {
                    return Some(Err(Error::Singularity {
                        obstacle: o.id,
                        point: *x,
                    }));
                }
                let headroom = o.grasp_height + self.config.rho0 - x.z;
                (rho < self.config.rho0).then_some(Ok((g, delta, rho, headroom)))
            })
    }

    /// Scalar potential at `point` (clamped into the workspace).
    pub fn potential(&self, point: &Point3<f64>) -> Result<f64> {
        let x = self.scene.bounds.clamp(point);
        let to_goal = x - self.goal;
        let attractive = 0.5 * self.config.k_att * to_goal.norm_squared();
        let (phi, _) = self.fade(&to_goal);
        let mut repulsive = 0.0;
        for item in self.active_obstacles(&x) {
            let (g, _, rho, headroom) = item?;
            let a = 1.0 / rho - 1.0 / self.config.rho0;
            repulsive += g * (0.5 * a * a + self.config.z_lift * a * headroom);
        }
        Ok(attractive + phi * repulsive)
    }

    /// ∇U_total at `point` (clamped into the workspace).
    pub fn total_gradient(&self, point: &Point3<f64>) -> Result<Vector3<f64>> {
        let x = self.scene.bounds.clamp(point);
        let to_goal = x - self.goal;
        let mut grad = to_goal * self.config.k_att;
        let (phi, grad_phi) = self.fade(&to_goal);
        let lift = self.config.z_lift;
        for item in self.active_obstacles(&x) {
            let (g, delta, rho, headroom) = item?;
            let a = 1.0 / rho - 1.0 / self.config.rho0;
            let value = g * (0.5 * a * a + lift * a * headroom);
            // dU/dρ · ∇ρ, with ∇ρ the unit vector away from the obstacle body.
            let d_rho = -g * (a + lift * headroom) / (rho * rho);
            let mut own = delta * (d_rho / rho);
            own.z -= g * lift * a;
            grad += own * phi + grad_phi * value;
        }
        Ok(grad)
    }
}

/// Runs the descent, smooths the result and reports convergence.
pub fn gen_legible_traj(scene: &Scene, target: u32, config: &FieldConfig) -> Result<Trajectory> {
    config.validate(scene)?;
    let xi = clutter::scene_xi(scene);
    let field = build_field(scene, target, xi, config)?;
    descend(&field)
}

pub(crate) fn descend(field: &PotentialField<'_>) -> Result<Trajectory> {
    let scene = field.scene;
    let config = &field.config;
    let goal = field.goal();
    let mut x = scene.bounds.clamp(&scene.start);
    let mut raw = vec![x];
    let mut converged = (x - goal).norm() < config.epsilon;

    let mut iteration = 0;
    while !converged && iteration < config.max_iters {
        iteration += 1;
        let mut g = field.total_gradient(&x)?;
        let norm = g.norm();
        if norm > config.max_gradient {
            g *= config.max_gradient / norm;
        }
        x = scene.bounds.clamp(&(x - g * config.k_update));
        raw.push(x);
        converged = (x - goal).norm() < config.epsilon;
        if !converged && raw.len() > STALL_WINDOW {
            let earlier = raw[raw.len() - 1 - STALL_WINDOW];
            if (x - earlier).norm() < STALL_DISPLACEMENT {
                let partial = Trajectory {
                    waypoints: raw,
                    planner: PlannerTag::PotentialField,
                    target: field.target,
                    converged: false,
                };
                return Err(Error::LocalMinimum {
                    position: x,
                    iteration,
                    partial: Box::new(smooth(&partial, scene, config)),
                });
            }
        }
    }

    let traj = Trajectory {
        waypoints: raw,
        planner: PlannerTag::PotentialField,
        target: field.target,
        converged,
    };
    Ok(smooth(&traj, scene, config))
}

/// Lifts every waypoint that lies within `radius + clearance_margin` of a
/// non-target obstacle in the plane to at least `clearance_margin` above its
/// top, then replaces each height by the maximum of the heights still ahead
/// so that z never increases. The planar path is left as it is.
///
/// Where a drop in height stretches a step of the raw path beyond
/// `k_update · max_gradient`,
/// the end effector first moves across at the higher level and then descends
/// vertically in bounded steps.
pub fn smooth(traj: &Trajectory, scene: &Scene, config: &FieldConfig) -> Trajectory {
    let obstacles: Vec<&SceneObject> = scene
        .objects
        .iter()
        .filter(|o| o.id != traj.target)
        .collect();
    let margin = config.clearance_margin;
    let mut lifted = traj.waypoints.clone();
    for p in &mut lifted {
        for o in &obstacles {
            if (p.xy() - o.position).norm() < o.radius + margin {
                p.z = p.z.max(o.grasp_height + margin);
            }
        }
    }
    monotone_height(&mut lifted);

    let max_step = config.k_update * config.max_gradient;
    let raw = &traj.waypoints;
    let mut waypoints = Vec::with_capacity(lifted.len());
    for (k, &next) in lifted.iter().enumerate() {
        if k > 0 {
            let prev: Point3<f64> = waypoints[waypoints.len() - 1];
            let stretched =
                (next - prev).norm() > max_step && (raw[k] - raw[k - 1]).norm() <= max_step;
            if stretched && next.z < prev.z {
                let over = Point3::new(next.x, next.y, prev.z);
                if over != prev {
                    waypoints.push(over);
                }
                let pieces = ((prev.z - next.z) / max_step).ceil() as usize;
                for j in 1..pieces {
                    let z = prev.z - (prev.z - next.z) * j as f64 / pieces as f64;
                    waypoints.push(Point3::new(next.x, next.y, z));
                }
            }
        }
        waypoints.push(next);
    }
    Trajectory {
        waypoints,
        ..traj.clone()
    }
}

/// Whether `p` keeps `margin` from the body of `obstacle`: either outside its
/// inflated footprint or at least `margin` above its top.
pub fn clears(obstacle: &SceneObject, p: &Point3<f64>, margin: f64) -> bool {
    const TOL: f64 = 1e-12;
    (p.xy() - obstacle.position).norm() >= obstacle.radius + margin - TOL
        || p.z >= obstacle.grasp_height + margin - TOL
}

/// Backward running maximum of z.
pub fn monotone_height(waypoints: &mut [Point3<f64>]) {
    let mut running = f64::NEG_INFINITY;
    for p in waypoints.iter_mut().rev() {
        running = running.max(p.z);
        p.z = running;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::WorkspaceBounds;
    use approx::assert_relative_eq;

    fn bounds() -> WorkspaceBounds {
        WorkspaceBounds::default()
    }

    fn scene(objects: Vec<SceneObject>, start: Point3<f64>) -> Scene {
        Scene::new(bounds(), objects, start).unwrap()
    }

    #[test]
    fn proximity_on_segment_is_one() {
        let start = Point3::new(0.5, 0.0, 0.25);
        let target = SceneObject::new(1, 0.5, 0.4);
        let obstacle = SceneObject::new(2, 0.5, 0.2);
        assert_eq!(line_proximity(&obstacle, &start, &target, 0.1), 1.0);
    }

    #[test]
    fn proximity_at_one_sigma() {
        let start = Point3::new(0.5, 0.0, 0.25);
        let target = SceneObject::new(1, 0.5, 0.4);
        let obstacle = SceneObject::new(2, 0.6, 0.2);
        assert_relative_eq!(
            line_proximity(&obstacle, &start, &target, 0.1),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn proximity_behind_start_vanishes() {
        // Closest point of the segment is the start itself, 10σ away.
        let start = Point3::new(0.5, 0.5, 0.25);
        let target = SceneObject::new(1, 0.5, 0.9);
        let obstacle = SceneObject::new(2, 0.5, 0.4);
        let f = line_proximity(&obstacle, &start, &target, 0.01);
        assert!(f < 1e-40, "{f}");
    }

    #[test]
    fn gains_follow_clutter_scaling() {
        let s = scene(
            vec![
                SceneObject::new(1, 0.5, 0.4),
                SceneObject::new(2, 0.5, 0.2),
                SceneObject::new(3, 0.8, 0.3),
            ],
            Point3::new(0.5, 0.0, 0.25),
        );
        let cfg = FieldConfig::default();
        let target = s.object(1).unwrap();
        let at_one = build_field(&s, 1, 1.0, &cfg).unwrap();
        let at_zero = build_field(&s, 1, 0.0, &FieldConfig { beta: 2.0, ..cfg }).unwrap();
        for o in &s.objects[1..] {
            let lp = line_proximity(o, &s.start, target, cfg.sigma_line);
            assert_relative_eq!(at_one.gain(o.id).unwrap(), cfg.k_rep * lp, epsilon = 1e-15);
            assert_relative_eq!(
                at_zero.gain(o.id).unwrap(),
                3.0 * cfg.k_rep * lp,
                epsilon = 1e-15
            );
        }
        assert_eq!(at_one.gain(1), Some(0.0));
        assert_eq!(at_zero.gain(1), Some(0.0));
    }

    #[test]
    fn unknown_target_is_rejected() {
        let s = scene(
            vec![SceneObject::new(1, 0.5, 0.4)],
            Point3::new(0.5, 0.0, 0.25),
        );
        assert!(matches!(
            build_field(&s, 99, 1.0, &FieldConfig::default()),
            Err(Error::UnknownTarget(99))
        ));
    }

    #[test]
    fn gradient_vanishes_at_goal() {
        let s = scene(
            vec![SceneObject::new(1, 0.5, 0.4)],
            Point3::new(0.5, 0.0, 0.25),
        );
        let f = build_field(&s, 1, 1.0, &FieldConfig::default()).unwrap();
        assert_eq!(f.total_gradient(&f.goal()).unwrap(), Vector3::zeros());
    }

    #[test]
    fn free_space_gradient_is_linear() {
        let s = scene(
            vec![SceneObject::new(1, 0.5, 0.4)],
            Point3::new(0.5, 0.0, 0.25),
        );
        let cfg = FieldConfig::default();
        let f = build_field(&s, 1, 1.0, &cfg).unwrap();
        let p = Point3::new(0.2, 0.1, 0.3);
        let g = f.total_gradient(&p).unwrap();
        assert_relative_eq!(g, (p - f.goal()) * cfg.k_att, epsilon = 1e-15);
        assert_relative_eq!(g.norm(), cfg.k_att * (p - f.goal()).norm(), epsilon = 1e-14);
    }

    #[test]
    fn repulsion_is_zero_at_influence_radius() {
        let s = scene(
            vec![SceneObject::new(1, 0.8, 0.3), SceneObject::new(2, 0.3, 0.3)],
            Point3::new(0.3, 0.0, 0.25),
        );
        let cfg = FieldConfig::default();
        let f = build_field(&s, 1, 0.5, &cfg).unwrap();
        let p = Point3::new(0.3 + cfg.rho0, 0.3, 0.03);
        let g = f.total_gradient(&p).unwrap();
        assert_relative_eq!(g, (p - f.goal()) * cfg.k_att, epsilon = 1e-15);
    }

    #[test]
    fn point_inside_obstacle_body_is_singular() {
        let s = scene(
            vec![SceneObject::new(1, 0.8, 0.3), SceneObject::new(2, 0.3, 0.3)],
            Point3::new(0.3, 0.0, 0.25),
        );
        let f = build_field(&s, 1, 0.5, &FieldConfig::default()).unwrap();
        assert!(matches!(
            f.total_gradient(&Point3::new(0.3, 0.3, 0.03)),
            Err(Error::Singularity { obstacle: 2, .. })
        ));
    }

    #[test]
    fn start_inside_epsilon_gives_single_waypoint() {
        let s = scene(
            vec![SceneObject::new(1, 0.5, 0.3)],
            Point3::new(0.5, 0.3, 0.055),
        );
        let t = gen_legible_traj(&s, 1, &FieldConfig::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.converged);
    }

    #[test]
    fn empty_scene_path_is_nearly_straight() {
        let s = scene(
            vec![SceneObject::new(1, 0.7, 0.4)],
            Point3::new(0.5, 0.0, 0.25),
        );
        let t = gen_legible_traj(&s, 1, &FieldConfig::default()).unwrap();
        assert!(t.converged);
        let straight = (s.start - s.objects[0].grasp_point()).norm();
        assert!(t.arc_length() <= 1.02 * straight);
    }

    #[test]
    fn path_passes_over_obstacle_on_the_line() {
        let s = scene(
            vec![
                SceneObject::new(1, 0.5, 0.45),
                SceneObject::new(2, 0.5, 0.22),
            ],
            Point3::new(0.5, 0.0, 0.25),
        );
        let cfg = FieldConfig::default();
        let t = gen_legible_traj(&s, 1, &cfg).unwrap();
        assert!(t.converged);
        let obstacle = s.object(2).unwrap();
        assert!(t
            .waypoints
            .iter()
            .all(|p| clears(obstacle, p, cfg.clearance_margin)));
        let crossing = t
            .waypoints
            .iter()
            .filter(|p| obstacle.planar_distance(p) < obstacle.radius)
            .count();
        assert!(crossing > 0);
    }

    #[test]
    fn running_max_by_hand() {
        let mut pts: Vec<Point3<f64>> = [0.3, 0.2, 0.25, 0.1]
            .iter()
            .map(|&z| Point3::new(0.0, 0.0, z))
            .collect();
        monotone_height(&mut pts);
        let z: Vec<f64> = pts.iter().map(|p| p.z).collect();
        assert_eq!(z, vec![0.3, 0.25, 0.25, 0.1]);
    }

    #[test]
    fn non_increasing_height_is_a_fixed_point() {
        let mut pts: Vec<Point3<f64>> = [0.4, 0.3, 0.3, 0.05]
            .iter()
            .map(|&z| Point3::new(0.1, 0.2, z))
            .collect();
        let before = pts.clone();
        monotone_height(&mut pts);
        assert_eq!(pts, before);
    }

    #[test]
    fn margin_pass_ignores_distant_waypoints() {
        let s = scene(
            vec![SceneObject::new(1, 0.8, 0.3), SceneObject::new(2, 0.2, 0.5)],
            Point3::new(0.5, 0.0, 0.25),
        );
        let traj = Trajectory {
            waypoints: vec![
                Point3::new(0.5, 0.0, 0.25),
                Point3::new(0.6, 0.1, 0.2),
                Point3::new(0.8, 0.3, 0.05),
            ],
            planner: PlannerTag::PotentialField,
            target: 1,
            converged: true,
        };
        assert_eq!(smooth(&traj, &s, &FieldConfig::default()), traj);
    }

    #[test]
    fn waypoints_over_an_obstacle_are_lifted_then_lowered_in_bounded_steps() {
        let s = scene(
            vec![SceneObject::new(1, 0.5, 0.3), SceneObject::new(2, 0.5, 0.2)],
            Point3::new(0.5, 0.0, 0.25),
        );
        let cfg = FieldConfig::default();
        let traj = Trajectory {
            waypoints: (0..=8)
                .map(|k| Point3::new(0.5, 0.18 + 0.01 * k as f64, 0.05))
                .collect(),
            planner: PlannerTag::PotentialField,
            target: 1,
            converged: true,
        };
        let out = smooth(&traj, &s, &cfg);
        let top = 0.05 + cfg.clearance_margin;
        assert_relative_eq!(out.waypoints[0].z, top);
        assert_relative_eq!(out.waypoints[6].z, top);
        assert_eq!(out.waypoints.last(), traj.waypoints.last());
        assert!(out.len() > traj.len());
        let bound = cfg.k_update * cfg.max_gradient;
        assert!(out.step_lengths().iter().all(|&d| d <= bound + 1e-12));
        let obstacle = s.object(2).unwrap();
        assert!(out
            .waypoints
            .iter()
            .all(|p| clears(obstacle, p, cfg.clearance_margin)));
        assert!(out.waypoints.windows(2).all(|w| w[1].z <= w[0].z));
    }
}
