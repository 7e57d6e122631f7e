//! Table-top world model: workspace bounds, cylindrical objects, the
//! end-effector start, scene files and the two procedural layouts used for
//! experiments (a spaced row and a concentrated cluster).

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use nalgebra::{Point2, Point3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RADIUS: f64 = 0.03;
pub const DEFAULT_GRASP_HEIGHT: f64 = 0.05;
/// Fraction of the shorter table side used as the standard deviation of the
/// cluttered placement distribution.
pub const CLUTTER_SPREAD_FRACTION: f64 = 0.15;
/// Generated objects keep at least this planar distance from the start.
pub const START_KEEPOUT: f64 = 0.1;
const MAX_PLACEMENT_ATTEMPTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_max: f64,
}

impl Default for WorkspaceBounds {
    fn default() -> Self {
        WorkspaceBounds {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 0.6,
            z_max: 0.5,
        }
    }
}

impl WorkspaceBounds {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn depth(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.depth()
    }

    pub fn center(&self) -> Point2<f64> {
        Point2::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.x_min, self.x_max, self.y_min, self.y_max, self.z_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("bounds", "all bounds must be finite"));
        }
        if self.x_min >= self.x_max {
            return Err(Error::validation("bounds.x_min", "x_min must be < x_max"));
        }
        if self.y_min >= self.y_max {
            return Err(Error::validation("bounds.y_min", "y_min must be < y_max"));
        }
        if self.z_max <= 0.0 {
            return Err(Error::validation("bounds.z_max", "z_max must be > 0"));
        }
        Ok(())
    }

    /// Strictly inside the bounds shrunk inward by `margin`.
    pub fn contains_inset(&self, p: &Point2<f64>, margin: f64) -> bool {
        p.x > self.x_min + margin
            && p.x < self.x_max - margin
            && p.y > self.y_min + margin
            && p.y < self.y_max - margin
    }

    /// Clamps a point into the workspace volume (z between table and `z_max`).
    pub fn clamp(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
            p.z.clamp(0.0, self.z_max),
        )
    }
}

/// A vertical cylinder standing on the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub id: u32,
    pub position: Point2<f64>,
    pub radius: f64,
    pub grasp_height: f64,
}

impl SceneObject {
    pub fn new(id: u32, x: f64, y: f64) -> Self {
        SceneObject {
            id,
            position: Point2::new(x, y),
            radius: DEFAULT_RADIUS,
            grasp_height: DEFAULT_GRASP_HEIGHT,
        }
    }

    /// The point the end effector has to reach to grasp this object.
    pub fn grasp_point(&self) -> Point3<f64> {
        Point3::new(self.position.x, self.position.y, self.grasp_height)
    }

    pub fn planar_distance(&self, p: &Point3<f64>) -> f64 {
        (p.xy() - self.position).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub bounds: WorkspaceBounds,
    pub objects: Vec<SceneObject>,
    pub start: Point3<f64>,
}

impl Scene {
    /// Builds a scene and checks every invariant.
    pub fn new(
        bounds: WorkspaceBounds,
        objects: Vec<SceneObject>,
        start: Point3<f64>,
    ) -> Result<Self> {
        let scene = Scene {
            bounds,
            objects,
            start,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.objects.is_empty() {
            return Err(Error::validation(
                "objects",
                "scene needs at least one object",
            ));
        }
        let mut seen = HashSet::new();
        for o in &self.objects {
            let field = format!("objects[id={}]", o.id);
            if !seen.insert(o.id) {
                return Err(Error::validation(field, "duplicate object id"));
            }
            if !(o.radius.is_finite() && o.radius > 0.0) {
                return Err(Error::validation(field, "radius must be > 0"));
            }
            if !(o.grasp_height.is_finite() && o.grasp_height >= 0.0) {
                return Err(Error::validation(field, "grasp_height must be >= 0"));
            }
            if !self.bounds.contains_inset(&o.position, o.radius) {
                return Err(Error::validation(
                    field,
                    format!(
                        "position ({}, {}) with radius {} is not inside the workspace",
                        o.position.x, o.position.y, o.radius
                    ),
                ));
            }
        }
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                let d = (a.position - b.position).norm();
                if d < a.radius + b.radius {
                    return Err(Error::validation(
                        format!("objects[id={}], objects[id={}]", a.id, b.id),
                        format!(
                            "objects {} and {} overlap (center distance {d:.6})",
                            a.id, b.id
                        ),
                    ));
                }
            }
        }
        let s = &self.start;
        if !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite()) {
            return Err(Error::validation("start", "start must be finite"));
        }
        if s.x < self.bounds.x_min
            || s.x > self.bounds.x_max
            || s.y < self.bounds.y_min
            || s.y > self.bounds.y_max
        {
            return Err(Error::validation(
                "start",
                "start lies outside the workspace",
            ));
        }
        if !(s.z > 0.0 && s.z <= self.bounds.z_max) {
            return Err(Error::validation("start", "start.z must lie in (0, z_max]"));
        }
        Ok(())
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn target(&self, id: u32) -> Result<&SceneObject> {
        self.object(id).ok_or(Error::UnknownTarget(id))
    }

    pub fn ids(&self) -> Vec<u32> {
        self.objects.iter().map(|o| o.id).collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.objects.iter().map(|o| o.radius).fold(0.0, f64::max)
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        Scene::new(
            file.bounds,
            file.objects
                .into_iter()
                .map(|o| SceneObject {
                    id: o.id,
                    position: Point2::new(o.x, o.y),
                    radius: o.radius,
                    grasp_height: o.grasp_height,
                })
                .collect(),
            Point3::from(file.start),
        )
    }

    pub fn to_json(&self) -> String {
        let file = SceneFile {
            bounds: self.bounds,
            start: [self.start.x, self.start.y, self.start.z],
            objects: self
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    id: o.id,
                    x: o.position.x,
                    y: o.position.y,
                    radius: o.radius,
                    grasp_height: o.grasp_height,
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("scene serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    bounds: WorkspaceBounds,
    start: [f64; 3],
    objects: Vec<ObjectRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectRecord {
    id: u32,
    x: f64,
    y: f64,
    radius: f64,
    grasp_height: f64,
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scene::from_json(&text, path)
}

/// Start pose used by the generators: above the near edge of the table.
pub fn default_start(bounds: &WorkspaceBounds) -> Point3<f64> {
    Point3::new(bounds.center().x, bounds.y_min, 0.25_f64.min(bounds.z_max))
}

/// `n` objects evenly spaced along a line through the workspace center,
/// parallel to the x axis. Ids run from 1 to `n`.
pub fn generate_uncluttered_scene(spacing: f64, n: usize) -> Result<Scene> {
    let bounds = WorkspaceBounds::default();
    generate_uncluttered_scene_in(bounds, default_start(&bounds), spacing, n)
}

pub fn generate_uncluttered_scene_in(
    bounds: WorkspaceBounds,
    start: Point3<f64>,
    spacing: f64,
    n: usize,
) -> Result<Scene> {
    bounds.validate()?;
    if n < 2 {
        return Err(Error::validation(
            "n",
            "an object row needs at least 2 objects",
        ));
    }
    if spacing.is_nan() || spacing <= 2.0 * DEFAULT_RADIUS {
        return Err(Error::validation(
            "spacing",
            format!(
                "spacing must exceed the object diameter {}",
                2.0 * DEFAULT_RADIUS
            ),
        ));
    }
    if n as f64 * spacing > bounds.width() {
        return Err(Error::validation(
            "spacing",
            format!(
                "{n} objects at spacing {spacing} do not fit in a workspace {} wide",
                bounds.width()
            ),
        ));
    }
    let center = bounds.center();
    let half_span = 0.5 * (n - 1) as f64 * spacing;
    let objects = (0..n)
        .map(|i| {
            SceneObject::new(
                i as u32 + 1,
                center.x - half_span + i as f64 * spacing,
                center.y,
            )
        })
        .collect();
    Scene::new(bounds, objects, start)
}

/// `n` non-overlapping objects drawn by seeded rejection sampling from an
/// isotropic Gaussian centered on the table. Ids run from 1 to `n`.
pub fn generate_cluttered_scene(n: usize, seed: u64, min_gap: f64) -> Result<Scene> {
    let bounds = WorkspaceBounds::default();
    generate_cluttered_scene_in(bounds, default_start(&bounds), n, seed, min_gap)
}

pub fn generate_cluttered_scene_in(
    bounds: WorkspaceBounds,
    start: Point3<f64>,
    n: usize,
    seed: u64,
    min_gap: f64,
) -> Result<Scene> {
    bounds.validate()?;
    if n == 0 {
        return Err(Error::validation("n", "at least one object is required"));
    }
    if min_gap.is_nan() || min_gap < 0.0 {
        return Err(Error::validation("min_gap", "min_gap must be >= 0"));
    }
    let center = bounds.center();
    let sigma = CLUTTER_SPREAD_FRACTION * bounds.width().min(bounds.depth());
    let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
    let mut attempts = 0;
    while objects.len() < n {
        if attempts == MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::Placement {
                placed: objects.len(),
                requested: n,
                attempts,
            });
        }
        attempts += 1;
        let candidate = SceneObject::new(
            objects.len() as u32 + 1,
            center.x + normal.sample(&mut rng),
            center.y + normal.sample(&mut rng),
        );
        let p = candidate.position;
        if !bounds.contains_inset(&p, candidate.radius) {
            continue;
        }
        if (p - start.xy()).norm() < START_KEEPOUT {
            continue;
        }
        let clear = objects
            .iter()
            .all(|o| (o.position - p).norm() >= o.radius + candidate.radius + min_gap);
        if clear {
            objects.push(candidate);
        }
    }
    Scene::new(bounds, objects, start)
}

/// Object whose grasp point is closest (3-D) to `point`; ties go to the
/// lowest id.
pub fn nearest_object(scene: &Scene, point: &Point3<f64>) -> (u32, f64) {
    scene
        .objects
        .iter()
        .map(|o| (o.id, (o.grasp_point() - point).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("scene has at least one object")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bounds() -> WorkspaceBounds {
        WorkspaceBounds {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
            z_max: 0.5,
        }
    }

    #[test]
    fn minimal_scene_parses() {
        let text = r#"{
            "bounds": {"x_min": 0, "x_max": 1, "y_min": 0, "y_max": 1, "z_max": 0.5},
            "start": [0.5, 0.1, 0.3],
            "objects": [{"id": 1, "x": 0.5, "y": 0.5, "radius": 0.03, "grasp_height": 0.05}]
        }"#;
        let scene = Scene::from_json(text, Path::new("inline")).unwrap();
        assert_eq!(scene.objects.len(), 1);
        assert_eq!(scene.objects[0].position, Point2::new(0.5, 0.5));
    }

    #[test]
    fn overlapping_objects_name_both_ids() {
        let objects = vec![SceneObject::new(4, 0.5, 0.5), SceneObject::new(9, 0.5, 0.5)];
        let err = Scene::new(unit_bounds(), objects, Point3::new(0.5, 0.1, 0.3)).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Validation { .. }));
        assert!(msg.contains('4') && msg.contains('9'), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{
            "bounds": {"x_min": 0, "x_max": 1, "y_min": 0, "y_max": 1, "z_max": 0.5},
            "start": [0.5, 0.1, 0.3],
            "color": "red",
            "objects": [{"id": 1, "x": 0.5, "y": 0.5, "radius": 0.03, "grasp_height": 0.05}]
        }"#;
        assert!(matches!(
            Scene::from_json(text, Path::new("inline")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn out_of_bounds_object_is_rejected() {
        let objects = vec![SceneObject::new(2, 0.01, 0.5)];
        let err = Scene::new(unit_bounds(), objects, Point3::new(0.5, 0.1, 0.3)).unwrap_err();
        assert!(err.to_string().contains("id=2"));
    }

    #[test]
    fn start_height_must_be_positive() {
        let objects = vec![SceneObject::new(1, 0.5, 0.5)];
        assert!(Scene::new(unit_bounds(), objects.clone(), Point3::new(0.5, 0.1, 0.0)).is_err());
        assert!(Scene::new(unit_bounds(), objects, Point3::new(0.5, 0.1, 0.6)).is_err());
    }

    #[test]
    fn uncluttered_row_is_evenly_spaced() {
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        assert_eq!(scene.objects.len(), 5);
        for pair in scene.objects.windows(2) {
            let d = (pair[1].position - pair[0].position).norm();
            assert!((d - 0.15).abs() < 1e-12);
            assert_eq!(pair[0].position.y, pair[1].position.y);
        }
    }

    #[test]
    fn two_object_row_is_symmetric_about_center() {
        let scene = generate_uncluttered_scene(0.15, 2).unwrap();
        let c = scene.bounds.center();
        let a = scene.objects[0].position - c;
        let b = scene.objects[1].position - c;
        assert!((a + b).norm() < 1e-12);
    }

    #[test]
    fn row_that_cannot_fit_is_rejected() {
        let bounds = unit_bounds();
        let err =
            generate_uncluttered_scene_in(bounds, default_start(&bounds), 1.0, 5).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn cluttered_generation_is_deterministic() {
        let a = generate_cluttered_scene(20, 7, 0.01).unwrap();
        let b = generate_cluttered_scene(20, 7, 0.01).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.objects.len(), 20);
    }

    #[test]
    fn single_cluttered_object() {
        let scene = generate_cluttered_scene(1, 0, 0.01).unwrap();
        assert_eq!(scene.objects.len(), 1);
        assert!(scene
            .bounds
            .contains_inset(&scene.objects[0].position, DEFAULT_RADIUS));
    }

    #[test]
    fn infeasible_packing_reports_attempts() {
        let bounds = unit_bounds();
        let err =
            generate_cluttered_scene_in(bounds, default_start(&bounds), 500, 0, 0.05).unwrap_err();
        match err {
            Error::Placement {
                placed, attempts, ..
            } => {
                assert!(placed < 500);
                assert_eq!(attempts, MAX_PLACEMENT_ATTEMPTS);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn nearest_object_directly_above() {
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        let o3 = scene.object(3).unwrap();
        let (id, d) = nearest_object(&scene, &Point3::new(o3.position.x, o3.position.y, 0.3));
        assert_eq!(id, 3);
        assert!((d - (0.3 - o3.grasp_height)).abs() < 1e-12);
    }

    #[test]
    fn nearest_object_tie_goes_to_lowest_id() {
        let objects = vec![SceneObject::new(2, 0.6, 0.5), SceneObject::new(1, 0.4, 0.5)];
        let scene = Scene::new(unit_bounds(), objects, Point3::new(0.5, 0.1, 0.3)).unwrap();
        let (id, _) = nearest_object(&scene, &Point3::new(0.5, 0.5, 0.2));
        assert_eq!(id, 1);
    }

    #[test]
    fn nearest_object_from_workspace_corner() {
        // Row at y = 0.3, x = 0.2 .. 0.8. From corner (0, 0, 0), object 1 at
        // (0.2, 0.3, 0.05) is sqrt(0.04 + 0.09 + 0.0025) = 0.364005... away.
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        let (id, d) = nearest_object(&scene, &Point3::new(0.0, 0.0, 0.0));
        assert_eq!(id, 1);
        assert!((d - 0.1325_f64.sqrt()).abs() < 1e-12);
    }
}
