#![allow(dead_code)]

use std::path::PathBuf;

use legifield::scene::{Scene, SceneObject, WorkspaceBounds, DEFAULT_RADIUS};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// Objects placed uniformly (by rejection) in the default workspace, with a
/// 1 cm surface gap and a 0.1 m keep-out around the default start.
pub fn random_scene(seed: u64, n: usize) -> Scene {
    let bounds = WorkspaceBounds::default();
    let start = Point3::new(0.5, 0.0, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
    let r = DEFAULT_RADIUS;
    while objects.len() < n {
        let x = rng.gen_range(bounds.x_min + r..bounds.x_max - r);
        let y = rng.gen_range(bounds.y_min + r..bounds.y_max - r);
        let o = SceneObject::new(objects.len() as u32 + 1, x, y);
        let far_from_start = ((x - start.x).powi(2) + (y - start.y).powi(2)).sqrt() > 0.1;
        let free = objects
            .iter()
            .all(|q| (q.position - o.position).norm() > 2.0 * r + 0.01);
        if far_from_start && free {
            objects.push(o);
        }
    }
    Scene::new(bounds, objects, start).unwrap()
}
