//! Scene fixtures shared by the criterion benches.

use flowinv_core::{CameraRig, Scene, ScenePoint, Vec3};

/// Fronto-parallel wall of `n x n` points at depth `depth`, filling a
/// `size x size` raster.
pub fn wall_scene(size: u32, n: usize, depth: f64, speed: f64) -> Scene {
    let focal = size as f64 / 2.0;
    let half_extent = depth * 0.5 * size as f64 / focal;
    let points = (0..n * n)
        .map(|i| {
            let (ix, iy) = (i % n, i / n);
            let x = -half_extent + 2.0 * half_extent * (ix as f64 + 0.5) / n as f64;
            let y = -half_extent + 2.0 * half_extent * (iy as f64 + 0.5) / n as f64;
            ScenePoint::stationary(i as u32, Vec3::new(x, y, depth))
        })
        .collect();
    Scene::new(points, CameraRig::new(speed, focal, size, size).expect("valid rig")).expect("non-empty scene")
}
