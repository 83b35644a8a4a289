//! Acceptance suite. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use flowinv_core::detect::ttc_slope;
use flowinv_core::raster::{decode_ppm, encode_ppm};
use flowinv_core::scene::pyramid;
use flowinv_core::{
    analytic_flow, classify, colorize, finite_diff_flow, ground_truth, group_tracks, project, raster::default_range,
    shape_constancy, simulate_tracks, splat_map, tc_residual, to_invariant_domain, transform, CameraRig, FlowMode,
    InvariantPoint, MapKind, RgbImage, Scene, ScenePoint, SimulationParams, Thresholds, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and thresholds, pinned.
const AC1_MAX_REL_ERR: f64 = 1e-12;
const AC1_BUDGET: Duration = Duration::from_secs(1);
const AC2_ANALYTIC_TOL: f64 = 1e-9;
const AC2_FD_TOL: f64 = 5e-3;
const AC2_FD_DT: f64 = 1e-2;
const AC3_TC_RESIDUAL: f64 = 1e-12;
const AC3_SLOPE_TOL: f64 = 1e-9;
const AC4_DTS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
const AC4_RATIO: (f64, f64) = (3.0, 5.0);
const AC5_EPS_ABS: f64 = 0.01;
const AC5_NOISE: f64 = 0.005;
const AC5_SEED: u64 = 2024;
const AC5_MIN_DRIFT: f64 = 0.1;
const AC5_BUDGET: Duration = Duration::from_secs(1);
const AC6_TOL: f64 = 1e-9;
const AC6_BUDGET: Duration = Duration::from_secs(1);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

/// Stationary point at radial distance `d`, angle `theta`, depth `s`.
fn place(id: u32, d: f64, theta: f64, s: f64) -> ScenePoint {
    ScenePoint::stationary(id, Vec3::new(d * theta.cos(), d * theta.sin(), s))
}

fn invariant(p: &ScenePoint, rig: &CameraRig, t: f64) -> InvariantPoint {
    // Only the focal length crosses into the measurement side.
    to_invariant_domain(&analytic_flow(p, rig, t).unwrap(), rig.focal()).unwrap()
}

fn ac1_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases: Vec<(ScenePoint, CameraRig, f64, f64)> = (0..1000)
        .map(|i| {
            let d = rng.random_range(0.1..=50.0);
            let s = rng.random_range(0.5..=100.0);
            let speed = rng.random_range(0.1..=10.0);
            let rig = CameraRig::new(speed, 500.0, 1024, 1024).unwrap();
            (place(i, d, rng.random_range(-PI..PI), s), rig, d / speed, s / speed)
        })
        .collect();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (p, rig, tc_true, ttc_true) in &cases {
        let ip = invariant(p, rig, 0.0);
        worst = worst
            .max(((ip.tc - tc_true) / tc_true).abs())
            .max(((ip.ttc - ttc_true) / ttc_true).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst < AC1_MAX_REL_ERR && elapsed < AC1_BUDGET,
        format!(
            "max rel err {worst:.2e} < {AC1_MAX_REL_ERR:e}, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
        format!("max rel err {worst:.2e}, runtime {elapsed:?}"),
    )
}

fn pyramid_points() -> Vec<ScenePoint> {
    pyramid(Vec3::new(1.0, 0.5, 12.0), 1.5, 2.0, 20)
}

fn ac2_shape_constancy() -> Outcome {
    let pts = pyramid_points();
    if pts.len() != 5 + 8 * 20 {
        return Err(format!("pyramid has {} points", pts.len()));
    }
    let rig = CameraRig::new(1.0, 400.0, 640, 480).unwrap();
    let times = [0.0, 1.0, 2.0, 3.0];
    let analytic: Vec<Vec<InvariantPoint>> = times
        .iter()
        .map(|&t| pts.iter().map(|p| invariant(p, &rig, t)).collect())
        .collect();
    let fd: Vec<Vec<InvariantPoint>> = times
        .iter()
        .map(|&t| {
            pts.iter()
                .map(|p| {
                    let a = project(p, &rig, t).unwrap();
                    let b = project(p, &rig, t + AC2_FD_DT).unwrap();
                    to_invariant_domain(&finite_diff_flow(&a, &b).unwrap(), rig.focal()).unwrap()
                })
                .collect()
        })
        .collect();
    let (mut worst_a, mut worst_fd) = (0.0f64, 0.0f64);
    for i in 0..times.len() {
        for j in 0..times.len() {
            worst_a = worst_a.max(shape_constancy(&analytic[i], &analytic[j]).unwrap());
            worst_fd = worst_fd.max(shape_constancy(&fd[i], &fd[j]).unwrap());
        }
    }
    check(
        worst_a <= AC2_ANALYTIC_TOL && worst_fd <= AC2_FD_TOL,
        format!("analytic {worst_a:.2e} <= {AC2_ANALYTIC_TOL:e}, finite-diff {worst_fd:.2e} <= {AC2_FD_TOL:e}"),
        format!("analytic {worst_a:.2e}, finite-diff {worst_fd:.2e}"),
    )
}

fn ac3_constancy_and_drift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rig = CameraRig::new(1.0, 500.0, 1024, 1024).unwrap();
    let pts: Vec<ScenePoint> = (0..200)
        .map(|i| {
            place(
                i,
                rng.random_range(0.1..50.0),
                rng.random_range(-PI..PI),
                rng.random_range(20.0..100.0),
            )
        })
        .collect();
    let tracks = group_tracks(pts.iter().flat_map(|p| (0..10).map(|k| invariant(p, &rig, k as f64)))).unwrap();
    let (mut worst_res, mut worst_slope) = (0.0f64, 0.0f64);
    for ts in &tracks {
        if ts.len() != 10 {
            return Err(format!("track {} has {} samples", ts.point_id(), ts.len()));
        }
        worst_res = worst_res.max(tc_residual(ts).unwrap());
        worst_slope = worst_slope.max((ttc_slope(ts).unwrap() + 1.0).abs());
    }
    check(
        worst_res <= AC3_TC_RESIDUAL && worst_slope <= AC3_SLOPE_TOL,
        format!(
            "max tc residual {worst_res:.2e}, max |slope + 1| {worst_slope:.2e} over {} tracks",
            tracks.len()
        ),
        format!("max tc residual {worst_res:.2e}, max |slope + 1| {worst_slope:.2e}"),
    )
}

fn ac4_fd_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rig = CameraRig::new(1.0, 500.0, 1024, 1024).unwrap();
    let pts: Vec<(ScenePoint, f64)> = (0..300)
        .map(|i| {
            let d = rng.random_range(0.5..20.0);
            (
                place(i, d, rng.random_range(-PI..PI), rng.random_range(5.0..50.0)),
                d / rig.speed(),
            )
        })
        .collect();
    let max_err = |dt: f64| {
        pts.iter()
            .map(|(p, tc_true)| {
                let a = project(p, &rig, 1.0).unwrap();
                let b = project(p, &rig, 1.0 + dt).unwrap();
                let ip = to_invariant_domain(&finite_diff_flow(&a, &b).unwrap(), rig.focal()).unwrap();
                (ip.tc - tc_true).abs()
            })
            .fold(0.0, f64::max)
    };
    let errs: Vec<f64> = AC4_DTS.iter().map(|&dt| max_err(dt)).collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let in_band = ratios.iter().all(|r| (AC4_RATIO.0..=AC4_RATIO.1).contains(r));
    check(
        in_band,
        format!(
            "errors {:.2e} {:.2e} {:.2e}, ratios {:.3} {:.3}",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
        format!(
            "ratios {:.3} {:.3} outside [{}, {}]",
            ratios[0], ratios[1], AC4_RATIO.0, AC4_RATIO.1
        ),
    )
}

fn detection_scene() -> (Scene, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pts: Vec<ScenePoint> = (0..200)
        .map(|i| {
            place(
                i,
                rng.random_range(1.0..5.0),
                rng.random_range(-PI..PI),
                rng.random_range(10.0..40.0),
            )
        })
        .collect();
    let movers = [
        (Vec3::new(2.0, 0.0, 5.0), Vec3::new(-0.2, 0.0, 0.0)),
        (Vec3::new(-3.0, 1.0, 8.0), Vec3::new(0.4, 0.0, 0.0)),
        (Vec3::new(1.0, -2.0, 12.0), Vec3::new(0.0, 0.5, 0.0)),
        (Vec3::new(0.5, 2.0, 7.0), Vec3::new(0.3, -0.3, 0.0)),
        (Vec3::new(-2.0, -2.0, 15.0), Vec3::new(-0.5, -0.5, 0.0)),
    ];
    let mut moving_ids = Vec::new();
    for (k, (pos, vel)) in movers.into_iter().enumerate() {
        let id = 200 + k as u32;
        pts.push(ScenePoint::moving(id, pos, vel));
        moving_ids.push(id);
    }
    (
        Scene::new(pts, CameraRig::new(1.0, 500.0, 1024, 1024).unwrap()).unwrap(),
        moving_ids,
    )
}

fn precision_recall(scene: &Scene, moving: &[u32], noise: f64) -> Result<(f64, f64, usize), String> {
    let params = SimulationParams {
        frames: 4,
        dt: 1.0,
        mode: FlowMode::Analytic,
        noise_sigma: noise,
        seed: AC5_SEED,
    };
    let samples = simulate_tracks(scene, &params);
    let records = transform(&samples, scene.rig.focal());
    let tracks = group_tracks(records.iter().filter_map(|r| r.point())).map_err(|e| e.to_string())?;
    if tracks.len() != scene.points.len() || tracks.iter().any(|t| t.len() != 4) {
        return Err("not every point was tracked over all 4 frames".into());
    }
    let th = Thresholds {
        eps_abs: AC5_EPS_ABS,
        ..Thresholds::default()
    };
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for ts in &tracks {
        let label = classify(ts, th).map_err(|e| e.to_string())?;
        match (label.moving, moving.contains(&ts.point_id())) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = tp as f64 / (tp + fneg) as f64;
    Ok((precision, recall, tracks.len()))
}

fn ac5_detection() -> Outcome {
    let (scene, moving) = detection_scene();
    // Precondition: every mover's ground-truth Time-Clearance drifts by at
    // least 0.1 s over the window.
    for id in &moving {
        let p = scene.points.iter().find(|p| p.id == *id).unwrap();
        let tc = |t: f64| {
            let g = ground_truth(p, &scene.rig, t).unwrap();
            g.alpha.sin().powi(2) / g.alpha_dot
        };
        let drift = (0..4).map(|k| tc(k as f64)).fold(f64::NEG_INFINITY, f64::max)
            - (0..4).map(|k| tc(k as f64)).fold(f64::INFINITY, f64::min);
        if drift < AC5_MIN_DRIFT {
            return Err(format!("mover {id} drifts only {drift:.3} s"));
        }
    }
    let start = Instant::now();
    let clean = precision_recall(&scene, &moving, 0.0)?;
    let noisy = precision_recall(&scene, &moving, AC5_NOISE)?;
    let elapsed = start.elapsed();
    check(
        clean.0 == 1.0 && clean.1 == 1.0 && noisy.0 == 1.0 && noisy.1 == 1.0 && elapsed < AC5_BUDGET,
        format!(
            "{} tracks: noise-free P={} R={}, sigma={AC5_NOISE} P={} R={}, {:.1} ms",
            clean.2,
            clean.0,
            clean.1,
            noisy.0,
            noisy.1,
            elapsed.as_secs_f64() * 1e3
        ),
        format!(
            "noise-free P={} R={}, noisy P={} R={}, runtime {elapsed:?}",
            clean.0, clean.1, noisy.0, noisy.1
        ),
    )
}

fn ac6_raster_maps() -> Outcome {
    let size = 512u32;
    let rig = CameraRig::new(2.0, 256.0, size, size).unwrap();

    // Wall at s = 20 covering the frame; the grid includes the on-axis point.
    let n = 600i32;
    let spacing = 40.0 / n as f64;
    let wall: Vec<ScenePoint> = (-n / 2..=n / 2)
        .flat_map(|iy| (-n / 2..=n / 2).map(move |ix| (ix, iy)))
        .enumerate()
        .map(|(i, (ix, iy))| {
            ScenePoint::stationary(i as u32, Vec3::new(ix as f64 * spacing, iy as f64 * spacing, 20.0))
        })
        .collect();

    let start = Instant::now();
    let ttc = splat_map(&wall, &rig, 0.0, MapKind::TtcInv);
    let (lo, hi) = default_range(&ttc);
    let img = colorize(&ttc, lo, hi).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let wall_dev = ttc.valid_values().map(|v| (v - 0.1).abs()).fold(0.0, f64::max);
    let wall_finite = ttc.valid_values().all(f64::is_finite);
    let foe_masked = ttc.get(256, 256).is_none() && ttc.depth(256, 256) == 20.0;
    let tc = splat_map(&wall, &rig, 0.0, MapKind::TcInv);
    let tc_finite = tc.valid_values().all(f64::is_finite);
    let foe_masked = foe_masked && tc.get(256, 256).is_none();

    // Pole parallel to the motion axis at d = 4, plus a ring of radius 4:
    // every point has radial distance 4.
    let mut pole: Vec<ScenePoint> = (0..2000)
        .map(|k| ScenePoint::stationary(k, Vec3::new(4.0, 0.0, 5.0 + 0.05 * k as f64)))
        .collect();
    pole.extend((0..720).map(|k| {
        let a = k as f64 * PI / 360.0;
        ScenePoint::stationary(2000 + k, Vec3::new(4.0 * a.cos(), 4.0 * a.sin(), 30.0))
    }));
    let pole_map = splat_map(&pole, &rig, 0.0, MapKind::TcInv);
    let pole_dev = pole_map.valid_values().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    let pole_pixels = pole_map.valid_count();

    let ok = wall_dev <= AC6_TOL
        && pole_dev <= AC6_TOL
        && wall_finite
        && tc_finite
        && foe_masked
        && ttc.valid_count() > 200_000
        && pole_pixels > 300
        && img.width == 512
        && elapsed < AC6_BUDGET;
    check(
        ok,
        format!(
            "wall |1/TTC-0.1| {wall_dev:.1e} over {} px, pole |1/tc-0.5| {pole_dev:.1e} over {pole_pixels} px, FOE masked, 512x512 in {:.1} ms",
            ttc.valid_count(),
            elapsed.as_secs_f64() * 1e3
        ),
        format!(
            "wall dev {wall_dev:.1e} ({} px), pole dev {pole_dev:.1e} ({pole_pixels} px), finite {wall_finite}/{tc_finite}, FOE masked {foe_masked}, runtime {elapsed:?}",
            ttc.valid_count()
        ),
    )
}

fn run_demo(dir: &Path, threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_flowinv"))
        .args(["demo", "--seed", "17", "--noise", "0.005", "--out"])
        .arg(dir)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(())
}

fn artifacts(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "ppm")))
        .collect();
    files.sort();
    files
}

fn ac7_determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    run_demo(&a, "1")?;
    run_demo(&b, "1")?;
    run_demo(&c, "4")?;
    let files = artifacts(&a);
    let names = |d: &Path| {
        artifacts(d)
            .iter()
            .map(|p| p.file_name().unwrap().to_owned())
            .collect::<Vec<_>>()
    };
    if names(&a) != names(&b) || names(&a) != names(&c) || files.len() < 20 {
        return Err(format!("artifact sets differ or are too small ({} files)", files.len()));
    }
    let mut differing = Vec::new();
    for f in &files {
        let name = f.file_name().unwrap();
        let bytes = fs::read(f).unwrap();
        if bytes != fs::read(b.join(name)).unwrap() || bytes != fs::read(c.join(name)).unwrap() {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    check(
        differing.is_empty(),
        format!(
            "{} CSV/PPM files byte-identical across runs and 1 vs 4 threads",
            files.len()
        ),
        format!("differing: {differing:?}"),
    )
}

fn ac8_ppm_conformance() -> Outcome {
    let mut red = RgbImage::new(1, 1);
    red.put(0, 0, [255, 0, 0]);
    let exact = encode_ppm(&red) == b"P6\n1 1\n255\n\xff\x00\x00";

    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    run_demo(tmp.path(), "2")?;
    let mut checked = 0;
    for path in artifacts(tmp.path())
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
    {
        let bytes = fs::read(path).unwrap();
        let ours = decode_ppm(&bytes).map_err(|e| e.to_string())?;
        let theirs = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm)
            .map_err(|e| format!("{}: {e}", path.display()))?
            .to_rgb8();
        if theirs.width() as usize != ours.width
            || theirs.height() as usize != ours.height
            || theirs.as_raw() != &ours.data
        {
            return Err(format!("{} differs under the independent reader", path.display()));
        }
        if encode_ppm(&ours) != bytes {
            return Err(format!("{} does not re-encode identically", path.display()));
        }
        checked += 1;
    }
    check(
        exact && checked > 0,
        format!("1x1 red fixture bit-exact; {checked} demo PPMs round-trip through the image crate"),
        format!("fixture exact {exact}, checked {checked}"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1 invariant-oracle equivalence", ac1_oracle_equivalence),
        ("AC2 shape constancy", ac2_shape_constancy),
        ("AC3 Time-Clearance constancy and TTC drift", ac3_constancy_and_drift),
        ("AC4 finite-difference convergence", ac4_fd_convergence),
        ("AC5 moving-object detection", ac5_detection),
        ("AC6 raster maps", ac6_raster_maps),
        ("AC7 determinism", ac7_determinism),
        ("AC8 PPM conformance", ac8_ppm_conformance),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
