//! World model and analytic ground truth.
//!
//! The camera starts at the world origin and translates along +z (its optical
//! axis) at constant speed. Every quantity here is exact geometry; the
//! measurement side of the crate (`invariants`, `detect`) never sees it.

use std::ops::{Add, Mul, Sub};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// A world point, optionally moving with constant world velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePoint {
    pub id: u32,
    /// World position at t = 0.
    pub position0: Vec3,
    pub velocity: Vec3,
    pub tag: Option<String>,
}

impl ScenePoint {
    pub fn stationary(id: u32, position0: Vec3) -> Self {
        Self {
            id,
            position0,
            velocity: Vec3::ZERO,
            tag: None,
        }
    }

    pub fn moving(id: u32, position0: Vec3, velocity: Vec3) -> Self {
        Self {
            id,
            position0,
            velocity,
            tag: None,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.velocity == Vec3::ZERO
    }
}

/// Rectilinear camera: translates along +z, focus of expansion at the image
/// center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRig {
    speed: f64,
    focal: f64,
    width: u32,
    height: u32,
}

impl CameraRig {
    pub fn new(speed: f64, focal: f64, width: u32, height: u32) -> Result<Self, SceneError> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(SceneError::NonpositiveSpeed(speed));
        }
        if !(focal > 0.0 && focal.is_finite()) {
            return Err(SceneError::NonpositiveFocal(focal));
        }
        if width == 0 || height == 0 {
            return Err(SceneError::EmptyRaster { width, height });
        }
        Ok(Self {
            speed,
            focal,
            width,
            height,
        })
    }

    /// Ground-truth translation speed. Only simulation code reads this.
    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn position_at(&self, t: f64) -> Vec3 {
        Vec3::new(0.0, 0.0, self.speed * t)
    }
}

/// Exact cylinder-coordinate description of a point relative to the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthGeometry {
    /// Radial distance from the motion axis.
    pub d: f64,
    /// Depth ahead of the camera.
    pub s: f64,
    /// Range.
    pub r: f64,
    /// Angle between the motion axis and the line of sight.
    pub alpha: f64,
    pub alpha_dot: f64,
    /// Radial-line angle in the image plane.
    pub theta: f64,
    pub on_axis: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub points: Vec<ScenePoint>,
    pub rig: CameraRig,
}

impl Scene {
    pub fn new(points: Vec<ScenePoint>, rig: CameraRig) -> Result<Self, SceneError> {
        if points.is_empty() {
            return Err(SceneError::EmptyScene);
        }
        let mut ids: Vec<u32> = points.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(SceneError::DuplicateId(w[0]));
        }
        Ok(Self { points, rig })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("camera speed must be positive, got {0}")]
    NonpositiveSpeed(f64),
    #[error("focal length must be positive, got {0}")]
    NonpositiveFocal(f64),
    #[error("raster must be non-empty, got {width}x{height}")]
    EmptyRaster { width: u32, height: u32 },
    #[error("scene has no points")]
    EmptyScene,
    #[error("duplicate point id {0}")]
    DuplicateId(u32),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: camera declared more than once")]
    DuplicateCamera { line: usize },
    #[error("line {line}: camera must be declared before any geometry")]
    CameraNotFirst { line: usize },
    #[error("scene has no camera line")]
    MissingCamera,
    #[error("point is behind the camera (depth {0})")]
    BehindCamera(f64),
}

/// Camera-frame position and velocity of `p` at time `t`.
pub fn relative_state(p: &ScenePoint, rig: &CameraRig, t: f64) -> (Vec3, Vec3) {
    let cam_vel = Vec3::new(0.0, 0.0, rig.speed);
    let pos = p.position0 + p.velocity * t - cam_vel * t;
    let vel = p.velocity - cam_vel;
    (pos, vel)
}

/// Exact (d, s, r, alpha, alpha_dot, theta) of `p` at time `t`.
///
/// alpha_dot uses the general quotient rule `(d' s - d s') / r^2`, so it is
/// valid for moving points too. For stationary points it reduces to
/// `d * speed / r^2`.
pub fn ground_truth(p: &ScenePoint, rig: &CameraRig, t: f64) -> Result<GroundTruthGeometry, SceneError> {
    let (pos, vel) = relative_state(p, rig, t);
    let s = pos.z;
    if s <= 0.0 {
        return Err(SceneError::BehindCamera(s));
    }
    let d = pos.x.hypot(pos.y);
    let r = d.hypot(s);
    if d == 0.0 {
        return Ok(GroundTruthGeometry {
            d,
            s,
            r,
            alpha: 0.0,
            alpha_dot: 0.0,
            theta: 0.0,
            on_axis: true,
        });
    }
    let d_dot = (pos.x * vel.x + pos.y * vel.y) / d;
    let s_dot = vel.z;
    let alpha_dot = (d_dot * s - d * s_dot) / (d * d + s * s);
    Ok(GroundTruthGeometry {
        d,
        s,
        r,
        alpha: d.atan2(s),
        alpha_dot,
        theta: pos.y.atan2(pos.x),
        on_axis: false,
    })
}

/// Points on the surface of an axis-aligned box: a uniform
/// `samples_per_edge`-per-edge lattice restricted to the six faces.
///
/// Ids are left at 0; the caller assigns them.
pub fn expand_box(center: Vec3, size: Vec3, samples_per_edge: usize, velocity: Vec3) -> Vec<ScenePoint> {
    assert!(samples_per_edge >= 2, "box needs at least 2 samples per edge");
    let n = samples_per_edge;
    let last = n - 1;
    let coord = |c: f64, extent: f64, i: usize| c - extent / 2.0 + extent * i as f64 / last as f64;
    let mut out = Vec::with_capacity(n * n * n - (n - 2).pow(3));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let on_face = [i, j, k].iter().any(|&q| q == 0 || q == last);
                if !on_face {
                    continue;
                }
                let pos = Vec3::new(
                    coord(center.x, size.x, i),
                    coord(center.y, size.y, j),
                    coord(center.z, size.z, k),
                );
                out.push(ScenePoint::moving(0, pos, velocity));
            }
        }
    }
    out
}

/// Square pyramid: four base corners, an apex, and `per_edge` interior
/// samples along each of its eight edges.
pub fn pyramid(base_center: Vec3, half_base: f64, height: f64, per_edge: usize) -> Vec<ScenePoint> {
    let h = half_base;
    let corners = [
        base_center + Vec3::new(-h, -h, 0.0),
        base_center + Vec3::new(h, -h, 0.0),
        base_center + Vec3::new(h, h, 0.0),
        base_center + Vec3::new(-h, h, 0.0),
    ];
    // Apex points back toward the camera.
    let apex = base_center + Vec3::new(0.0, 0.0, -height);
    let mut verts: Vec<Vec3> = corners.to_vec();
    verts.push(apex);
    let mut edges: Vec<(Vec3, Vec3)> = (0..4).map(|i| (corners[i], corners[(i + 1) % 4])).collect();
    edges.extend(corners.iter().map(|&c| (c, apex)));
    for (a, b) in edges {
        for k in 1..=per_edge {
            let f = k as f64 / (per_edge + 1) as f64;
            verts.push(a + (b - a) * f);
        }
    }
    verts
        .into_iter()
        .enumerate()
        .map(|(i, p)| ScenePoint::stationary(i as u32, p))
        .collect()
}

/// Parses the line-oriented scene format:
///
/// ```text
/// camera speed=<f> focal=<f> width=<i> height=<i>
/// point <x> <y> <z> [vx vy vz]
/// box <cx> <cy> <cz> <sx> <sy> <sz> samples=<i> [vx vy vz]
/// ```
///
/// `#` starts a comment. Ids are assigned in file order from 0.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let mut rig: Option<CameraRig> = None;
    let mut points = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let keyword = toks.next().unwrap_or_default();
        let rest: Vec<&str> = toks.collect();
        let syntax = |msg: String| SceneError::Syntax { line: line_no, msg };

        match keyword {
            "camera" => {
                if rig.is_some() {
                    return Err(SceneError::DuplicateCamera { line: line_no });
                }
                if !points.is_empty() {
                    return Err(SceneError::CameraNotFirst { line: line_no });
                }
                rig = Some(parse_camera(&rest).map_err(|e| match e {
                    SceneError::Syntax { msg, .. } => syntax(msg),
                    other => other,
                })?);
            }
            "point" | "box" => {
                if rig.is_none() {
                    return Err(SceneError::CameraNotFirst { line: line_no });
                }
                let (nums, samples) = split_numbers(&rest).map_err(syntax)?;
                if keyword == "point" {
                    if samples.is_some() {
                        return Err(syntax("point takes no samples= key".into()));
                    }
                    let (pos, vel) = match nums.as_slice() {
                        [x, y, z] => (Vec3::new(*x, *y, *z), Vec3::ZERO),
                        [x, y, z, vx, vy, vz] => (Vec3::new(*x, *y, *z), Vec3::new(*vx, *vy, *vz)),
                        _ => return Err(syntax(format!("point expects 3 or 6 numbers, got {}", nums.len()))),
                    };
                    points.push(ScenePoint::moving(points.len() as u32, pos, vel));
                } else {
                    let samples = samples.ok_or_else(|| syntax("box requires samples=<i>".into()))?;
                    if samples < 2 {
                        return Err(syntax(format!("box samples must be >= 2, got {samples}")));
                    }
                    let (center, size, vel) = match nums.as_slice() {
                        [cx, cy, cz, sx, sy, sz] => (Vec3::new(*cx, *cy, *cz), Vec3::new(*sx, *sy, *sz), Vec3::ZERO),
                        [cx, cy, cz, sx, sy, sz, vx, vy, vz] => (
                            Vec3::new(*cx, *cy, *cz),
                            Vec3::new(*sx, *sy, *sz),
                            Vec3::new(*vx, *vy, *vz),
                        ),
                        _ => return Err(syntax(format!("box expects 6 or 9 numbers, got {}", nums.len()))),
                    };
                    if !(size.x > 0.0 && size.y > 0.0 && size.z > 0.0) {
                        return Err(syntax("box size components must be positive".into()));
                    }
                    for mut p in expand_box(center, size, samples, vel) {
                        p.id = points.len() as u32;
                        points.push(p);
                    }
                }
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }

    let rig = rig.ok_or(SceneError::MissingCamera)?;
    Scene::new(points, rig)
}

fn parse_camera(fields: &[&str]) -> Result<CameraRig, SceneError> {
    let syntax = |msg: String| SceneError::Syntax { line: 0, msg };
    let (mut speed, mut focal, mut width, mut height) = (None, None, None, None);
    for f in fields {
        let (key, val) = f
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected key=value, got `{f}`")))?;
        match key {
            "speed" => speed = Some(parse_f64(val).map_err(syntax)?),
            "focal" => focal = Some(parse_f64(val).map_err(syntax)?),
            "width" => width = Some(val.parse::<u32>().map_err(|_| syntax(format!("bad width `{val}`")))?),
            "height" => height = Some(val.parse::<u32>().map_err(|_| syntax(format!("bad height `{val}`")))?),
            _ => return Err(syntax(format!("unknown camera key `{key}`"))),
        }
    }
    let missing = |k: &str| syntax(format!("camera is missing `{k}`"));
    CameraRig::new(
        speed.ok_or_else(|| missing("speed"))?,
        focal.ok_or_else(|| missing("focal"))?,
        width.ok_or_else(|| missing("width"))?,
        height.ok_or_else(|| missing("height"))?,
    )
}

fn parse_f64(tok: &str) -> Result<f64, String> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("bad number `{tok}`")),
    }
}

fn split_numbers(toks: &[&str]) -> Result<(Vec<f64>, Option<usize>), String> {
    let mut nums = Vec::new();
    let mut samples = None;
    for t in toks {
        if let Some(v) = t.strip_prefix("samples=") {
            samples = Some(v.parse::<usize>().map_err(|_| format!("bad samples `{v}`"))?);
        } else {
            nums.push(parse_f64(t)?);
        }
    }
    Ok((nums, samples))
}
