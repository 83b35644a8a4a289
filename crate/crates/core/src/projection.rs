//! Pinhole projection and synthesis of the measurable radial flow
//! (rho, theta, rho_dot).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::scene::{ground_truth, relative_state, CameraRig, SceneError, ScenePoint};

/// Image-plane position relative to the principal point (the FOE).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub t: f64,
    pub point_id: u32,
}

impl ImagePoint {
    pub fn rho(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn theta(&self) -> f64 {
        self.v.atan2(self.u)
    }

    pub fn in_frame(&self, rig: &CameraRig) -> bool {
        self.u.abs() <= rig.width() as f64 / 2.0 && self.v.abs() <= rig.height() as f64 / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowQuality {
    Analytic,
    FiniteDiff,
    Noisy,
}

impl FlowQuality {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowQuality::Analytic => "analytic",
            FlowQuality::FiniteDiff => "finite_diff",
            FlowQuality::Noisy => "noisy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "analytic" => Some(FlowQuality::Analytic),
            "finite_diff" => Some(FlowQuality::FiniteDiff),
            "noisy" => Some(FlowQuality::Noisy),
            _ => None,
        }
    }
}

/// One radial-flow measurement. `u`, `v` locate the generating image point
/// and are carried for output only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub point_id: u32,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub rho: f64,
    pub theta: f64,
    pub rho_dot: f64,
    pub quality: FlowQuality,
}

impl FlowSample {
    pub fn on_axis(&self) -> bool {
        self.rho == 0.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("point {point_id} is behind the camera at t={t} (depth {depth})")]
    BehindCamera { point_id: u32, t: f64, depth: f64 },
    #[error("cannot difference tracks {0} and {1}")]
    MismatchedTrack(u32, u32),
    #[error("finite difference needs dt > 0, got {0}")]
    NonpositiveDt(f64),
}

pub fn project(p: &ScenePoint, rig: &CameraRig, t: f64) -> Result<ImagePoint, FlowError> {
    let (pos, _) = relative_state(p, rig, t);
    if pos.z <= 0.0 {
        return Err(FlowError::BehindCamera {
            point_id: p.id,
            t,
            depth: pos.z,
        });
    }
    let f = rig.focal();
    Ok(ImagePoint {
        u: f * pos.x / pos.z,
        v: f * pos.y / pos.z,
        t,
        point_id: p.id,
    })
}

/// Exact radial flow from ground truth: `rho = f tan(alpha)` and its time
/// derivative `rho_dot = alpha_dot (f^2 + rho^2) / f`.
pub fn analytic_flow(p: &ScenePoint, rig: &CameraRig, t: f64) -> Result<FlowSample, FlowError> {
    let img = project(p, rig, t)?;
    let g = ground_truth(p, rig, t).map_err(|e| match e {
        SceneError::BehindCamera(depth) => FlowError::BehindCamera {
            point_id: p.id,
            t,
            depth,
        },
        other => unreachable!("ground_truth returned {other}"),
    })?;
    let f = rig.focal();
    let (rho, rho_dot) = if g.on_axis {
        (0.0, 0.0)
    } else {
        let rho = f * g.d / g.s;
        (rho, g.alpha_dot * (f * f + rho * rho) / f)
    };
    Ok(FlowSample {
        point_id: p.id,
        t,
        u: img.u,
        v: img.v,
        rho,
        theta: g.theta,
        rho_dot,
        quality: FlowQuality::Analytic,
    })
}

/// Central difference of two projections of the same point, stamped at the
/// interval midpoint.
pub fn finite_diff_flow(a: &ImagePoint, b: &ImagePoint) -> Result<FlowSample, FlowError> {
    if a.point_id != b.point_id {
        return Err(FlowError::MismatchedTrack(a.point_id, b.point_id));
    }
    let dt = b.t - a.t;
    if dt.is_nan() || dt <= 0.0 {
        return Err(FlowError::NonpositiveDt(dt));
    }
    let (ra, rb) = (a.rho(), b.rho());
    Ok(FlowSample {
        point_id: a.point_id,
        t: a.t + dt / 2.0,
        u: (a.u + b.u) / 2.0,
        v: (a.v + b.v) / 2.0,
        rho: (ra + rb) / 2.0,
        theta: a.theta(),
        rho_dot: (rb - ra) / dt,
        quality: FlowQuality::FiniteDiff,
    })
}

/// Multiplicative Gaussian noise on `rho_dot`, relative standard deviation
/// `sigma_rho_dot`.
///
/// The generator is keyed on `(seed, point_id, t)` so a sample's noise does
/// not depend on evaluation order.
pub fn add_flow_noise(sample: &FlowSample, sigma_rho_dot: f64, seed: u64) -> FlowSample {
    assert!(sigma_rho_dot >= 0.0, "noise sigma must be non-negative");
    if sigma_rho_dot == 0.0 {
        return *sample;
    }
    let z: f64 = StandardNormal.sample(&mut sample_rng(seed, sample.point_id, sample.t));
    FlowSample {
        rho_dot: sample.rho_dot * (1.0 + sigma_rho_dot * z),
        quality: FlowQuality::Noisy,
        ..*sample
    }
}

fn sample_rng(seed: u64, point_id: u32, t: f64) -> ChaCha8Rng {
    // Nanosecond quantization keeps the key stable across float noise in t.
    let tq = (t * 1e9).round() as i64 as u64;
    let key = splitmix64(splitmix64(splitmix64(seed) ^ u64::from(point_id)) ^ tq);
    ChaCha8Rng::seed_from_u64(key)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
