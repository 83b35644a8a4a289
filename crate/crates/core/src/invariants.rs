//! Time-Clearance and Time-to-Contact from radial optical flow.
//!
//! Everything here is a function of image measurements (rho, rho_dot,
//! theta) and the focal length. Nothing takes the camera speed: the
//! invariants are times, and the unknown speed cancels out of them.

use thiserror::Error;

use crate::projection::FlowSample;

/// |alpha_dot| at or below this is treated as no flow.
pub const EPS_MIN_ALPHA_DOT: f64 = 1e-12;

/// A point in the invariant domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantPoint {
    pub point_id: u32,
    pub t: f64,
    pub ttc: f64,
    /// Time-Clearance.
    pub tc: f64,
    pub theta: f64,
}

/// Cartesian form of an [`InvariantPoint`]: `(tc cos theta, tc sin theta, ttc)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddedPoint {
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
}

impl EmbeddedPoint {
    pub fn distance(&self, other: &EmbeddedPoint) -> f64 {
        let (dx, dy, dz) = (self.ex - other.ex, self.ey - other.ey, self.ez - other.ez);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum InvariantError {
    #[error("point lies on the motion axis (at the FOE)")]
    OnAxis,
    #[error("flow too small to invert (alpha_dot = {0})")]
    DegenerateFlow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvariantStatus {
    Ok,
    OnAxis,
    Degenerate,
}

impl InvariantStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            InvariantStatus::Ok => "ok",
            InvariantStatus::OnAxis => "on_axis",
            InvariantStatus::Degenerate => "degenerate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(InvariantStatus::Ok),
            "on_axis" => Some(InvariantStatus::OnAxis),
            "degenerate" => Some(InvariantStatus::Degenerate),
            _ => None,
        }
    }
}

impl From<InvariantError> for InvariantStatus {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::OnAxis => InvariantStatus::OnAxis,
            InvariantError::DegenerateFlow(_) => InvariantStatus::Degenerate,
        }
    }
}

/// Angle between the motion axis and the line of sight, from the radial
/// image distance.
pub fn alpha_from_rho(rho: f64, focal: f64) -> f64 {
    (rho / focal).atan()
}

/// Inverts `rho = f tan(alpha)` for the angular rate.
pub fn alpha_dot_from_flow(rho: f64, rho_dot: f64, focal: f64) -> f64 {
    rho_dot * focal / (focal * focal + rho * rho)
}

fn check(alpha: f64, alpha_dot: f64) -> Result<(), InvariantError> {
    if alpha == 0.0 {
        return Err(InvariantError::OnAxis);
    }
    if alpha_dot.abs() <= EPS_MIN_ALPHA_DOT || !alpha_dot.is_finite() {
        return Err(InvariantError::DegenerateFlow(alpha_dot));
    }
    Ok(())
}

/// `sin^2(alpha) / alpha_dot`; equals d/|t| for a stationary point.
pub fn time_clearance(alpha: f64, alpha_dot: f64) -> Result<f64, InvariantError> {
    check(alpha, alpha_dot)?;
    let s = alpha.sin();
    Ok(s * s / alpha_dot)
}

/// `sin(2 alpha) / (2 alpha_dot)`; equals s/|t| for a stationary point.
pub fn time_to_contact(alpha: f64, alpha_dot: f64) -> Result<f64, InvariantError> {
    check(alpha, alpha_dot)?;
    Ok((2.0 * alpha).sin() / (2.0 * alpha_dot))
}

/// Maps one flow sample into the invariant domain.
///
/// Negative `rho_dot` (motion toward the FOE) yields negative times and is
/// passed through untouched.
pub fn to_invariant_domain(fs: &FlowSample, focal: f64) -> Result<InvariantPoint, InvariantError> {
    if fs.on_axis() {
        return Err(InvariantError::OnAxis);
    }
    let alpha = alpha_from_rho(fs.rho, focal);
    let alpha_dot = alpha_dot_from_flow(fs.rho, fs.rho_dot, focal);
    Ok(InvariantPoint {
        point_id: fs.point_id,
        t: fs.t,
        ttc: time_to_contact(alpha, alpha_dot)?,
        tc: time_clearance(alpha, alpha_dot)?,
        theta: fs.theta,
    })
}

pub fn embed(ip: &InvariantPoint) -> EmbeddedPoint {
    let (sin, cos) = ip.theta.sin_cos();
    EmbeddedPoint {
        ex: ip.tc * cos,
        ey: ip.tc * sin,
        ez: ip.ttc,
    }
}
