//! Constancy analysis in the invariant domain and moving-point detection.
//!
//! For a stationary point, Time-Clearance is constant and TTC decays at unit
//! rate. Tracks that break either property are flagged as moving. Only
//! invariant-domain data is consumed here.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::invariants::{embed, InvariantPoint};

pub const DEFAULT_EPS_ABS: f64 = 0.01;
pub const DEFAULT_EPS_REL: f64 = 0.02;

/// Time-ordered invariant samples of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSeries {
    point_id: u32,
    samples: Vec<InvariantPoint>,
}

impl TrackSeries {
    pub fn new(point_id: u32, samples: Vec<InvariantPoint>) -> Result<Self, DetectError> {
        if let Some(s) = samples.iter().find(|s| s.point_id != point_id) {
            return Err(DetectError::ForeignSample {
                track: point_id,
                sample: s.point_id,
            });
        }
        if let Some(w) = samples
            .windows(2)
            .find(|w| w[1].t.partial_cmp(&w[0].t) != Some(std::cmp::Ordering::Greater))
        {
            return Err(DetectError::NonIncreasingTime { point_id, t: w[1].t });
        }
        Ok(Self { point_id, samples })
    }

    pub fn point_id(&self) -> u32 {
        self.point_id
    }

    pub fn samples(&self) -> &[InvariantPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn require_two(&self) -> Result<(), DetectError> {
        if self.samples.len() < 2 {
            return Err(DetectError::TooShort {
                point_id: self.point_id,
                len: self.samples.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub eps_abs: f64,
    pub eps_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_abs: DEFAULT_EPS_ABS,
            eps_rel: DEFAULT_EPS_REL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionLabel {
    pub point_id: u32,
    pub moving: bool,
    pub tc_residual: f64,
    pub ttc_residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("track {point_id} has {len} sample(s); at least 2 are needed")]
    TooShort { point_id: u32, len: usize },
    #[error("track {point_id}: timestamps must strictly increase (at t={t})")]
    NonIncreasingTime { point_id: u32, t: f64 },
    #[error("track {track} contains a sample of point {sample}")]
    ForeignSample { track: u32, sample: u32 },
    #[error("frames do not cover the same point ids (first difference: {0})")]
    IdMismatch(u32),
    #[error("frame contains point {0} twice")]
    DuplicateId(u32),
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn max_dev_from_median(mut values: Vec<f64>) -> (f64, f64) {
    let m = median(&mut values);
    let dev = values.iter().map(|v| (v - m).abs()).fold(0.0, f64::max);
    (dev, m)
}

/// Largest deviation of Time-Clearance from its track median.
pub fn tc_residual(ts: &TrackSeries) -> Result<f64, DetectError> {
    ts.require_two()?;
    Ok(max_dev_from_median(ts.samples.iter().map(|s| s.tc).collect()).0)
}

/// Largest deviation of the drift-compensated TTC, `ttc(t) + t`, from its
/// track median.
pub fn ttc_drift_residual(ts: &TrackSeries) -> Result<f64, DetectError> {
    ts.require_two()?;
    Ok(max_dev_from_median(ts.samples.iter().map(|s| s.ttc + s.t).collect()).0)
}

/// Least-squares slope of ttc against t. A stationary point gives -1.
pub fn ttc_slope(ts: &TrackSeries) -> Result<f64, DetectError> {
    ts.require_two()?;
    let n = ts.samples.len() as f64;
    let mean_t = ts.samples.iter().map(|s| s.t).sum::<f64>() / n;
    let mean_y = ts.samples.iter().map(|s| s.ttc).sum::<f64>() / n;
    let (num, den) = ts.samples.iter().fold((0.0, 0.0), |(num, den), s| {
        let dt = s.t - mean_t;
        (num + dt * (s.ttc - mean_y), den + dt * dt)
    });
    Ok(num / den)
}

/// Flags a track as moving when either residual exceeds its threshold.
///
/// Each residual is compared against `eps_abs + eps_rel * |median|` of its
/// own quantity (tc, or ttc + t), so the relative part scales with the size
/// of the quantity being tested.
pub fn classify(ts: &TrackSeries, thresholds: Thresholds) -> Result<DetectionLabel, DetectError> {
    ts.require_two()?;
    let (tc_res, tc_med) = max_dev_from_median(ts.samples.iter().map(|s| s.tc).collect());
    let (ttc_res, ttc_med) = max_dev_from_median(ts.samples.iter().map(|s| s.ttc + s.t).collect());
    let eps_tc = thresholds.eps_abs + thresholds.eps_rel * tc_med.abs();
    let eps_ttc = thresholds.eps_abs + thresholds.eps_rel * ttc_med.abs();
    Ok(DetectionLabel {
        point_id: ts.point_id,
        moving: tc_res > eps_tc || ttc_res > eps_ttc,
        tc_residual: tc_res,
        ttc_residual: ttc_res,
    })
}

/// Classifies every track in parallel; output order follows input order.
pub fn classify_all(tracks: &[TrackSeries], thresholds: Thresholds) -> Vec<Result<DetectionLabel, DetectError>> {
    tracks.par_iter().map(|ts| classify(ts, thresholds)).collect()
}

/// Groups invariant points into per-id tracks, sorted by id then time.
pub fn group_tracks<I>(points: I) -> Result<Vec<TrackSeries>, DetectError>
where
    I: IntoIterator<Item = InvariantPoint>,
{
    let mut by_id: BTreeMap<u32, Vec<InvariantPoint>> = BTreeMap::new();
    for p in points {
        by_id.entry(p.point_id).or_default().push(p);
    }
    by_id
        .into_iter()
        .map(|(id, mut samples)| {
            samples.sort_by(|a, b| a.t.total_cmp(&b.t));
            TrackSeries::new(id, samples)
        })
        .collect()
}

/// Per-point embedded displacement between two frames after TTC drift
/// compensation, sorted by decreasing displacement (ties by id).
///
/// Frame B's TTC is shifted by `t_b - t_a` per matched pair before
/// embedding, so a stationary scene yields zero everywhere.
pub fn shape_displacements(
    frame_a: &[InvariantPoint],
    frame_b: &[InvariantPoint],
) -> Result<Vec<(u32, f64)>, DetectError> {
    let index = |frame: &[InvariantPoint]| -> Result<BTreeMap<u32, InvariantPoint>, DetectError> {
        let mut m = BTreeMap::new();
        for p in frame {
            if m.insert(p.point_id, *p).is_some() {
                return Err(DetectError::DuplicateId(p.point_id));
            }
        }
        Ok(m)
    };
    let a = index(frame_a)?;
    let b = index(frame_b)?;
    if let Some(id) = a
        .keys()
        .find(|id| !b.contains_key(id))
        .or_else(|| b.keys().find(|id| !a.contains_key(id)))
    {
        return Err(DetectError::IdMismatch(*id));
    }
    let mut out: Vec<(u32, f64)> = a
        .values()
        .map(|pa| {
            let pb = &b[&pa.point_id];
            let shifted = InvariantPoint {
                ttc: pb.ttc + (pb.t - pa.t),
                ..*pb
            };
            (pa.point_id, embed(pa).distance(&embed(&shifted)))
        })
        .collect();
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(out)
}

/// Largest embedded displacement between two drift-compensated frames.
/// Zero (up to rounding) when the scene is rigid and stationary.
pub fn shape_constancy(frame_a: &[InvariantPoint], frame_b: &[InvariantPoint]) -> Result<f64, DetectError> {
    Ok(shape_displacements(frame_a, frame_b)?.first().map_or(0.0, |d| d.1))
}
