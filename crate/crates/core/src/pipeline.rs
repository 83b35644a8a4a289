//! Batch stages shared by the CLI, tests and benches: scene to flow tracks,
//! and flow tracks to invariants.

use rayon::prelude::*;

use crate::invariants::to_invariant_domain;
use crate::io::InvariantRecord;
use crate::projection::{add_flow_noise, analytic_flow, finite_diff_flow, project, FlowSample};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMode {
    Analytic,
    FiniteDiff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationParams {
    pub frames: usize,
    pub dt: f64,
    pub mode: FlowMode,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Flow samples for frames `t = k * dt`, `k < frames`, frame-major then in
/// scene order.
///
/// Analytic mode emits one sample per visible point per frame. Finite-
/// difference mode differences consecutive frames, emitting `frames - 1`
/// midpoint-stamped samples per point that is visible at both ends. Noise is
/// applied last.
pub fn simulate_tracks(scene: &Scene, params: &SimulationParams) -> Vec<FlowSample> {
    let rig = &scene.rig;
    let frame_count = match params.mode {
        FlowMode::Analytic => params.frames,
        FlowMode::FiniteDiff => params.frames.saturating_sub(1),
    };
    (0..frame_count)
        .flat_map(|k| {
            let t = k as f64 * params.dt;
            scene
                .points
                .par_iter()
                .filter_map(|p| {
                    let sample = match params.mode {
                        FlowMode::Analytic => {
                            let img = project(p, rig, t).ok()?;
                            if !img.in_frame(rig) {
                                return None;
                            }
                            analytic_flow(p, rig, t).ok()?
                        }
                        FlowMode::FiniteDiff => {
                            let a = project(p, rig, t).ok()?;
                            let b = project(p, rig, (k + 1) as f64 * params.dt).ok()?;
                            if !(a.in_frame(rig) && b.in_frame(rig)) {
                                return None;
                            }
                            finite_diff_flow(&a, &b).ok()?
                        }
                    };
                    Some(add_flow_noise(&sample, params.noise_sigma, params.seed))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Maps every flow sample into the invariant domain, recording why a
/// sample could not be mapped. Needs only the focal length.
pub fn transform(samples: &[FlowSample], focal: f64) -> Vec<InvariantRecord> {
    samples
        .par_iter()
        .map(|fs| match to_invariant_domain(fs, focal) {
            Ok(ip) => InvariantRecord::ok(&ip),
            Err(e) => InvariantRecord::failed(fs.point_id, fs.t, fs.theta, e.into()),
        })
        .collect()
}
