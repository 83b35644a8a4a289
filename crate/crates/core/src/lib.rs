//! Optical-flow motion invariants for a camera translating along its
//! optical axis.
//!
//! Two quantities computed from radial image flow alone, Time-to-Contact
//! (`sin(2a) / 2a'`) and Time-Clearance (`sin^2(a) / a'`), place every
//! stationary scene point at a position that does not change as the camera
//! moves (TTC decays at unit rate, which is compensated). Moving points break
//! that constancy and can be picked out without knowing the camera speed.
//!
//! - [`scene`]: world model, camera kinematics, analytic ground truth
//! - [`projection`]: pinhole projection and radial-flow synthesis
//! - [`invariants`]: the flow-to-invariant mapping
//! - [`detect`]: constancy residuals, moving-point classification, shape constancy
//! - [`raster`]: per-pixel 1/TTC and 1/Time-Clearance maps, color coding, PPM
//! - [`io`], [`pipeline`]: CSV stage boundaries and batch stages

pub mod detect;
pub mod invariants;
pub mod io;
pub mod pipeline;
pub mod projection;
pub mod raster;
pub mod scene;

pub use detect::{
    classify, classify_all, group_tracks, shape_constancy, shape_displacements, tc_residual, ttc_drift_residual,
    DetectError, DetectionLabel, Thresholds, TrackSeries,
};
pub use invariants::{
    alpha_dot_from_flow, alpha_from_rho, embed, time_clearance, time_to_contact, to_invariant_domain, EmbeddedPoint,
    InvariantError, InvariantPoint, InvariantStatus,
};
pub use pipeline::{simulate_tracks, transform, FlowMode, SimulationParams};
pub use projection::{
    add_flow_noise, analytic_flow, finite_diff_flow, project, FlowError, FlowQuality, FlowSample, ImagePoint,
};
pub use raster::{colorize, combine, splat_map, write_ppm, MapKind, RasterError, RgbImage, ScalarGrid};
pub use scene::{
    expand_box, ground_truth, parse_scene, relative_state, CameraRig, GroundTruthGeometry, Scene, SceneError,
    ScenePoint, Vec3,
};
