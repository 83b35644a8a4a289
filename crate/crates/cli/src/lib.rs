//! Command implementations behind the `flowinv` binary.
//!
//! Stages talk through files: a scene file feeds `simulate` and `render`;
//! the tracks CSV feeds `transform`; the invariants CSV feeds `detect` and
//! `constancy`. Only `simulate` and `render` ever see a camera rig.

pub mod demo;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flowinv_core::io::{read_invariants, read_tracks, write_invariants, write_labels, write_tracks, CsvError};
use flowinv_core::raster::{default_range, write_grid_csv};
use flowinv_core::{
    classify, colorize, combine, group_tracks, parse_scene, shape_displacements, simulate_tracks, splat_map, transform,
    write_ppm, DetectError, FlowMode, InvariantPoint, MapKind, RasterError, Scene, SceneError, SimulationParams,
    Thresholds,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path, e: CsvError) -> CliError {
    match e {
        CsvError::Io(e) => io_err(path, e),
        other => CliError::Validation(format!("{}: {other}", path.display())),
    }
}

fn raster_err(path: &Path, e: RasterError) -> CliError {
    match e {
        RasterError::Io(e) => io_err(path, e),
        other => CliError::Validation(other.to_string()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

pub fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_scene(&text).map_err(|e: SceneError| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Everything that determines a `simulate` run, echoed next to its output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub scene: PathBuf,
    pub frames: usize,
    pub dt: f64,
    pub flow: String,
    pub noise: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<SimulationParams, CliError> {
        if self.frames < 2 {
            return Err(CliError::Validation(format!(
                "--frames must be >= 2, got {}",
                self.frames
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Validation(format!("--dt must be positive, got {}", self.dt)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(CliError::Validation(format!(
                "--noise must be >= 0, got {}",
                self.noise
            )));
        }
        let mode = parse_flow_mode(&self.flow)?;
        Ok(SimulationParams {
            frames: self.frames,
            dt: self.dt,
            mode,
            noise_sigma: self.noise,
            seed: self.seed,
        })
    }

    pub fn manifest_path(&self) -> PathBuf {
        let mut name = self.out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

pub fn parse_flow_mode(s: &str) -> Result<FlowMode, CliError> {
    match s {
        "analytic" => Ok(FlowMode::Analytic),
        "finite-diff" | "finite_diff" => Ok(FlowMode::FiniteDiff),
        other => Err(CliError::Validation(format!(
            "unknown flow mode `{other}` (analytic | finite-diff)"
        ))),
    }
}

/// Writes the tracks CSV and its manifest. Returns the number of rows.
pub fn cmd_simulate(config: &RunConfig) -> Result<usize, CliError> {
    let params = config.validate()?;
    let scene = load_scene(&config.scene)?;
    let samples = simulate_tracks(&scene, &params);
    if samples.is_empty() {
        eprintln!("warning: no point is visible in any frame; writing an empty tracks file");
    }
    write_tracks(&samples, create(&config.out)?).map_err(|e| csv_err(&config.out, e))?;

    let manifest = config.manifest_path();
    let mut json = serde_json::to_string_pretty(config).map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    create(&manifest)?
        .write_all(json.as_bytes())
        .map_err(|e| io_err(&manifest, e))?;
    Ok(samples.len())
}

/// Tracks CSV to invariants CSV. Needs only the focal length.
pub fn cmd_transform(input: &Path, focal: f64, out: &Path) -> Result<usize, CliError> {
    if !(focal > 0.0 && focal.is_finite()) {
        return Err(CliError::Validation(format!(
            "focal length must be positive, got {focal}"
        )));
    }
    let samples = read_tracks(open(input)?).map_err(|e| csv_err(input, e))?;
    let records = transform(&samples, focal);
    write_invariants(&records, create(out)?).map_err(|e| csv_err(out, e))?;
    Ok(records.len())
}

fn load_invariant_points(input: &Path) -> Result<Vec<InvariantPoint>, CliError> {
    let records = read_invariants(open(input)?).map_err(|e| csv_err(input, e))?;
    Ok(records.iter().filter_map(|r| r.point()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectSummary {
    pub tracks: usize,
    pub moving: usize,
    pub stationary: usize,
    pub too_short: usize,
}

/// Labels every track. Tracks with fewer than two valid samples are
/// reported as too short rather than failing the run.
pub fn cmd_detect(input: &Path, thresholds: Thresholds, out: &Path) -> Result<DetectSummary, CliError> {
    if !(thresholds.eps_abs >= 0.0 && thresholds.eps_rel >= 0.0) {
        return Err(CliError::Validation("thresholds must be non-negative".into()));
    }
    let records = read_invariants(open(input)?).map_err(|e| csv_err(input, e))?;
    let mut ids: Vec<u32> = records.iter().map(|r| r.point_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let tracks = group_tracks(records.iter().filter_map(|r| r.point()))
        .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;

    let mut summary = DetectSummary::default();
    let mut labels = Vec::with_capacity(ids.len());
    let mut by_id = tracks.iter().peekable();
    for id in ids {
        let label = match by_id.next_if(|t| t.point_id() == id) {
            Some(ts) => classify(ts, thresholds),
            None => Err(DetectError::TooShort { point_id: id, len: 0 }),
        };
        summary.tracks += 1;
        match &label {
            Ok(l) if l.moving => summary.moving += 1,
            Ok(_) => summary.stationary += 1,
            Err(_) => summary.too_short += 1,
        }
        labels.push((id, label));
    }
    write_labels(&labels, create(out)?).map_err(|e| csv_err(out, e))?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderKind {
    Map(MapKind),
    Combined,
}

pub fn parse_render_kind(s: &str) -> Result<RenderKind, CliError> {
    match s {
        "ttc_inv" => Ok(RenderKind::Map(MapKind::TtcInv)),
        "tc_inv" => Ok(RenderKind::Map(MapKind::TcInv)),
        "combined" => Ok(RenderKind::Combined),
        other => Err(CliError::Validation(format!(
            "unknown map `{other}` (ttc_inv | tc_inv | combined)"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderRange {
    pub vmin: Option<f64>,
    pub vmax: Option<f64>,
}

impl RenderRange {
    fn resolve(&self, grid: &flowinv_core::ScalarGrid) -> (f64, f64) {
        let (lo, hi) = default_range(grid);
        (self.vmin.unwrap_or(lo), self.vmax.unwrap_or(hi))
    }
}

/// Renders one color-coded frame of `scene` at time `t`.
pub fn cmd_render(
    scene: &Scene,
    t: f64,
    kind: RenderKind,
    range: RenderRange,
    out: &Path,
    grid_csv: Option<&Path>,
) -> Result<(), CliError> {
    let splat = |k| splat_map(&scene.points, &scene.rig, t, k);
    let (img, dump) = match kind {
        RenderKind::Map(k) => {
            let grid = splat(k);
            let (lo, hi) = range.resolve(&grid);
            (colorize(&grid, lo, hi).map_err(|e| raster_err(out, e))?, grid)
        }
        RenderKind::Combined => {
            let ttc = splat(MapKind::TtcInv);
            let tc = splat(MapKind::TcInv);
            let img = combine(&ttc, &tc, range.resolve(&ttc), range.resolve(&tc)).map_err(|e| raster_err(out, e))?;
            (img, ttc)
        }
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    write_ppm(&img, out).map_err(|e| raster_err(out, e))?;
    if let Some(path) = grid_csv {
        write_grid_csv(&dump, create(path)?).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyReport {
    pub t1: f64,
    pub t2: f64,
    pub points: usize,
    pub metric: f64,
    /// Largest displacements first, at most five.
    pub offenders: Vec<(u32, f64)>,
}

impl ConstancyReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "t1={} t2={} points={}", self.t1, self.t2, self.points);
        let _ = writeln!(s, "shape_constancy={:.6e}", self.metric);
        for (rank, (id, d)) in self.offenders.iter().enumerate() {
            let _ = writeln!(s, "#{} point_id={} displacement={:.6e}", rank + 1, id, d);
        }
        s
    }
}

fn frame_at(points: &[InvariantPoint], t: f64) -> Vec<InvariantPoint> {
    let tol = 1e-9 * t.abs().max(1.0);
    points.iter().filter(|p| (p.t - t).abs() <= tol).copied().collect()
}

pub fn cmd_constancy(input: &Path, t1: f64, t2: f64) -> Result<ConstancyReport, CliError> {
    let points = load_invariant_points(input)?;
    let (a, b) = (frame_at(&points, t1), frame_at(&points, t2));
    for (t, frame) in [(t1, &a), (t2, &b)] {
        if frame.is_empty() {
            return Err(CliError::Validation(format!(
                "no valid samples at t={t} in {}",
                input.display()
            )));
        }
    }
    let displacements = shape_displacements(&a, &b).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(ConstancyReport {
        t1,
        t2,
        points: displacements.len(),
        metric: displacements.first().map_or(0.0, |d| d.1),
        offenders: displacements.into_iter().take(5).collect(),
    })
}
