//! Dense per-pixel invariant maps (1/TTC, 1/Time-Clearance), color coding
//! and PPM output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::invariants::to_invariant_domain;
use crate::projection::analytic_flow;
use crate::scene::{relative_state, CameraRig, ScenePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    /// 1/TTC, units 1/s.
    TtcInv,
    /// 1/Time-Clearance, units 1/s.
    TcInv,
}

impl MapKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapKind::TtcInv => "ttc_inv",
            MapKind::TcInv => "tc_inv",
        }
    }
}

/// Row-major scalar image with a validity mask and the depth buffer used
/// while splatting.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    zbuffer: Vec<f64>,
}

impl ScalarGrid {
    pub fn empty(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            values: vec![0.0; n],
            mask: vec![false; n],
            zbuffer: vec![f64::INFINITY; n],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Value at (x, y) if the pixel is valid.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.values[i])
    }

    pub fn depth(&self, x: usize, y: usize) -> f64 {
        self.zbuffer[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| *v)
    }

    /// Sets a valid pixel. Non-finite values are stored as masked.
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = y * self.width + x;
        self.values[i] = if value.is_finite() { value } else { 0.0 };
        self.mask[i] = value.is_finite();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples, top row first.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("color range needs vmax > vmin, got [{vmin}, {vmax}]")]
    BadRange { vmin: f64, vmax: f64 },
    #[error("grid dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("malformed PPM: {0}")]
    BadPpm(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy)]
struct Splat {
    pixel: usize,
    depth: f64,
    id: u32,
    value: Option<f64>,
}

impl Splat {
    /// Nearer wins; equal depth goes to the smaller id.
    fn beats(&self, other: &Splat) -> bool {
        self.depth < other.depth || (self.depth == other.depth && self.id < other.id)
    }
}

/// Pixel (column, row) containing image-plane point (u, v), with the FOE at
/// the raster center.
pub fn pixel_of(u: f64, v: f64, width: usize, height: usize) -> Option<(usize, usize)> {
    let x = (u + width as f64 / 2.0).floor();
    let y = (v + height as f64 / 2.0).floor();
    if x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64 {
        Some((x as usize, y as usize))
    } else {
        None
    }
}

/// Projects every point at time `t` to its nearest pixel and keeps the
/// closest one per pixel. The pixel value is 1/TTC or 1/Time-Clearance from
/// exact flow; the FOE, degenerate flow and unhit pixels are masked.
pub fn splat_map(points: &[ScenePoint], rig: &CameraRig, t: f64, kind: MapKind) -> ScalarGrid {
    let (w, h) = (rig.width() as usize, rig.height() as usize);
    let splats: Vec<Splat> = points
        .par_iter()
        .filter_map(|p| {
            let fs = analytic_flow(p, rig, t).ok()?;
            let (x, y) = pixel_of(fs.u, fs.v, w, h)?;
            let value = to_invariant_domain(&fs, rig.focal()).ok().map(|ip| match kind {
                MapKind::TtcInv => 1.0 / ip.ttc,
                MapKind::TcInv => 1.0 / ip.tc,
            });
            Some(Splat {
                pixel: y * w + x,
                depth: relative_state(p, rig, t).0.z,
                id: p.id,
                value,
            })
        })
        .collect();

    let mut best: Vec<Option<Splat>> = vec![None; w * h];
    for sp in splats {
        let slot = &mut best[sp.pixel];
        if slot.as_ref().is_none_or(|cur| sp.beats(cur)) {
            *slot = Some(sp);
        }
    }

    let mut grid = ScalarGrid::empty(w, h);
    for (i, sp) in best.into_iter().enumerate() {
        let Some(sp) = sp else { continue };
        grid.zbuffer[i] = sp.depth;
        if let Some(v) = sp.value.filter(|v| v.is_finite()) {
            grid.values[i] = v;
            grid.mask[i] = true;
        }
    }
    grid
}

/// Default color range: `[0, p99]` of the valid values, or `[0, 1]` when
/// that would be empty or degenerate.
pub fn default_range(grid: &ScalarGrid) -> (f64, f64) {
    let mut vals: Vec<f64> = grid.valid_values().collect();
    if vals.is_empty() {
        return (0.0, 1.0);
    }
    vals.sort_by(f64::total_cmp);
    let rank = ((0.99 * vals.len() as f64).ceil() as usize).clamp(1, vals.len());
    let p99 = vals[rank - 1];
    if p99 > 0.0 {
        (0.0, p99)
    } else {
        (0.0, 1.0)
    }
}

fn check_range(vmin: f64, vmax: f64) -> Result<(), RasterError> {
    if !vmin.is_finite() || !vmax.is_finite() || vmax <= vmin {
        return Err(RasterError::BadRange { vmin, vmax });
    }
    Ok(())
}

fn normalize(v: f64, vmin: f64, vmax: f64) -> f64 {
    ((v - vmin) / (vmax - vmin)).clamp(0.0, 1.0)
}

/// Fully saturated HSV hue (degrees) to 8-bit RGB.
pub fn hue_to_rgb(hue: f64) -> [u8; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let q = |c: f64| (c * 255.0).round() as u8;
    [q(r), q(g), q(b)]
}

/// Blue (low) to red (high) hue ramp over `[vmin, vmax]`; masked pixels are
/// black.
pub fn colorize(grid: &ScalarGrid, vmin: f64, vmax: f64) -> Result<RgbImage, RasterError> {
    check_range(vmin, vmax)?;
    let data: Vec<u8> = grid
        .values
        .par_iter()
        .zip(grid.mask.par_iter())
        .flat_map_iter(|(&v, &valid)| {
            if valid {
                hue_to_rgb(240.0 * (1.0 - normalize(v, vmin, vmax)))
            } else {
                [0, 0, 0]
            }
        })
        .collect();
    Ok(RgbImage {
        width: grid.width,
        height: grid.height,
        data,
    })
}

/// Red carries normalized 1/TTC, green normalized 1/Time-Clearance. A pixel
/// is black only when masked in both inputs; a channel masked on its own
/// contributes 0.
pub fn combine(
    ttc_inv: &ScalarGrid,
    tc_inv: &ScalarGrid,
    ttc_range: (f64, f64),
    tc_range: (f64, f64),
) -> Result<RgbImage, RasterError> {
    if ttc_inv.width != tc_inv.width || ttc_inv.height != tc_inv.height {
        return Err(RasterError::DimensionMismatch(
            ttc_inv.width,
            ttc_inv.height,
            tc_inv.width,
            tc_inv.height,
        ));
    }
    check_range(ttc_range.0, ttc_range.1)?;
    check_range(tc_range.0, tc_range.1)?;
    let channel = |grid: &ScalarGrid, i: usize, (lo, hi): (f64, f64)| -> u8 {
        if grid.mask[i] {
            (255.0 * normalize(grid.values[i], lo, hi)).round() as u8
        } else {
            0
        }
    };
    let data: Vec<u8> = (0..ttc_inv.values.len())
        .into_par_iter()
        .flat_map_iter(|i| [channel(ttc_inv, i, ttc_range), channel(tc_inv, i, tc_range), 0])
        .collect();
    Ok(RgbImage {
        width: ttc_inv.width,
        height: ttc_inv.height,
        data,
    })
}

/// Binary P6 encoding.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn write_ppm(img: &RgbImage, path: &Path) -> Result<(), RasterError> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&encode_ppm(img))?;
    f.flush()?;
    Ok(())
}

/// Decodes binary P6 with maxval 255, as produced by [`encode_ppm`].
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage, RasterError> {
    let bad = |m: &str| RasterError::BadPpm(m.to_string());
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if bytes.get(pos) == Some(&b'#') {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    if fields[0] != "P6" {
        return Err(bad("not a P6 file"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
    if data.len() != width * height * 3 {
        return Err(bad("raster size does not match header"));
    }
    Ok(RgbImage {
        width,
        height,
        data: data.to_vec(),
    })
}

/// Debug dump: `x,y,value,valid`, one row per pixel, value empty when
/// masked.
pub fn write_grid_csv<W: Write>(grid: &ScalarGrid, out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "x,y,value,valid")?;
    for y in 0..grid.height {
        for x in 0..grid.width {
            match grid.get(x, y) {
                Some(v) => writeln!(w, "{x},{y},{v:.16e},1")?,
                None => writeln!(w, "{x},{y},,0")?,
            }
        }
    }
    w.flush()
}
