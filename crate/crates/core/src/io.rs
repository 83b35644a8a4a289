//! CSV stage boundaries: tracks, invariants and labels.
//!
//! Reals are written with 17 significant digits so every value round-trips
//! exactly.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::detect::{DetectError, DetectionLabel};
use crate::invariants::{InvariantPoint, InvariantStatus};
use crate::projection::{FlowQuality, FlowSample};

pub const TRACKS_HEADER: [&str; 8] = ["point_id", "t", "u", "v", "rho", "theta", "rho_dot", "quality"];
pub const INVARIANTS_HEADER: [&str; 6] = ["point_id", "t", "ttc", "tc", "theta", "status"];
pub const LABELS_HEADER: [&str; 5] = ["point_id", "moving", "tc_residual", "ttc_residual", "status"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CsvError::Io(io),
            other => CsvError::Malformed {
                line,
                msg: format!("{other:?}"),
            },
        }
    }
}

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row of the invariants table. `ttc`/`tc` are NaN unless `status` is
/// ok.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRecord {
    pub point_id: u32,
    pub t: f64,
    pub ttc: f64,
    pub tc: f64,
    pub theta: f64,
    pub status: InvariantStatus,
}

impl InvariantRecord {
    pub fn ok(p: &InvariantPoint) -> Self {
        Self {
            point_id: p.point_id,
            t: p.t,
            ttc: p.ttc,
            tc: p.tc,
            theta: p.theta,
            status: InvariantStatus::Ok,
        }
    }

    pub fn failed(point_id: u32, t: f64, theta: f64, status: InvariantStatus) -> Self {
        Self {
            point_id,
            t,
            ttc: f64::NAN,
            tc: f64::NAN,
            theta,
            status,
        }
    }

    pub fn point(&self) -> Option<InvariantPoint> {
        (self.status == InvariantStatus::Ok).then_some(InvariantPoint {
            point_id: self.point_id,
            t: self.t,
            ttc: self.ttc,
            tc: self.tc,
            theta: self.theta,
        })
    }
}

pub fn write_tracks<W: Write>(samples: &[FlowSample], out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACKS_HEADER)?;
    for s in samples {
        w.write_record([
            s.point_id.to_string(),
            fmt_real(s.t),
            fmt_real(s.u),
            fmt_real(s.v),
            fmt_real(s.rho),
            fmt_real(s.theta),
            fmt_real(s.rho_dot),
            s.quality.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_invariants<W: Write>(records: &[InvariantRecord], out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INVARIANTS_HEADER)?;
    let opt = |x: f64| if x.is_nan() { String::new() } else { fmt_real(x) };
    for r in records {
        w.write_record([
            r.point_id.to_string(),
            fmt_real(r.t),
            opt(r.ttc),
            opt(r.tc),
            fmt_real(r.theta),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per track. Tracks that could not be classified carry
/// `status=too_short` and empty result columns.
pub fn write_labels<W: Write>(labels: &[(u32, Result<DetectionLabel, DetectError>)], out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LABELS_HEADER)?;
    for (id, label) in labels {
        match label {
            Ok(l) => w.write_record([
                l.point_id.to_string(),
                l.moving.to_string(),
                fmt_real(l.tc_residual),
                fmt_real(l.ttc_residual),
                "ok".to_string(),
            ])?,
            Err(_) => w.write_record([
                id.to_string(),
                String::new(),
                String::new(),
                String::new(),
                "too_short".to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

struct Rows<R: Read> {
    reader: csv::Reader<R>,
}

impl<R: Read> Rows<R> {
    fn open(input: R, header: &[&str]) -> Result<Self, CsvError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let found = reader.headers()?.clone();
        if found.is_empty() && reader.is_done() {
            // Completely empty input: accept as zero rows.
            return Ok(Self { reader });
        }
        if found.iter().ne(header.iter().copied()) {
            return Err(CsvError::Malformed {
                line: 1,
                msg: format!("expected header `{}`", header.join(",")),
            });
        }
        Ok(Self { reader })
    }

    fn for_each(mut self, mut f: impl FnMut(&Fields<'_>) -> Result<(), String>) -> Result<(), CsvError> {
        let mut rec = csv::StringRecord::new();
        while self.reader.read_record(&mut rec)? {
            let line = rec.position().map_or(0, |p| p.line());
            f(&Fields { rec: &rec }).map_err(|msg| CsvError::Malformed { line, msg })?;
        }
        Ok(())
    }
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
}

impl Fields<'_> {
    fn str(&self, i: usize, name: &str) -> Result<&str, String> {
        self.rec.get(i).ok_or_else(|| format!("missing column `{name}`"))
    }

    fn real(&self, i: usize, name: &str) -> Result<f64, String> {
        let s = self.str(i, name)?;
        s.parse::<f64>().map_err(|_| format!("bad `{name}` value `{s}`"))
    }

    fn opt_real(&self, i: usize, name: &str) -> Result<f64, String> {
        if self.str(i, name)?.is_empty() {
            Ok(f64::NAN)
        } else {
            self.real(i, name)
        }
    }

    fn id(&self, i: usize) -> Result<u32, String> {
        let s = self.str(i, "point_id")?;
        s.parse::<u32>().map_err(|_| format!("bad `point_id` value `{s}`"))
    }
}

pub fn read_tracks<R: Read>(input: R) -> Result<Vec<FlowSample>, CsvError> {
    let mut out = Vec::new();
    Rows::open(input, &TRACKS_HEADER)?.for_each(|f| {
        let quality = f.str(7, "quality")?;
        out.push(FlowSample {
            point_id: f.id(0)?,
            t: f.real(1, "t")?,
            u: f.real(2, "u")?,
            v: f.real(3, "v")?,
            rho: f.real(4, "rho")?,
            theta: f.real(5, "theta")?,
            rho_dot: f.real(6, "rho_dot")?,
            quality: FlowQuality::parse(quality).ok_or_else(|| format!("unknown quality `{quality}`"))?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn read_invariants<R: Read>(input: R) -> Result<Vec<InvariantRecord>, CsvError> {
    let mut out = Vec::new();
    Rows::open(input, &INVARIANTS_HEADER)?.for_each(|f| {
        let status = f.str(5, "status")?;
        let status = InvariantStatus::parse(status).ok_or_else(|| format!("unknown status `{status}`"))?;
        let rec = InvariantRecord {
            point_id: f.id(0)?,
            t: f.real(1, "t")?,
            ttc: f.opt_real(2, "ttc")?,
            tc: f.opt_real(3, "tc")?,
            theta: f.real(4, "theta")?,
            status,
        };
        if status == InvariantStatus::Ok && !(rec.ttc.is_finite() && rec.tc.is_finite()) {
            return Err("status ok requires finite ttc and tc".into());
        }
        out.push(rec);
        Ok(())
    })?;
    Ok(out)
}
