//! Grid exports of the example for plotting.
//!
//! `u` is written as its scaled value alongside `log_scale` (true value
//! `u · exp(log_scale)`): the solution spans far more than the `f64`
//! exponent range within a single segment.

use super::solution::{Orientation, PlissConstruction};
use super::PlissError;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::str::FromStr;

/// `count` equally spaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.lo],
            c => (0..c)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (c - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for GridAxis {
    type Err = PlissError;

    /// `lo:hi:count`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || PlissError::BadGrid(format!("axis `{s}` is not lo:hi:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(bad());
        }
        Ok(GridAxis { lo, hi, count })
    }
}

/// Tensor grid in `(t, x1, x2)`, with `t` in the construction's orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t: GridAxis,
    pub x1: GridAxis,
    pub x2: GridAxis,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.t.count * self.x1.count * self.x2.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for GridSpec {
    type Err = PlissError;

    /// `t0:t1:nt,x0:x1:nx,y0:y1:ny`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let axes: Vec<&str> = s.split(',').collect();
        if axes.len() != 3 {
            return Err(PlissError::BadGrid(format!("`{s}` needs three comma-separated axes")));
        }
        Ok(GridSpec {
            t: axes[0].parse()?,
            x1: axes[1].parse()?,
            x2: axes[2].parse()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct Metadata<'a> {
    orientation: Orientation,
    support: &'a str,
    modulus: &'a str,
    k0: u64,
    segments: usize,
    horizon_t: f64,
    columns: &'a [&'a str],
}

const COLUMNS: [&str; 10] = ["t", "x1", "x2", "log_scale", "u", "l", "b1", "b2", "c", "residual"];

/// Writes one record per grid point and returns the record count. Every
/// `t` is checked against the built horizon before anything is written.
pub fn export_construction<W: Write>(
    pc: &PlissConstruction,
    grid: &GridSpec,
    format: ExportFormat,
    out: W,
) -> Result<usize, PlissError> {
    let ts = grid.t.points();
    for &t in &ts {
        pc.eval_l(t)?;
    }
    let (x1s, x2s) = (grid.x1.points(), grid.x2.points());
    let horizon_t = match pc.orientation {
        Orientation::ConstructionTime => pc.horizon(),
        Orientation::ReflectedTime => -pc.horizon(),
    };
    let meta = Metadata {
        orientation: pc.orientation,
        support: match pc.orientation {
            Orientation::ConstructionTime => "t <= 0",
            Orientation::ReflectedTime => "t >= 0",
        },
        modulus: pc.seqs.mu.name(),
        k0: pc.seqs.k0,
        segments: pc.seqs.segments,
        horizon_t,
        columns: &COLUMNS,
    };
    let mut count = 0;
    match format {
        ExportFormat::Csv => {
            let mut out = out;
            writeln!(out, "# {}", serde_json::to_string(&meta)?)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(COLUMNS)?;
            for &t in &ts {
                for &x1 in &x1s {
                    for &x2 in &x2s {
                        let e = pc.eval_solution(t, x1, x2)?;
                        w.serialize((t, x1, x2, e.log_scale, e.u, e.l, e.b1, e.b2, e.c, e.residual))?;
                        count += 1;
                    }
                }
            }
            w.flush()?;
        }
        ExportFormat::Json => {
            let mut rows = Vec::with_capacity(grid.len());
            for &t in &ts {
                for &x1 in &x1s {
                    for &x2 in &x2s {
                        let e = pc.eval_solution(t, x1, x2)?;
                        rows.push([t, x1, x2, e.log_scale, e.u, e.l, e.b1, e.b2, e.c, e.residual]);
                    }
                }
            }
            count = rows.len();
            #[derive(Serialize)]
            struct Doc<'a> {
                metadata: Metadata<'a>,
                rows: Vec<[f64; 10]>,
            }
            serde_json::to_writer(out, &Doc { metadata: meta, rows })?;
        }
    }
    Ok(count)
}
