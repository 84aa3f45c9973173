//! Output file formats. Every file starts with a header comment naming the
//! tool version, a hash of the resolved configuration and the seed.
//!
//! Sweep CSV:
//!
//! ```text
//! # fiberae 0.1.0 config=3f2a9c01b7de seed=1
//! power_dbm,metric,value,n_samples,seed
//! -2,SER,0.0123,100000,1234567
//! ```
//!
//! Raster: the header comment, a line holding the resolution, then one line
//! of space-separated labels per row, top row first.

use std::fmt::Write as _;
use std::path::Path;

use fiberae_core::channel::ComplexSample;
use fiberae_core::eval::{LabelGrid, Metric, RasterSpec, SweepResult};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SWEEP_COLUMNS: &str = "power_dbm,metric,value,n_samples,seed";

/// First 12 hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(12);
    for b in &digest[..6] {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    pub fn new(config_text: &str, seed: u64) -> Self {
        Header { config_hash: config_hash(config_text), seed }
    }

    pub fn line(&self) -> String {
        format!("# fiberae {TOOL_VERSION} config={} seed={}\n", self.config_hash, self.seed)
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One CSV row. Overlay rows carry a free-form metric name.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub power_dbm: f64,
    pub metric: String,
    pub value: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl From<&SweepResult> for SweepRow {
    fn from(r: &SweepResult) -> Self {
        SweepRow {
            power_dbm: r.power_dbm,
            metric: r.metric.name().to_string(),
            value: r.value,
            n_samples: r.n_samples,
            seed: r.seed,
        }
    }
}

pub fn sweep_csv(header: &Header, rows: &[SweepRow]) -> String {
    let mut out = header.line();
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.power_dbm, r.metric, r.value, r.n_samples, r.seed).unwrap();
    }
    out
}

fn format_error(what: &'static str, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Format { what, message: format!("line {}: {message}", line + 1) }
}

/// Parse a sweep CSV. Comment lines and the column header are skipped.
///
/// Rows with only two fields are read as `power_dbm,value` and labelled with
/// `default_metric`, so bare external curves can be merged too.
pub fn parse_sweep_csv(text: &str, default_metric: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("power_dbm") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |s: &str| s.parse::<f64>().map_err(|e| format_error("csv", i, format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| format_error("csv", i, format!("{s:?}: {e}")));
        let row = match fields.as_slice() {
            [p, v] => SweepRow { power_dbm: num(p)?, metric: default_metric.to_string(), value: num(v)?, n_samples: 0, seed: 0 },
            [p, m, v, n, s] => SweepRow {
                power_dbm: num(p)?,
                metric: m.to_string(),
                value: num(v)?,
                n_samples: int(n)?,
                seed: int(s)?,
            },
            _ => return Err(format_error("csv", i, format!("expected 2 or 5 fields, found {}", fields.len()))),
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn sweep_rows(results: &[SweepResult]) -> Vec<SweepRow> {
    results.iter().map(SweepRow::from).collect()
}

/// Rows measuring `metric`, for callers that read back their own output.
pub fn rows_for(rows: &[SweepRow], metric: Metric) -> Vec<(f64, f64)> {
    rows.iter().filter(|r| r.metric == metric.name()).map(|r| (r.power_dbm, r.value)).collect()
}

pub fn constellation_csv(header: &Header, points: &[ComplexSample]) -> String {
    let mut out = header.line();
    out.push_str("index,re,im\n");
    for (i, p) in points.iter().enumerate() {
        writeln!(out, "{i},{},{}", p.re, p.im).unwrap();
    }
    out
}

pub fn loss_csv(header: &Header, power_dbm: f64, trace: &[f64]) -> String {
    let mut out = header.line();
    out.push_str("power_dbm,batch,loss\n");
    for (i, l) in trace.iter().enumerate() {
        writeln!(out, "{power_dbm},{i},{l}").unwrap();
    }
    out
}

pub fn raster_text(header: &Header, spec: &RasterSpec, grid: &LabelGrid) -> String {
    let mut out = header.line();
    writeln!(
        out,
        "# center={},{} half_width={}",
        spec.center.re, spec.center.im, spec.half_width
    )
    .unwrap();
    writeln!(out, "{}", grid.resolution).unwrap();
    for row in grid.labels.chunks(grid.resolution) {
        let line: Vec<String> = row.iter().map(usize::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_raster(text: &str) -> Result<LabelGrid> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
    let (i, first) = lines.next().ok_or_else(|| format_error("raster", 0, "empty"))?;
    let resolution: usize = first.trim().parse().map_err(|e| format_error("raster", i, e))?;
    let mut labels = Vec::with_capacity(resolution * resolution);
    for (i, line) in lines {
        let before = labels.len();
        for f in line.split_whitespace() {
            labels.push(f.parse::<usize>().map_err(|e| format_error("raster", i, e))?);
        }
        if labels.len() - before != resolution {
            return Err(format_error("raster", i, format!("expected {resolution} labels")));
        }
    }
    if labels.len() != resolution * resolution {
        return Err(format_error("raster", 0, format!("expected {resolution} rows")));
    }
    Ok(LabelGrid { resolution, labels })
}

/// Binary PPM with one hue per label.
pub fn raster_ppm(grid: &LabelGrid, m: usize) -> Vec<u8> {
    let mut out = format!("P6\n{0} {0}\n255\n", grid.resolution).into_bytes();
    let palette: Vec<[u8; 3]> = (0..m).map(|s| hue(s as f64 / m as f64)).collect();
    for &l in &grid.labels {
        out.extend_from_slice(&palette.get(l).copied().unwrap_or([0, 0, 0]));
    }
    out
}

fn hue(h: f64) -> [u8; 3] {
    let x = h * 6.0;
    let f = x - x.floor();
    let (q, t) = ((255.0 * (1.0 - f)) as u8, (255.0 * f) as u8);
    match x as usize % 6 {
        0 => [255, t, 0],
        1 => [q, 255, 0],
        2 => [0, 255, t],
        3 => [0, q, 255],
        4 => [t, 0, 255],
        _ => [255, 0, q],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Header {
        Header::new("x = 1\n", 7)
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(""), "e3b0c44298fc");
        assert_eq!(header().line(), format!("# fiberae {TOOL_VERSION} config={} seed=7\n", config_hash("x = 1\n")));
    }

    #[test]
    fn sweep_round_trip() {
        let rows = vec![
            SweepRow { power_dbm: -2.5, metric: "SER".into(), value: 0.1 + 0.2, n_samples: 100, seed: u64::MAX },
            SweepRow { power_dbm: 3.0, metric: "MI".into(), value: 3.25, n_samples: 5, seed: 0 },
        ];
        let text = sweep_csv(&header(), &rows);
        assert!(text.lines().nth(1) == Some(SWEEP_COLUMNS));
        assert_eq!(parse_sweep_csv(&text, "x").unwrap(), rows);
        let bare = parse_sweep_csv("# bound\n-1,3.5\n2, 4\n", "upper").unwrap();
        assert_eq!(bare[1], SweepRow { power_dbm: 2.0, metric: "upper".into(), value: 4.0, n_samples: 0, seed: 0 });
        assert!(parse_sweep_csv("1,2,3\n", "x").is_err());
    }

    #[test]
    fn raster_round_trip() {
        let grid = LabelGrid { resolution: 3, labels: vec![0, 1, 2, 3, 4, 5, 6, 7, 15] };
        let spec = RasterSpec { center: ComplexSample::ZERO, half_width: 1.0, resolution: 3 };
        let text = raster_text(&header(), &spec, &grid);
        assert_eq!(parse_raster(&text).unwrap(), grid);
        assert!(parse_raster("3\n0 1 2\n").is_err());
        let ppm = raster_ppm(&grid, 16);
        assert_eq!(ppm.len(), "P6\n3 3\n255\n".len() + 27);
    }
}
