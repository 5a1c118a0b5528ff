//! Table files. CSV floats carry 17 significant digits so every value
//! parses back bit-for-bit; JSON tables are arrays of row objects.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::observables::QpdGrid;
use crate::scan::{Metric, ScanResult};
use crate::spin::Spin;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.ext())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (csv, json)")),
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_f64(s: &str, col: &str) -> Result<f64> {
    s.trim().parse().map_err(|e| anyhow!("column `{col}`: bad number `{s}`: {e}"))
}

fn parse_opt(s: &str, col: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, col).map(Some)
    }
}

/// A fixed-schema table row.
pub trait Row: Sized + Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
    fn from_fields(f: &[&str]) -> Result<Self>;
}

pub fn table_path(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(format!("{stem}.{}", format.ext()))
}

pub fn write_table<R: Row>(path: &Path, rows: &[R], format: Format) -> Result<()> {
    match format {
        Format::Json => fs::write(path, serde_json::to_string_pretty(rows)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
            w.write_record(R::HEADER)?;
            for r in rows {
                w.write_record(r.fields())?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Reads a table written by [`write_table`]; the format follows the extension.
pub fn read_table<R: Row>(path: &Path) -> Result<Vec<R>> {
    let ctx = || format!("reading {}", path.display());
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).with_context(ctx)?;
        return serde_json::from_str(&text).with_context(ctx);
    }
    let mut r = csv::Reader::from_path(path).with_context(ctx)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != R::HEADER {
        bail!("{}: expected columns {:?}, found {:?}", path.display(), R::HEADER, header);
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.with_context(ctx)?;
        let f: Vec<&str> = rec.iter().collect();
        rows.push(R::from_fields(&f).with_context(|| format!("{} row {}", path.display(), n + 1))?);
    }
    Ok(rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbRow {
    pub m: f64,
    pub p: f64,
}

impl Row for ProbRow {
    const HEADER: &'static [&'static str] = &["m", "p"];

    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.m), fmt_f64(self.p)]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        Ok(ProbRow { m: parse_f64(f[0], "m")?, p: parse_f64(f[1], "p")? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpdRow {
    pub phi: f64,
    pub theta: f64,
    pub value: f64,
}

impl Row for QpdRow {
    const HEADER: &'static [&'static str] = &["phi", "theta", "value"];

    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.phi), fmt_f64(self.theta), fmt_f64(self.value)]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        Ok(QpdRow { phi: parse_f64(f[0], "phi")?, theta: parse_f64(f[1], "theta")?, value: parse_f64(f[2], "value")? })
    }
}

/// φ-major rows, θ varying fastest.
pub fn qpd_rows(g: &QpdGrid) -> Vec<QpdRow> {
    let mut rows = Vec::with_capacity(g.n_phi() * g.n_theta());
    for i in 0..g.n_phi() {
        for l in 0..g.n_theta() {
            rows.push(QpdRow { phi: g.phi(i), theta: g.theta(l), value: g.value(i, l) });
        }
    }
    rows
}

pub fn qpd_from_rows(j: Spin, rows: &[QpdRow]) -> Result<QpdGrid> {
    let first = rows.first().ok_or_else(|| anyhow!("empty QPD table"))?.phi;
    let n_theta = rows.iter().take_while(|r| r.phi == first).count();
    if n_theta == 0 || !rows.len().is_multiple_of(n_theta) {
        bail!("QPD table of {} rows is not a full grid", rows.len());
    }
    let values = rows.chunks(n_theta).map(|c| c.iter().map(|r| r.value).collect()).collect();
    let g = QpdGrid::from_values(j, rows.len() / n_theta, n_theta, values)?;
    if qpd_rows(&g).iter().zip(rows).any(|(a, b)| (a.phi - b.phi).abs() > 1e-12 || (a.theta - b.theta).abs() > 1e-12) {
        bail!("QPD table angles do not match a uniform grid");
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub tau: f64,
    pub sd_z: f64,
    pub var_y: f64,
    pub fid_ewss: f64,
    /// Empty for half-integer J.
    pub fid_tfs: Option<f64>,
}

impl Row for TrajectoryRow {
    const HEADER: &'static [&'static str] = &["tau", "sd_z", "var_y", "fid_ewss", "fid_tfs"];

    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.tau), fmt_f64(self.sd_z), fmt_f64(self.var_y), fmt_f64(self.fid_ewss), fmt_opt(self.fid_tfs)]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        Ok(TrajectoryRow {
            tau: parse_f64(f[0], "tau")?,
            sd_z: parse_f64(f[1], "sd_z")?,
            var_y: parse_f64(f[2], "var_y")?,
            fid_ewss: parse_f64(f[3], "fid_ewss")?,
            fid_tfs: parse_opt(f[4], "fid_tfs")?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub j: f64,
    pub metric: Metric,
    pub tau_star: f64,
    pub value_star: f64,
    pub grid_size: usize,
    /// Refinement tolerance on τ.
    pub tol: f64,
    pub sd_z_star: f64,
}

impl ScanRow {
    pub fn from_result(r: &ScanResult) -> Self {
        ScanRow {
            j: r.spec.j.value(),
            metric: r.spec.metric,
            tau_star: r.tau_star,
            value_star: r.value_star,
            grid_size: r.spec.n_grid,
            tol: r.spec.refine_tol,
            sd_z_star: r.sd_z_star,
        }
    }

    pub fn column(&self, name: &str) -> Result<f64> {
        match name {
            "tau_star" => Ok(self.tau_star),
            "value_star" => Ok(self.value_star),
            "sd_z_star" => Ok(self.sd_z_star),
            _ => bail!("unknown scan column `{name}` (tau_star, value_star, sd_z_star)"),
        }
    }
}

impl Row for ScanRow {
    const HEADER: &'static [&'static str] = &["j", "metric", "tau_star", "value_star", "grid_size", "tol", "sd_z_star"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.j.to_string(),
            self.metric.to_string(),
            fmt_f64(self.tau_star),
            fmt_f64(self.value_star),
            self.grid_size.to_string(),
            fmt_f64(self.tol),
            fmt_f64(self.sd_z_star),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        Ok(ScanRow {
            j: parse_f64(f[0], "j")?,
            metric: f[1].parse()?,
            tau_star: parse_f64(f[2], "tau_star")?,
            value_star: parse_f64(f[3], "value_star")?,
            grid_size: f[4].trim().parse().map_err(|e| anyhow!("column `grid_size`: {e}"))?,
            tol: parse_f64(f[5], "tol")?,
            sd_z_star: parse_f64(f[6], "sd_z_star")?,
        })
    }
}

/// Plain `(J, y)` fit input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub j: f64,
    pub y: f64,
}

impl Row for PointRow {
    const HEADER: &'static [&'static str] = &["j", "y"];

    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.j), fmt_f64(self.y)]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        Ok(PointRow { j: parse_f64(f[0], "j")?, y: parse_f64(f[1], "y")? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt() * 1e-300, -123456.789, 5e-324, f64::MAX] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits: String = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
            assert_eq!(digits.len(), 17, "{s}");
        }
    }

    #[test]
    fn tables_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            TrajectoryRow { tau: 0.0, sd_z: 0.1, var_y: 1.0 / 3.0, fid_ewss: 0.2, fid_tfs: None },
            TrajectoryRow { tau: 0.5, sd_z: 7.0, var_y: 1e-17, fid_ewss: 0.9, fid_tfs: Some(0.7) },
        ];
        for format in [Format::Csv, Format::Json] {
            let p = table_path(dir.path(), "traj", format);
            write_table(&p, &rows, format).unwrap();
            assert_eq!(read_table::<TrajectoryRow>(&p).unwrap(), rows);
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(read_table::<PointRow>(&p).is_err());
    }

    #[test]
    fn format_names() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
