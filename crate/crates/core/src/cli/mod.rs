//! `spinsqueeze` command line.
//!
//! Every leaf option can also come from a `--config` file (flat
//! `key = value`); flags win over the file, the file wins over defaults.
//! States, QPD grids, scan traces, fits and reports are JSON; tabular
//! outputs follow `--format`.

pub mod config;
pub mod output;
pub mod reproduce;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::dynamics::{make_sss, Method, PropagatorConfig, TwistProtocol};
use crate::fit::{fit, FitFamily};
use crate::observables::{fidelity, prob_distribution, qpd, spin_moments};
use crate::scan::{default_tau_max, scan_tau, Metric, ScanResult, ScanSpec, DEFAULT_J_LIST, DEFAULT_N_GRID};
use crate::spin::{make_cat, make_css, make_ewss, make_twin_fock, CoherentSpinParams, Spin, SpinState};
use config::ConfigFile;
use output::{
    qpd_rows, read_table, table_path, write_json, write_table, Format, PointRow, ProbRow, ScanRow, TrajectoryRow,
};

#[derive(Debug, Parser)]
#[command(name = "spinsqueeze", version, about = "Two-axis counter-twisting spin squeezing toolkit")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Propagator: auto, dense, krylov.
    #[arg(long, global = true)]
    pub method: Option<Method>,
    /// Propagator absolute tolerance, in (0, 1e-6].
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format: csv or json.
    #[arg(long, global = true)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prepare a state; writes its JSON and P(M) table.
    State(StateArgs),
    /// Quasi-probability distribution of a state on a (φ, θ) grid.
    Qpd(QpdArgs),
    /// Observables along the squeezing trajectory on [0, tau].
    Evolve(EvolveArgs),
    /// Locate optimal squeezing times.
    Scan(ScanArgs),
    /// Fit a scaling law to (J, y) data or a scan table column.
    Fit(FitArgs),
    /// Sweep all metrics, fit all published laws and compare.
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// css, ewss, tfs, cat or sss.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub j: Option<f64>,
    /// Squeezing time (sss only).
    #[arg(long)]
    pub tau: Option<f64>,
    /// CSS azimuth.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// CSS polar angle.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QpdArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// `N` or `NPHIxNTHETA`.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub j: Option<f64>,
    /// End of the trajectory.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of τ samples.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Comma-separated J values.
    #[arg(long)]
    pub j: Option<String>,
    /// Comma-separated metrics, or `all`.
    #[arg(long)]
    pub metric: Option<String>,
    /// Grid points per scan.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Upper end of the τ window (default: per-J automatic).
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// sq_power_offset, shifted_power or log_over_linear.
    #[arg(long)]
    pub family: Option<FitFamily>,
    /// A `j,y` table, or a scan table together with --column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Scan column to fit: tau_star, value_star, sd_z_star.
    #[arg(long)]
    pub column: Option<String>,
    /// Keep only scan rows of this metric.
    #[arg(long)]
    pub metric: Option<Metric>,
    /// Comma-separated starting parameters.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Comma-separated, ascending integer J values.
    #[arg(long)]
    pub j: Option<String>,
    /// Smallest J included in the fits.
    #[arg(long)]
    pub fit_j_min: Option<f64>,
}

/// Settings shared by every subcommand after layering.
pub struct Common {
    pub cfg: PropagatorConfig,
    pub out: PathBuf,
    pub format: Format,
    pub file: ConfigFile,
}

impl Common {
    fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let method = file.pick(cli.method, "method", Method::Auto)?;
        let tol = file.pick(cli.tol, "tol", PropagatorConfig::default().tolerance)?;
        let cfg = PropagatorConfig { method, tolerance: tol, ..Default::default() };
        cfg.validate()?;
        let out = file.pick(cli.out.clone(), "out", PathBuf::from("out"))?;
        let format = file.pick(cli.format, "format", Format::Csv)?;
        Ok(Common { cfg, out, format, file })
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

/// Exit status of a finished command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    ThresholdFailed,
}

pub fn parse_list<T>(s: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|e| anyhow!("bad list item `{x}`: {e}")))
        .collect()
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once('x').unwrap_or((s, s));
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn j_label(j: Spin) -> String {
    format!("j{}", j.value())
}

/// The requested state and a file stem naming it.
fn build_state(a: &StateArgs, c: &Common) -> Result<(SpinState, String)> {
    let f = &c.file;
    let kind = f.pick(a.kind.clone(), "kind", "sss".to_string())?;
    let j = Spin::new(f.layer(a.j, "j")?.ok_or_else(|| anyhow!("--j is required"))?)?;
    let stem = format!("{kind}_{}", j_label(j));
    Ok(match kind.as_str() {
        "css" => {
            let alpha = f.pick(a.alpha, "alpha", 0.0)?;
            let beta = f.pick(a.beta, "beta", 0.0)?;
            (make_css(j, CoherentSpinParams::new(alpha, beta)?), format!("{stem}_a{alpha}_b{beta}"))
        }
        "ewss" => (make_ewss(j), stem),
        "tfs" => (make_twin_fock(j)?, stem),
        "cat" => (make_cat(j), stem),
        "sss" => {
            let tau = f.layer(a.tau, "tau")?.ok_or_else(|| anyhow!("--tau is required for sss"))?;
            (make_sss(j, &TwistProtocol::at(tau)?, &c.cfg)?, format!("{stem}_tau{tau}"))
        }
        other => bail!("unknown state kind `{other}` (css, ewss, tfs, cat, sss)"),
    })
}

fn cmd_state(a: &StateArgs, c: &Common) -> Result<Outcome> {
    let (s, stem) = build_state(a, c)?;
    let dir = c.out_dir()?;
    write_json(&dir.join(format!("{stem}.json")), &s)?;
    let rows: Vec<ProbRow> =
        prob_distribution(&s).into_iter().enumerate().map(|(i, p)| ProbRow { m: s.j().m(i), p }).collect();
    let path = table_path(dir, &format!("{stem}_prob"), c.format);
    write_table(&path, &rows, c.format)?;
    let mom = spin_moments(&s);
    println!("{stem}: dim {} var_z {:.12} var_y {:.12} -> {}", s.dim(), mom.variance_z, mom.variance_y, path.display());
    Ok(Outcome::Ok)
}

fn cmd_qpd(a: &QpdArgs, c: &Common) -> Result<Outcome> {
    let (s, stem) = build_state(&a.state, c)?;
    let (n_phi, n_theta) = parse_grid(&c.file.pick(a.grid.clone(), "grid", "64x33".to_string())?)?;
    let g = qpd(&s, n_phi, n_theta)?;
    let dir = c.out_dir()?;
    write_json(&dir.join(format!("qpd_{stem}_grid.json")), &g)?;
    let path = table_path(dir, &format!("qpd_{stem}"), c.format);
    write_table(&path, &qpd_rows(&g), c.format)?;
    println!("qpd {stem}: {n_phi}x{n_theta}, sphere integral {:.6} -> {}", g.sphere_integral(), path.display());
    Ok(Outcome::Ok)
}

fn cmd_evolve(a: &EvolveArgs, c: &Common) -> Result<Outcome> {
    let f = &c.file;
    let j = Spin::new(f.layer(a.j, "j")?.ok_or_else(|| anyhow!("--j is required"))?)?;
    let tau_end = f.pick(a.tau, "tau", default_tau_max(j))?;
    let n = f.pick(a.grid, "grid", 101)?;
    if n < 2 || !(tau_end > 0.0) {
        bail!("evolve needs tau > 0 and grid >= 2");
    }
    let ewss = make_ewss(j);
    let tfs = make_twin_fock(j).ok();
    let taus: Vec<f64> = (0..n).map(|i| tau_end * i as f64 / (n - 1) as f64).collect();
    let rows = taus
        .par_iter()
        .map(|&tau| {
            let s = make_sss(j, &TwistProtocol::at(tau)?, &c.cfg)?;
            let m = spin_moments(&s);
            Ok(TrajectoryRow {
                tau,
                sd_z: m.sd_z(),
                var_y: m.variance_y,
                fid_ewss: fidelity(&ewss, &s)?,
                fid_tfs: tfs.as_ref().map(|t| fidelity(t, &s)).transpose()?,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let dir = c.out_dir()?;
    let stem = format!("evolve_{}", j_label(j));
    let path = table_path(dir, &stem, c.format);
    write_table(&path, &rows, c.format)?;
    let last = make_sss(j, &TwistProtocol::at(tau_end)?, &c.cfg)?;
    write_json(&dir.join(format!("{stem}_final.json")), &last)?;
    println!("evolve {}: {n} samples on [0, {tau_end}] -> {}", j_label(j), path.display());
    Ok(Outcome::Ok)
}

fn parse_metrics(s: &str) -> Result<Vec<Metric>> {
    if s == "all" {
        Ok(Metric::ALL.to_vec())
    } else {
        parse_list(s)
    }
}

fn cmd_scan(a: &ScanArgs, c: &Common) -> Result<Outcome> {
    let f = &c.file;
    let js: Vec<f64> = parse_list(&f.layer(a.j.clone(), "j")?.ok_or_else(|| anyhow!("--j is required"))?)?;
    let metrics = parse_metrics(&f.pick(a.metric.clone(), "metric", "all".to_string())?)?;
    let n_grid = f.pick(a.grid, "grid", DEFAULT_N_GRID)?;
    let tau_max = f.layer(a.tau, "tau")?;
    let mut specs = Vec::new();
    for &jv in &js {
        let j = Spin::new(jv)?;
        for &m in &metrics {
            let t = tau_max.unwrap_or_else(|| default_tau_max(j));
            specs.push(ScanSpec::new(j, m, 0.0, t, n_grid, 1e-6 * t)?);
        }
    }
    let results: Vec<ScanResult> = specs.par_iter().map(|s| scan_tau(s, &c.cfg)).collect::<crate::Result<_>>()?;
    let rows: Vec<ScanRow> = results.iter().map(ScanRow::from_result).collect();
    let dir = c.out_dir()?;
    let path = table_path(dir, "scan", c.format);
    write_table(&path, &rows, c.format)?;
    write_json(&dir.join("scan_traces.json"), &results)?;
    for r in &rows {
        println!("J={} {}: tau* = {:.9} value* = {:.9}", r.j, r.metric, r.tau_star, r.value_star);
    }
    Ok(Outcome::Ok)
}

/// `(J, y)` from either a plain point table or a scan table column.
pub fn load_fit_data(path: &Path, column: Option<&str>, metric: Option<Metric>) -> Result<(Vec<f64>, Vec<f64>)> {
    let pts: Vec<(f64, f64)> = match column {
        None => read_table::<PointRow>(path)?.into_iter().map(|r| (r.j, r.y)).collect(),
        Some(col) => read_table::<ScanRow>(path)?
            .into_iter()
            .filter(|r| metric.is_none_or(|m| r.metric == m))
            .map(|r| Ok((r.j, r.column(col)?)))
            .collect::<Result<_>>()?,
    };
    Ok(pts.into_iter().unzip())
}

fn cmd_fit(a: &FitArgs, c: &Common) -> Result<Outcome> {
    let f = &c.file;
    let family: FitFamily = f.layer(a.family, "family")?.ok_or_else(|| anyhow!("--family is required"))?;
    let input: PathBuf = f.layer(a.input.clone(), "input")?.ok_or_else(|| anyhow!("--input is required"))?;
    let column = f.layer(a.column.clone(), "column")?;
    let metric = f.layer(a.metric, "metric")?;
    let init: Option<Vec<f64>> = f.layer(a.init.clone(), "init")?.map(|s| parse_list(&s)).transpose()?;
    let (js, ys) = load_fit_data(&input, column.as_deref(), metric)?;
    let r = fit(family, &js, &ys, init.as_deref())?;
    let dir = c.out_dir()?;
    let path = dir.join(format!("fit_{family}.json"));
    write_json(&path, &r)?;
    let params: Vec<String> =
        r.model.params.iter().zip(&r.param_se).map(|(p, s)| format!("{p:.6} ± {s:.2e}")).collect();
    println!(
        "{family} over J in [{}, {}]: {} (rss {:.3e}) -> {}",
        r.j_range[0],
        r.j_range[1],
        params.join(", "),
        r.rss,
        path.display()
    );
    Ok(Outcome::Ok)
}

fn cmd_reproduce(a: &ReproduceArgs, c: &Common) -> Result<Outcome> {
    let f = &c.file;
    let js: Vec<f64> = match f.layer(a.j.clone(), "j")? {
        Some(s) => parse_list(&s)?,
        None => DEFAULT_J_LIST.iter().map(|&j| j as f64).collect(),
    };
    let fit_j_min = f.pick(a.fit_j_min, "fit_j_min", 20.0)?;
    let (rows, report) = reproduce::run(&js, fit_j_min, &c.cfg)?;
    let dir = c.out_dir()?;
    reproduce::write_outputs(dir, c.format, &rows, &report)?;
    print!("{}", reproduce::markdown(&report));
    Ok(if report.passed { Outcome::Ok } else { Outcome::ThresholdFailed })
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let c = Common::resolve(cli)?;
    match &cli.command {
        Command::State(a) => cmd_state(a, &c),
        Command::Qpd(a) => cmd_qpd(a, &c),
        Command::Evolve(a) => cmd_evolve(a, &c),
        Command::Scan(a) => cmd_scan(a, &c),
        Command::Fit(a) => cmd_fit(a, &c),
        Command::ReproducePaper(a) => cmd_reproduce(a, &c),
    }
}

/// Parses `std::env::args`, runs, and maps the outcome to an exit code.
pub fn main() -> std::process::ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // exit 2 is reserved for failed thresholds
            return if e.use_stderr() { std::process::ExitCode::FAILURE } else { std::process::ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => std::process::ExitCode::SUCCESS,
        Ok(Outcome::ThresholdFailed) => {
            eprintln!("error: one or more acceptance thresholds failed");
            std::process::ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
