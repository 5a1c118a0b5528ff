//! Evolution-time scans: coarse grid, then golden-section refinement around
//! the best grid point.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, make_sss, rotate_with, tact_generator, PropagatorConfig, TwistProtocol};
use crate::error::{Error, Result};
use crate::golden;
use crate::observables::{fidelity, spin_moments};
use crate::spin::{make_ewss, make_twin_fock, BandedOperator, Spin, SpinState};

/// Ambiguity threshold when choosing among near-equal grid maxima.
pub const TIE_TOL: f64 = 1e-12;

pub const DEFAULT_N_GRID: usize = 512;

/// Default sweep over integer J (the twin-Fock metric needs integer J).
pub const DEFAULT_J_LIST: [u32; 7] = [5, 10, 20, 50, 100, 200, 400];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Fidelity to the equally weighted superposition state; maximized.
    FidEwss,
    /// Fidelity to the twin-Fock state; maximized.
    FidTfs,
    /// `⟨ΔJz²⟩^{1/2}` of the squeezed state; maximized.
    VarZMax,
    /// `⟨ΔJy²⟩` of the squeezed state; minimized.
    VarYMin,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::FidEwss, Metric::FidTfs, Metric::VarZMax, Metric::VarYMin];

    pub fn name(self) -> &'static str {
        match self {
            Metric::FidEwss => "fid_ewss",
            Metric::FidTfs => "fid_tfs",
            Metric::VarZMax => "var_z_max",
            Metric::VarYMin => "var_y_min",
        }
    }

    pub fn maximizes(self) -> bool {
        !matches!(self, Metric::VarYMin)
    }

    fn sign(self) -> f64 {
        if self.maximizes() {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub j: Spin,
    pub metric: Metric,
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_grid: usize,
    pub refine_tol: f64,
}

impl ScanSpec {
    pub fn new(j: Spin, metric: Metric, tau_min: f64, tau_max: f64, n_grid: usize, refine_tol: f64) -> Result<Self> {
        let spec = ScanSpec { j, metric, tau_min, tau_max, n_grid, refine_tol };
        spec.validate()?;
        Ok(spec)
    }

    /// Window `[0, 3·log(25.2J)/(3.93J)]`, three times the fitted twin-Fock
    /// time, with 512 grid points and refinement to `1e-6·tau_max`.
    pub fn auto(j: Spin, metric: Metric) -> Self {
        let tau_max = default_tau_max(j);
        ScanSpec { j, metric, tau_min: 0.0, tau_max, n_grid: DEFAULT_N_GRID, refine_tol: 1e-6 * tau_max }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min >= 0.0 && self.tau_min < self.tau_max && self.tau_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scan window [{}, {}] must satisfy 0 <= tau_min < tau_max",
                self.tau_min, self.tau_max
            )));
        }
        if self.n_grid < 8 {
            return Err(Error::InvalidParameter(format!("n_grid must be >= 8, got {}", self.n_grid)));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("refine_tol must be positive, got {}", self.refine_tol)));
        }
        if self.metric == Metric::FidTfs && !self.j.is_integer() {
            return Err(Error::MetricUndefined { metric: self.metric.to_string(), j: self.j.value() });
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_grid;
        (0..n).map(|i| self.tau_min + (self.tau_max - self.tau_min) * i as f64 / (n - 1) as f64).collect()
    }
}

pub fn default_tau_max(j: Spin) -> f64 {
    let jv = j.value();
    3.0 * (25.2 * jv).ln() / (3.93 * jv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub spec: ScanSpec,
    pub grid_taus: Vec<f64>,
    pub grid_values: Vec<f64>,
    pub tau_star: f64,
    pub value_star: f64,
    /// `⟨ΔJz²⟩^{1/2}` of the squeezed state at `tau_star`.
    pub sd_z_star: f64,
    pub refine_iterations: usize,
}

/// Grid points propagated as one incremental run; chunks are independent.
const CHUNK: usize = 64;

/// Evaluates one metric along the default protocol (`π/2` about y).
///
/// Works in the twisted frame, before the readout rotation `R`: targets are
/// stored as `R†|T⟩`, and `⟨ΔJz²⟩` after `R` equals `⟨ΔJx²⟩` before it.
pub struct MetricProbe {
    j: Spin,
    metric: Metric,
    target: Option<SpinState>,
    generator: BandedOperator,
    cfg: PropagatorConfig,
}

impl MetricProbe {
    pub fn new(j: Spin, metric: Metric, cfg: &PropagatorConfig) -> Result<Self> {
        let target = match metric {
            Metric::FidEwss => Some(make_ewss(j)),
            Metric::FidTfs => Some(
                make_twin_fock(j).map_err(|_| Error::MetricUndefined { metric: metric.to_string(), j: j.value() })?,
            ),
            _ => None,
        };
        let p = TwistProtocol::default();
        let target = target.map(|t| rotate_with(&t, p.rotation_axis, -p.rotation_angle, cfg)).transpose()?;
        Ok(MetricProbe { j, metric, target, generator: tact_generator(j, p.chi, p.gamma), cfg: *cfg })
    }

    /// The squeezed state after readout rotation.
    pub fn state(&self, tau: f64) -> Result<SpinState> {
        make_sss(self.j, &TwistProtocol::at(tau)?, &self.cfg)
    }

    /// `exp(τG)|J, J⟩`, before the readout rotation.
    pub fn twisted(&self, tau: f64) -> Result<SpinState> {
        self.advance(&SpinState::highest(self.j), tau)
    }

    pub fn advance(&self, twisted: &SpinState, dt: f64) -> Result<SpinState> {
        evolve(twisted, &self.generator, dt, &self.cfg)
    }

    /// Metric of a twisted-frame state.
    pub fn value_of_twisted(&self, s: &SpinState) -> Result<f64> {
        match (&self.target, self.metric) {
            (Some(t), _) => fidelity(t, s),
            (None, Metric::VarZMax) => Ok(spin_moments(s).variance_x.sqrt()),
            (None, _) => Ok(spin_moments(s).variance_y),
        }
    }

    pub fn value(&self, tau: f64) -> Result<f64> {
        self.value_of_twisted(&self.twisted(tau)?)
    }

    /// Metric on an ascending τ grid, stepping each chunk incrementally.
    pub fn values_on(&self, taus: &[f64]) -> Result<Vec<f64>> {
        let chunks = taus
            .par_chunks(CHUNK)
            .map(|c| {
                let mut s = self.twisted(c[0])?;
                let mut out = vec![self.value_of_twisted(&s)?];
                for w in c.windows(2) {
                    s = self.advance(&s, w[1] - w[0])?;
                    out.push(self.value_of_twisted(&s)?);
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(chunks.concat())
    }
}

pub fn scan_tau(spec: &ScanSpec, cfg: &PropagatorConfig) -> Result<ScanResult> {
    spec.validate()?;
    cfg.validate()?;
    let probe = MetricProbe::new(spec.j, spec.metric, cfg)?;
    let taus = spec.grid();
    let values = probe.values_on(&taus)?;

    let sign = spec.metric.sign();
    let best = values.iter().map(|v| sign * v).fold(f64::NEG_INFINITY, f64::max);
    let i = values.iter().position(|v| sign * v >= best - TIE_TOL).expect("grid is non-empty");

    let lo = taus[i.saturating_sub(1)];
    let hi = taus[(i + 1).min(taus.len() - 1)];
    let base = probe.twisted(lo)?;
    let refined = golden::maximize(
        |t| Ok(sign * probe.value_of_twisted(&probe.advance(&base, t - lo)?)?),
        lo,
        hi,
        spec.refine_tol,
        500,
    )?;
    let (tau_star, value_star) =
        if refined.fx >= sign * values[i] { (refined.x, sign * refined.fx) } else { (taus[i], values[i]) };

    let sd_z_star = spin_moments(&probe.state(tau_star)?).sd_z();
    Ok(ScanResult {
        spec: *spec,
        grid_taus: taus,
        grid_values: values,
        tau_star,
        value_star,
        sd_z_star,
        refine_iterations: refined.iterations,
    })
}

/// One `(J, metric)` outcome of a sweep; failures are kept, not dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub j: Spin,
    pub metric: Metric,
    pub result: std::result::Result<ScanResult, String>,
}

impl SweepRow {
    pub fn ok(&self) -> Option<&ScanResult> {
        self.result.as_ref().ok()
    }
}

/// Runs [`scan_tau`] with the automatic window for every `(j, metric)` pair,
/// in parallel, returning rows in input order (j outer, metric inner).
pub fn scaling_sweep(j_list: &[Spin], metrics: &[Metric], cfg: &PropagatorConfig) -> Result<Vec<SweepRow>> {
    if j_list.is_empty() || metrics.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one J and one metric".into()));
    }
    let pairs: Vec<(Spin, Metric)> = j_list.iter().flat_map(|&j| metrics.iter().map(move |&m| (j, m))).collect();
    Ok(pairs
        .into_par_iter()
        .map(|(j, metric)| SweepRow {
            j,
            metric,
            result: scan_tau(&ScanSpec::auto(j, metric), cfg).map_err(|e| e.to_string()),
        })
        .collect())
}
