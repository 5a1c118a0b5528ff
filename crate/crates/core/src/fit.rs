//! Nonlinear least-squares fits of J-scaling laws.
//!
//! Three model families:
//!
//! | family            | model                  | params      |
//! |-------------------|------------------------|-------------|
//! | `sq_power_offset` | `(a/J^b + c)²`         | `a, b, c`   |
//! | `shifted_power`   | `a (J + b)^c`          | `a, b, c`   |
//! | `log_over_linear` | `log(aJ) / (bJ)`       | `a, b`      |
//!
//! Fits are unweighted and use Levenberg–Marquardt damping on the
//! Gauss–Newton normal equations. Standard errors come from the linearized
//! covariance `s² (JᵀJ)⁻¹` at the optimum with `s² = rss / (n − p)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest allowed cosine between the residual vector and any Jacobian column
/// at a converged optimum.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

const MAX_ITER: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFamily {
    SqPowerOffset,
    ShiftedPower,
    LogOverLinear,
}

impl FitFamily {
    pub const ALL: [FitFamily; 3] = [FitFamily::SqPowerOffset, FitFamily::ShiftedPower, FitFamily::LogOverLinear];

    pub fn name(self) -> &'static str {
        match self {
            FitFamily::SqPowerOffset => "sq_power_offset",
            FitFamily::ShiftedPower => "shifted_power",
            FitFamily::LogOverLinear => "log_over_linear",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            FitFamily::LogOverLinear => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for FitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fit family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub family: FitFamily,
    pub params: Vec<f64>,
}

impl FitModel {
    pub fn new(family: FitFamily, params: Vec<f64>) -> Result<Self> {
        if params.len() != family.n_params() {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {} parameters, got {}",
                family.n_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite {family} parameters {params:?}")));
        }
        if family == FitFamily::LogOverLinear && !(params[0] > 0.0) {
            return Err(Error::Domain(format!("log_over_linear needs a > 0, got {}", params[0])));
        }
        Ok(FitModel { family, params })
    }

    /// Closed-form value at `j`. `j = ∞` gives the large-J limit where one exists.
    pub fn evaluate(&self, j: f64) -> Result<f64> {
        let p = &self.params;
        let y = match self.family {
            FitFamily::SqPowerOffset => {
                if !(j > 0.0) {
                    return Err(Error::Domain(format!("sq_power_offset needs J > 0, got {j}")));
                }
                let u = p[0] / j.powf(p[1]) + p[2];
                u * u
            }
            FitFamily::ShiftedPower => {
                if !(j + p[1] > 0.0) {
                    return Err(Error::Domain(format!("shifted_power needs J + b > 0, got J = {j}, b = {}", p[1])));
                }
                p[0] * (j + p[1]).powf(p[2])
            }
            FitFamily::LogOverLinear => {
                if !(p[0] * j > 0.0) || p[1] == 0.0 {
                    return Err(Error::Domain(format!(
                        "log_over_linear needs aJ > 0 and b != 0 (a = {}, J = {j})",
                        p[0]
                    )));
                }
                if j.is_infinite() {
                    0.0
                } else {
                    (p[0] * j).ln() / (p[1] * j)
                }
            }
        };
        if y.is_nan() {
            return Err(Error::Domain(format!("{} undefined at J = {j}", self.family)));
        }
        Ok(y)
    }

    /// Analytic partial derivatives with respect to each parameter at `j`.
    pub fn gradient(&self, j: f64) -> Result<Vec<f64>> {
        self.evaluate(j)?;
        let p = &self.params;
        Ok(match self.family {
            FitFamily::SqPowerOffset => {
                let jb = j.powf(-p[1]);
                let u = p[0] * jb + p[2];
                vec![2.0 * u * jb, -2.0 * u * p[0] * j.ln() * jb, 2.0 * u]
            }
            FitFamily::ShiftedPower => {
                let s = j + p[1];
                let sc = s.powf(p[2]);
                vec![sc, p[0] * p[2] * s.powf(p[2] - 1.0), p[0] * sc * s.ln()]
            }
            FitFamily::LogOverLinear => {
                vec![1.0 / (p[0] * p[1] * j), -(p[0] * j).ln() / (p[1] * p[1] * j)]
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub rss: f64,
    pub param_se: Vec<f64>,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest and largest J in the fitted data.
    pub j_range: [f64; 2],
}

fn linear_regression(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Starting point from the family's linearization.
pub fn auto_init(family: FitFamily, js: &[f64], ys: &[f64]) -> Vec<f64> {
    let logj: Vec<f64> = js.iter().map(|j| j.ln()).collect();
    match family {
        FitFamily::LogOverLinear => {
            // τJ = log(a)/b + log(J)/b
            let z: Vec<f64> = js.iter().zip(ys).map(|(j, y)| j * y).collect();
            match linear_regression(&logj, &z) {
                Some((s, q)) if s != 0.0 => vec![(q / s).exp(), 1.0 / s],
                _ => vec![1.0, 1.0],
            }
        }
        FitFamily::ShiftedPower => {
            let pts: Vec<(f64, f64)> =
                logj.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (*x, y.ln())).collect();
            let (x, z): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            match linear_regression(&x, &z) {
                Some((c, q)) => vec![q.exp(), 0.0, c],
                None => vec![ys.iter().sum::<f64>() / ys.len() as f64, 0.0, 1.0],
            }
        }
        FitFamily::SqPowerOffset => {
            let last = js.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty data");
            let c = ys[last].max(0.0).sqrt();
            let diffs: Vec<(f64, f64)> = js
                .iter()
                .zip(ys)
                .enumerate()
                .filter(|(i, _)| *i != last)
                .map(|(_, (j, y))| (*j, y.max(0.0).sqrt() - c))
                .collect();
            let sign = if diffs.iter().filter(|(_, d)| *d < 0.0).count() * 2 > diffs.len() { -1.0 } else { 1.0 };
            let (x, z): (Vec<f64>, Vec<f64>) =
                diffs.iter().filter(|(_, d)| sign * d > 0.0).map(|(j, d)| (j.ln(), (sign * d).ln())).unzip();
            match linear_regression(&x, &z) {
                Some((s, q)) => vec![sign * q.exp(), -s, c],
                None => {
                    let (j0, d0) = diffs.first().copied().unwrap_or((1.0, 0.0));
                    vec![d0 * j0, 1.0, c]
                }
            }
        }
    }
}

struct Linearization {
    residuals: DVector<f64>,
    jac: DMatrix<f64>,
}

fn linearize(model: &FitModel, js: &[f64], ys: &[f64]) -> Result<Linearization> {
    let n = js.len();
    let p = model.params.len();
    let mut residuals = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, p);
    for (i, (&j, &y)) in js.iter().zip(ys).enumerate() {
        residuals[i] = model.evaluate(j)? - y;
        for (k, g) in model.gradient(j)?.into_iter().enumerate() {
            jac[(i, k)] = g;
        }
    }
    if residuals.iter().chain(jac.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite residual or Jacobian".into()));
    }
    Ok(Linearization { residuals, jac })
}

fn rss_of(model: &FitModel, js: &[f64], ys: &[f64]) -> Option<f64> {
    let mut rss = 0.0;
    for (&j, &y) in js.iter().zip(ys) {
        let r = model.evaluate(j).ok()? - y;
        rss += r * r;
    }
    rss.is_finite().then_some(rss)
}

/// Largest cosine between the residual vector and a Jacobian column.
pub fn max_residual_cosine(jac: &DMatrix<f64>, residuals: &DVector<f64>) -> f64 {
    let rn = residuals.norm();
    if rn == 0.0 {
        return 0.0;
    }
    jac.column_iter()
        .map(|col| {
            let cn = col.norm();
            if cn == 0.0 {
                0.0
            } else {
                col.dot(residuals).abs() / (cn * rn)
            }
        })
        .fold(0.0, f64::max)
}

/// Gauss–Newton step from an SVD solve of `J δ = −r`, kept only if it lowers
/// the residual/Jacobian cosine without raising rss beyond roundoff.
fn polish(
    model: &FitModel,
    lin: &Linearization,
    rss: f64,
    js: &[f64],
    ys: &[f64],
) -> Option<(FitModel, Linearization, f64)> {
    let svd = lin.jac.clone().svd(true, true);
    let eps = 1e-15 * svd.singular_values.max();
    let step = svd.solve(&(-&lin.residuals), eps).ok()?;
    let trial: Vec<f64> = model.params.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
    let trial = FitModel::new(model.family, trial).ok()?;
    let new_rss = rss_of(&trial, js, ys)?;
    if new_rss > rss * (1.0 + 1e-12) {
        return None;
    }
    let new_lin = linearize(&trial, js, ys).ok()?;
    let improves =
        max_residual_cosine(&new_lin.jac, &new_lin.residuals) < max_residual_cosine(&lin.jac, &lin.residuals);
    improves.then_some((trial, new_lin, new_rss))
}

fn is_stationary(lin: &Linearization, y_scale: f64) -> bool {
    // exact data drives the residual to roundoff, where cosines are noise
    lin.residuals.norm() <= 1e-13 * y_scale || max_residual_cosine(&lin.jac, &lin.residuals) <= ORTHOGONALITY_TOL
}

/// Least-squares fit of `family` to `(J, y)` pairs.
pub fn fit(family: FitFamily, js: &[f64], ys: &[f64], init: Option<&[f64]>) -> Result<FitResult> {
    let n = js.len();
    let p = family.n_params();
    if n != ys.len() {
        return Err(Error::DimensionMismatch { expected: n, got: ys.len() });
    }
    if n < 3 || n < p {
        return Err(Error::Fit(format!("{family} needs at least {} points, got {n}", p.max(3))));
    }
    if js.iter().chain(ys).any(|v| !v.is_finite()) || js.iter().any(|&j| j <= 0.0) {
        return Err(Error::Fit("J values must be positive and all data finite".into()));
    }
    let mut sorted = js.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("J values must be distinct".into()));
    }

    let start = match init {
        Some(p0) => p0.to_vec(),
        None => auto_init(family, js, ys),
    };
    let mut model = FitModel::new(family, start)?;
    let y_scale = ys.iter().map(|y| y * y).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut lin = linearize(&model, js, ys)?;
    let mut rss = lin.residuals.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;

    while iterations < MAX_ITER {
        if is_stationary(&lin, y_scale) {
            break;
        }
        iterations += 1;
        let jtj = lin.jac.transpose() * &lin.jac;
        let grad = lin.jac.transpose() * &lin.residuals;
        let mut accepted = false;
        while lambda < 1e20 {
            let mut damped = jtj.clone();
            for k in 0..p {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = model.params.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let candidate = FitModel::new(family, trial);
            match candidate.as_ref().ok().and_then(|m| rss_of(m, js, ys)) {
                Some(new_rss) if new_rss < rss => {
                    model = candidate.expect("checked above");
                    rss = new_rss;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            // the rss decrease is below its own resolution; finish with
            // undamped steps judged by orthogonality instead
            match polish(&model, &lin, rss, js, ys) {
                Some((m, l, r)) => {
                    (model, lin, rss) = (m, l, r);
                    continue;
                }
                None => break,
            }
        }
        lin = linearize(&model, js, ys)?;
    }

    let converged = is_stationary(&lin, y_scale);
    if !converged {
        return Err(Error::NotConverged { iterations, rss });
    }

    let jtj = lin.jac.transpose() * &lin.jac;
    let sv = jtj.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > smax * 1e-15) {
        return Err(Error::RankDeficient(family.to_string()));
    }
    let inv = jtj.try_inverse().ok_or_else(|| Error::RankDeficient(family.to_string()))?;
    let dof = n.saturating_sub(p);
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let param_se = (0..p).map(|k| (s2 * inv[(k, k)]).max(0.0).sqrt()).collect();

    Ok(FitResult { model, rss, param_se, n_points: n, iterations, converged, j_range: [sorted[0], sorted[n - 1]] })
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Residual vector and Jacobian at the fitted parameters.
    pub fn linearization(&self, js: &[f64], ys: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let lin = linearize(&self.model, js, ys)?;
        Ok((lin.jac, lin.residuals))
    }
}
