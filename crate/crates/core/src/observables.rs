//! Scalar and distribution-valued observables of a collective-spin state.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{build_operator, css_moduli, OperatorKind, Spin, SpinState};

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &SpinState, b: &SpinState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// `P(M) = |⟨J,M|ψ⟩|²` in descending-M order.
pub fn prob_distribution(s: &SpinState) -> Vec<f64> {
    s.amplitudes().iter().map(|c| c.norm_sqr()).collect()
}

/// Husimi-type quasi-probability `|⟨CSS(φ,θ)|ψ⟩|²` on a uniform grid with
/// `φ_i = 2πi/n_phi` and `θ_l = πl/(n_theta − 1)`, so both poles are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QpdRecord", into = "QpdRecord")]
pub struct QpdGrid {
    j: Spin,
    n_phi: usize,
    n_theta: usize,
    /// Row-major, `values[i_phi][i_theta]`.
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct QpdRecord {
    j: f64,
    n_phi: usize,
    n_theta: usize,
    phi: Vec<f64>,
    theta: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<QpdRecord> for QpdGrid {
    type Error = Error;

    fn try_from(r: QpdRecord) -> Result<Self> {
        QpdGrid::from_values(Spin::new(r.j)?, r.n_phi, r.n_theta, r.values)
    }
}

impl From<QpdGrid> for QpdRecord {
    fn from(g: QpdGrid) -> Self {
        QpdRecord {
            j: g.j.value(),
            n_phi: g.n_phi,
            n_theta: g.n_theta,
            phi: (0..g.n_phi).map(|i| g.phi(i)).collect(),
            theta: (0..g.n_theta).map(|l| g.theta(l)).collect(),
            values: g.values,
        }
    }
}

impl QpdGrid {
    pub fn from_values(j: Spin, n_phi: usize, n_theta: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if n_phi < 2 || n_theta < 2 {
            return Err(Error::InvalidParameter(format!("QPD grid {n_phi}x{n_theta} below 2x2")));
        }
        if values.len() != n_phi || values.iter().any(|row| row.len() != n_theta) {
            return Err(Error::InvalidParameter("QPD values do not match grid resolution".into()));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("QPD value outside [0, 1]".into()));
        }
        Ok(QpdGrid { j, n_phi, n_theta, values })
    }

    pub fn j(&self) -> Spin {
        self.j
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn phi(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n_phi as f64
    }

    pub fn theta(&self, l: usize) -> f64 {
        PI * l as f64 / (self.n_theta - 1) as f64
    }

    pub fn value(&self, i_phi: usize, i_theta: usize) -> f64 {
        self.values[i_phi][i_theta]
    }

    /// Grid indices nearest to `(phi, theta)`.
    pub fn nearest(&self, phi: f64, theta: f64) -> (usize, usize) {
        let i = ((phi.rem_euclid(TAU) / TAU * self.n_phi as f64).round() as usize) % self.n_phi;
        let l = (theta.clamp(0.0, PI) / PI * (self.n_theta - 1) as f64).round() as usize;
        (i, l)
    }

    /// `(2J+1)/(4π) ∫ Q sinθ dθ dφ`: rectangle rule in φ, trapezoid in θ.
    /// Equals one for any state up to quadrature error.
    pub fn sphere_integral(&self) -> f64 {
        let d_phi = TAU / self.n_phi as f64;
        let d_theta = PI / (self.n_theta - 1) as f64;
        let mut total = 0.0;
        for l in 0..self.n_theta {
            let w = if l == 0 || l == self.n_theta - 1 { 0.5 } else { 1.0 };
            let ring: f64 = self.values.iter().map(|row| row[l]).sum();
            total += w * ring * self.theta(l).sin();
        }
        total * d_phi * d_theta * self.j.dim() as f64 / (4.0 * PI)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn qpd(s: &SpinState, n_phi: usize, n_theta: usize) -> Result<QpdGrid> {
    if n_phi < 2 || n_theta < 2 {
        return Err(Error::InvalidParameter(format!("QPD grid {n_phi}x{n_theta} below 2x2")));
    }
    let j = s.j();
    let step = PI / (n_theta - 1) as f64;
    let moduli: Vec<Vec<f64>> = (0..n_theta).map(|l| css_moduli(j, step * l as f64)).collect();
    let amps = s.amplitudes();
    let values = (0..n_phi)
        .into_par_iter()
        .map(|i| {
            let phi = TAU * i as f64 / n_phi as f64;
            // s_k e^{-ikφ}: the CSS coefficient conjugated against the state
            let twisted: Vec<Complex64> =
                amps.iter().enumerate().map(|(k, a)| a * Complex64::from_polar(1.0, -(k as f64) * phi)).collect();
            moduli
                .iter()
                .map(|w| {
                    let overlap: Complex64 = w.iter().zip(&twisted).map(|(wk, t)| t * wk).sum();
                    overlap.norm_sqr().min(1.0)
                })
                .collect()
        })
        .collect();
    QpdGrid::from_values(j, n_phi, n_theta, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinMoments {
    /// `(⟨Jx⟩, ⟨Jy⟩, ⟨Jz⟩)`.
    pub mean: [f64; 3],
    pub variance_x: f64,
    pub variance_y: f64,
    pub variance_z: f64,
}

impl SpinMoments {
    pub fn sd_z(&self) -> f64 {
        self.variance_z.sqrt()
    }
}

pub fn spin_moments(s: &SpinState) -> SpinMoments {
    let j = s.j();
    let amps = s.amplitudes();
    let probs = prob_distribution(s);
    let (mut mz, mut mz2) = (0.0, 0.0);
    for (i, p) in probs.iter().enumerate() {
        let m = j.m(i);
        mz += m * p;
        mz2 += m * m * p;
    }
    let expect = |kind| {
        let v = build_operator(j, kind).apply(amps);
        let mean: Complex64 = amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        let second: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        (mean.re, second)
    };
    let (mx, mx2) = expect(OperatorKind::Jx);
    let (my, my2) = expect(OperatorKind::Jy);
    SpinMoments {
        mean: [mx, my, mz],
        variance_x: (mx2 - mx * mx).max(0.0),
        variance_y: (my2 - my * my).max(0.0),
        variance_z: (mz2 - mz * mz).max(0.0),
    }
}

/// Field-estimation setting for `H_B = −γ_s B Jz` over interrogation time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldEstimationParams {
    pub gamma_s: f64,
    pub t: f64,
}

impl FieldEstimationParams {
    pub fn new(gamma_s: f64, t: f64) -> Result<Self> {
        if !(gamma_s > 0.0 && gamma_s.is_finite() && t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gyromagnetic ratio and interrogation time must be positive, got ({gamma_s}, {t})"
            )));
        }
        Ok(FieldEstimationParams { gamma_s, t })
    }
}

/// Pure-state Cramér–Rao bounds. Both are bounds, not achieved values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherBound {
    /// `4(γ_s t)² ⟨ΔJz²⟩ ≥ I_B`.
    pub fisher_upper: f64,
    /// `1/sqrt(fisher_upper) ≤ σ_B`; infinite for a Jz eigenstate.
    pub sigma_lower: f64,
}

pub fn fisher_bound(variance_z: f64, p: &FieldEstimationParams) -> Result<FisherBound> {
    if !(variance_z >= 0.0) || !variance_z.is_finite() {
        return Err(Error::InvalidParameter(format!("variance must be finite and non-negative, got {variance_z}")));
    }
    let gt = p.gamma_s * p.t;
    let fisher_upper = 4.0 * gt * gt * variance_z;
    let sigma_lower = if fisher_upper == 0.0 { f64::INFINITY } else { fisher_upper.sqrt().recip() };
    Ok(FisherBound { fisher_upper, sigma_lower })
}
