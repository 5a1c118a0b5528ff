//! Two-axis counter-twisting evolution and collective rotations.
//!
//! Units: ħ = 1. With the default χ = 1 the evolution time τ is dimensionless.

mod krylov;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{build_operator, BandedOperator, Hermiticity, OperatorKind, Spin, SpinState};

/// Largest dimension `2J+1` propagated with a dense matrix exponential under
/// [`Method::Auto`].
pub const DENSE_MAX_DIM: usize = 64;

/// Evolved states must keep `|psi|^2` within this of one.
pub const UNITARITY_TOL: f64 = 1e-10;

const REALITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dense up to [`DENSE_MAX_DIM`], Krylov above.
    #[default]
    Auto,
    DenseExpm,
    Krylov,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "dense" | "dense_expm" => Ok(Method::DenseExpm),
            "krylov" => Ok(Method::Krylov),
            _ => Err(Error::InvalidParameter(format!("unknown propagation method `{s}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::DenseExpm => "dense_expm",
            Method::Krylov => "krylov",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Requested absolute error of one propagation, in `(0, 1e-6]`.
    pub tolerance: f64,
    pub max_substeps: usize,
    pub krylov_dim: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig { method: Method::Auto, tolerance: 1e-10, max_substeps: 100_000, krylov_dim: 30 }
    }
}

impl PropagatorConfig {
    pub fn new(method: Method, tolerance: f64, max_substeps: usize) -> Result<Self> {
        let cfg = PropagatorConfig { method, tolerance, max_substeps, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "propagator tolerance must lie in (0, 1e-6], got {}",
                self.tolerance
            )));
        }
        if self.max_substeps == 0 || self.krylov_dim == 0 {
            return Err(Error::InvalidParameter("propagator caps must be positive".into()));
        }
        Ok(())
    }

    fn resolve(&self, dim: usize) -> Method {
        match self.method {
            Method::Auto if dim <= DENSE_MAX_DIM => Method::DenseExpm,
            Method::Auto => Method::Krylov,
            m => m,
        }
    }
}

/// Rotation axis: a coordinate label or an arbitrary unit vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
    Vector([f64; 3]),
}

impl Axis {
    pub fn unit_vector(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
            Axis::Vector(n) => n,
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::InvalidParameter(format!("unknown axis `{s}`"))),
        }
    }
}

/// Squeezing parameters and the final readout rotation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistProtocol {
    pub chi: f64,
    pub gamma: f64,
    pub tau: f64,
    pub rotation_axis: Axis,
    pub rotation_angle: f64,
}

impl Default for TwistProtocol {
    fn default() -> Self {
        TwistProtocol { chi: 1.0, gamma: 0.0, tau: 0.0, rotation_axis: Axis::Y, rotation_angle: FRAC_PI_2 }
    }
}

impl TwistProtocol {
    pub fn new(chi: f64, gamma: f64, tau: f64, rotation_axis: Axis, rotation_angle: f64) -> Result<Self> {
        let p = TwistProtocol { chi, gamma, tau, rotation_axis, rotation_angle };
        p.validate()?;
        Ok(p)
    }

    /// Default protocol (χ = 1, γ = 0, π/2 about y) at evolution time `tau`.
    pub fn at(tau: f64) -> Result<Self> {
        TwistProtocol { tau, ..Default::default() }.validate_into()
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        TwistProtocol { tau, ..self }.validate_into()
    }

    fn validate_into(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be finite and >= 0, got {}", self.tau)));
        }
        if !(self.chi.is_finite() && self.chi > 0.0) {
            return Err(Error::InvalidParameter(format!("chi must be positive, got {}", self.chi)));
        }
        if !self.gamma.is_finite() || !self.rotation_angle.is_finite() {
            return Err(Error::InvalidParameter("gamma and rotation angle must be finite".into()));
        }
        let n = self.rotation_axis.unit_vector();
        let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (len - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("rotation axis has length {len}")));
        }
        Ok(())
    }
}

/// `G = -iH/ħ = -(χ/2)(e^{-2iγ}J+² − e^{2iγ}J−²)`, skew-Hermitian with bandwidth 2.
pub fn tact_generator(j: Spin, chi: f64, gamma: f64) -> BandedOperator {
    let base = build_operator(j, OperatorKind::Jplus2MinusJminus2);
    let up = Complex64::from_polar(-chi / 2.0, -2.0 * gamma);
    // J−² is the transpose of J+², stored with a minus sign in `base`
    let down = Complex64::from_polar(-chi / 2.0, 2.0 * gamma);
    let dim = j.dim();
    let zero = |d: i32| vec![Complex64::new(0.0, 0.0); dim.saturating_sub(d.unsigned_abs() as usize)];
    let bands = [
        base.band(-2).iter().map(|x| x * down).collect(),
        zero(-1),
        zero(0),
        zero(1),
        base.band(2).iter().map(|x| x * up).collect(),
    ];
    BandedOperator::new(j, bands, Hermiticity::SkewHermitian).expect("TACT generator is skew-Hermitian")
}

fn dense_expv(generator: &BandedOperator, v: &[Complex64], t: f64) -> Vec<Complex64> {
    let m = (generator.to_dense() * Complex64::new(t, 0.0)).exp();
    let x = nalgebra::DVector::from_column_slice(v);
    (m * x).iter().copied().collect()
}

/// `exp(tau·G)·state` for a skew-Hermitian generator `G`.
pub fn evolve(state: &SpinState, generator: &BandedOperator, tau: f64, cfg: &PropagatorConfig) -> Result<SpinState> {
    if generator.j() != state.j() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: generator.dim() });
    }
    if generator.tag() != Hermiticity::SkewHermitian {
        return Err(Error::InvalidParameter("evolution generator must be skew-Hermitian".into()));
    }
    if !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be finite, got {tau}")));
    }
    cfg.validate()?;
    if tau == 0.0 || generator.is_zero() {
        return Ok(state.clone());
    }

    let mut out = match cfg.resolve(state.dim()) {
        Method::DenseExpm => dense_expv(generator, state.amplitudes(), tau),
        _ => krylov::expv(generator, state.amplitudes(), tau, cfg.tolerance, cfg.max_substeps, cfg.krylov_dim)?,
    };

    let norm_sqr: f64 = out.iter().map(|c| c.norm_sqr()).sum();
    if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > UNITARITY_TOL {
        return Err(Error::Propagation(format!("norm drifted to {norm_sqr} after propagation")));
    }
    // a real orthogonal propagator keeps a real state real
    if state.is_real() && generator.is_real() {
        let max_im = out.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if max_im <= REALITY_TOL {
            out.iter_mut().for_each(|c| c.im = 0.0);
        }
    }
    SpinState::new(state.j(), out)
}

/// `exp(-i·angle·n·J)` with the default propagator.
pub fn rotate(state: &SpinState, axis: Axis, angle: f64) -> Result<SpinState> {
    rotate_with(state, axis, angle, &PropagatorConfig::default())
}

pub fn rotate_with(state: &SpinState, axis: Axis, angle: f64, cfg: &PropagatorConfig) -> Result<SpinState> {
    if !angle.is_finite() {
        return Err(Error::InvalidParameter(format!("rotation angle must be finite, got {angle}")));
    }
    let [nx, ny, nz] = axis.unit_vector();
    let len = (nx * nx + ny * ny + nz * nz).sqrt();
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("rotation axis has length {len}")));
    }
    if angle == 0.0 {
        return Ok(state.clone());
    }
    let j = state.j();
    if nx == 0.0 && ny == 0.0 {
        // Jz is diagonal: pure phases
        let amps = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::from_polar(1.0, -angle * nz * j.m(i)))
            .collect();
        return SpinState::new(j, amps);
    }
    let mut n_dot_j = BandedOperator::zeros(j, Hermiticity::Hermitian);
    for (w, kind) in [(nx, OperatorKind::Jx), (ny, OperatorKind::Jy), (nz, OperatorKind::Jz)] {
        if w != 0.0 {
            n_dot_j = n_dot_j.add(&build_operator(j, kind).scaled(Complex64::new(w, 0.0)))?;
        }
    }
    let generator = n_dot_j.scaled(Complex64::new(0.0, -1.0));
    evolve(state, &generator, angle, cfg)
}

/// `R(axis, angle)·exp(τ·G)|J, J⟩`, the squeezed state read out after rotation.
pub fn make_sss(j: Spin, protocol: &TwistProtocol, cfg: &PropagatorConfig) -> Result<SpinState> {
    protocol.validate()?;
    let g = tact_generator(j, protocol.chi, protocol.gamma);
    let evolved = evolve(&SpinState::highest(j), &g, protocol.tau, cfg)?;
    rotate_with(&evolved, protocol.rotation_axis, protocol.rotation_angle, cfg)
}
