//! Collective-spin basis, operators and special states.
//!
//! All vectors live in the symmetric sector of dimension `2J + 1` and use the
//! descending-M ordering: index 0 is `|J, J⟩`, index `2J` is `|J, -J⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::dynamics::{rotate, Axis};
use crate::error::{Error, Result};

/// Amplitude vectors whose squared norm is further than this from one are rejected.
pub const NORM_TOL: f64 = 1e-10;

const HERMITICITY_TOL: f64 = 1e-14;

/// Total spin J, stored as the integer 2J.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin(u32);

impl Spin {
    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin(0.0));
        }
        Ok(Spin(twice))
    }

    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 1.0 || twice.fract() != 0.0 || twice > u32::MAX as f64 {
            return Err(Error::InvalidSpin(j));
        }
        Ok(Spin(twice as u32))
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Magnetic quantum number at basis index `i`.
    pub fn m(self, i: usize) -> f64 {
        self.value() - i as f64
    }

    pub fn index_of(self, m: f64) -> Option<usize> {
        let k = self.value() - m;
        if k < 0.0 || k.fract() != 0.0 || k > self.0 as f64 {
            None
        } else {
            Some(k as usize)
        }
    }

    /// `J(J+1) - M(M+1)`, the squared raising matrix element out of `|J, M⟩`.
    pub(crate) fn raise_coeff_sq(self, m: f64) -> f64 {
        let j = self.value();
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = f64::deserialize(d)?;
        Spin::new(j).map_err(serde::de::Error::custom)
    }
}

/// A normalized pure state of the collective spin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRecord", into = "StateRecord")]
pub struct SpinState {
    j: Spin,
    amplitudes: Vec<Complex64>,
    real: bool,
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    j: f64,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<StateRecord> for SpinState {
    type Error = Error;

    fn try_from(r: StateRecord) -> Result<Self> {
        let j = Spin::new(r.j)?;
        let amps = r.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        SpinState::new(j, amps)
    }
}

impl From<SpinState> for StateRecord {
    fn from(s: SpinState) -> Self {
        StateRecord { j: s.j.value(), amplitudes: s.amplitudes.iter().map(|c| [c.re, c.im]).collect() }
    }
}

impl SpinState {
    /// Validates length and normalization (to [`NORM_TOL`]) and renormalizes
    /// the vector exactly. `real_flag` is set when every imaginary part is zero.
    pub fn new(j: Spin, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != j.dim() {
            return Err(Error::DimensionMismatch { expected: j.dim(), got: amplitudes.len() });
        }
        let norm_sqr: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        let inv = norm_sqr.sqrt().recip();
        amplitudes.iter_mut().for_each(|c| *c *= inv);
        let real = amplitudes.iter().all(|c| c.im == 0.0);
        Ok(SpinState { j, amplitudes, real })
    }

    /// Like [`SpinState::new`] but rescales any nonzero vector.
    pub fn normalized(j: Spin, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        amplitudes.iter_mut().for_each(|c| *c /= norm);
        SpinState::new(j, amplitudes)
    }

    /// The Jz eigenstate at basis index `index` (M = J - index).
    pub fn basis(j: Spin, index: usize) -> Result<Self> {
        if index >= j.dim() {
            return Err(Error::InvalidParameter(format!("basis index {index} out of range for J = {j}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); j.dim()];
        amps[index] = Complex64::new(1.0, 0.0);
        SpinState::new(j, amps)
    }

    /// `|J, J⟩`.
    pub fn highest(j: Spin) -> Self {
        SpinState::basis(j, 0).expect("index 0 always exists")
    }

    pub fn j(&self) -> Spin {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn amplitude(&self, m: f64) -> Option<Complex64> {
        self.j.index_of(m).map(|i| self.amplitudes[i])
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpinState) -> Result<Complex64> {
        if self.j != other.j {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn max_abs_diff(&self, other: &SpinState) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Bloch-sphere direction of a coherent spin state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentSpinParams {
    /// Azimuth in `[0, 2π)`.
    pub alpha: f64,
    /// Polar angle in `[0, π]`.
    pub beta: f64,
}

impl CoherentSpinParams {
    /// Wraps arbitrary angles onto the canonical ranges. A polar angle past π
    /// is reflected and the azimuth shifted by π, which names the same point.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite CSS angles ({alpha}, {beta})")));
        }
        let mut alpha = alpha;
        let mut beta = beta.rem_euclid(TAU);
        if beta > PI {
            beta = TAU - beta;
            alpha += PI;
        }
        let mut alpha = alpha.rem_euclid(TAU);
        if alpha >= TAU {
            alpha = 0.0;
        }
        Ok(CoherentSpinParams { alpha, beta })
    }
}

fn ln_pow(x: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        n as f64 * x.ln()
    }
}

/// Moduli of the CSS expansion coefficients at polar angle `beta`, evaluated
/// in log space so that `C(2J, J-M)` never overflows.
pub(crate) fn css_moduli(j: Spin, beta: f64) -> Vec<f64> {
    let n = j.twice();
    let (c, s) = ((beta / 2.0).cos().abs(), (beta / 2.0).sin().abs());
    (0..=n)
        .map(|k| {
            let ln = 0.5 * ln_binomial(n as u64, k as u64) + ln_pow(c, n - k) + ln_pow(s, k);
            ln.exp()
        })
        .collect()
}

/// Coherent spin state pointing along `(alpha, beta)`.
pub fn make_css(j: Spin, params: CoherentSpinParams) -> SpinState {
    let amps = css_moduli(j, params.beta)
        .into_iter()
        .enumerate()
        .map(|(k, r)| Complex64::from_polar(r, k as f64 * params.alpha))
        .collect();
    SpinState::normalized(j, amps).expect("CSS coefficients have unit norm")
}

/// Equally weighted superposition of all Jz eigenstates.
pub fn make_ewss(j: Spin) -> SpinState {
    let a = (j.dim() as f64).sqrt().recip();
    SpinState::normalized(j, vec![Complex64::new(a, 0.0); j.dim()]).expect("uniform vector")
}

/// `exp(-iπ/2 Jx)|J, 0⟩`.
pub fn make_twin_fock(j: Spin) -> Result<SpinState> {
    if !j.is_integer() {
        return Err(Error::TwinFockHalfInteger(j.value()));
    }
    let zero = SpinState::basis(j, j.index_of(0.0).expect("integer J has M = 0"))?;
    rotate(&zero, Axis::X, FRAC_PI_2)
}

/// `(|J, J⟩ + |J, -J⟩)/√2`.
pub fn make_cat(j: Spin) -> SpinState {
    let mut amps = vec![Complex64::new(0.0, 0.0); j.dim()];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[j.dim() - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    SpinState::normalized(j, amps).expect("two unit entries")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hermiticity {
    Hermitian,
    SkewHermitian,
    /// Ladder operators, which are neither.
    General,
}

/// Operator on the `2J+1` space with nonzero elements only on diagonals
/// `c - r ∈ {-2, ..., 2}`.
///
/// Band `d` is stored at slot `d + 2` with length `dim - |d|`; element
/// `(r, r + d)` sits at position `min(r, r + d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedOperator {
    j: Spin,
    bands: [Vec<Complex64>; 5],
    tag: Hermiticity,
}

fn band_len(dim: usize, d: i32) -> usize {
    dim.saturating_sub(d.unsigned_abs() as usize)
}

impl BandedOperator {
    pub fn zeros(j: Spin, tag: Hermiticity) -> Self {
        let dim = j.dim();
        let bands = std::array::from_fn(|s| vec![Complex64::new(0.0, 0.0); band_len(dim, s as i32 - 2)]);
        BandedOperator { j, bands, tag }
    }

    /// Builds from explicit bands (offsets -2..=2 in order) and checks that
    /// the declared tag holds.
    pub fn new(j: Spin, bands: [Vec<Complex64>; 5], tag: Hermiticity) -> Result<Self> {
        let dim = j.dim();
        for (s, band) in bands.iter().enumerate() {
            let want = band_len(dim, s as i32 - 2);
            if band.len() != want {
                return Err(Error::DimensionMismatch { expected: want, got: band.len() });
            }
        }
        let op = BandedOperator { j, bands, tag };
        if !op.satisfies(tag) {
            return Err(Error::InvalidParameter(format!("bands are not {tag:?}")));
        }
        Ok(op)
    }

    pub fn j(&self) -> Spin {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn tag(&self) -> Hermiticity {
        self.tag
    }

    pub fn band(&self, d: i32) -> &[Complex64] {
        &self.bands[(d + 2) as usize]
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let d = c as i64 - r as i64;
        if d.abs() > 2 {
            return Complex64::new(0.0, 0.0);
        }
        self.bands[(d + 2) as usize][r.min(c)]
    }

    fn set(&mut self, r: usize, c: usize, v: Complex64) {
        let d = c as i64 - r as i64;
        self.bands[(d + 2) as usize][r.min(c)] = v;
    }

    /// True when every stored element has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.bands.iter().flatten().all(|c| c.im == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.bands.iter().flatten().all(|c| c.norm_sqr() == 0.0)
    }

    fn satisfies(&self, tag: Hermiticity) -> bool {
        let sign = match tag {
            Hermiticity::General => return true,
            Hermiticity::Hermitian => 1.0,
            Hermiticity::SkewHermitian => -1.0,
        };
        let dim = self.dim();
        for r in 0..dim {
            for c in r..(r + 3).min(dim) {
                let a = self.get(r, c);
                let b = self.get(c, r).conj() * sign;
                let scale = a.norm().max(b.norm()).max(1.0);
                if (a - b).norm() > HERMITICITY_TOL * scale {
                    return false;
                }
            }
        }
        true
    }

    /// `s * self`; the tag follows the scalar's phase.
    pub fn scaled(&self, s: Complex64) -> Self {
        let bands = self.bands.clone().map(|b| b.into_iter().map(|x| x * s).collect());
        let tag = match self.tag {
            Hermiticity::General => Hermiticity::General,
            t if s.im == 0.0 => t,
            Hermiticity::Hermitian if s.re == 0.0 => Hermiticity::SkewHermitian,
            Hermiticity::SkewHermitian if s.re == 0.0 => Hermiticity::Hermitian,
            _ => Hermiticity::General,
        };
        BandedOperator { j: self.j, bands, tag }
    }

    /// `self + other`, tagged by whichever property survives.
    pub fn add(&self, other: &BandedOperator) -> Result<Self> {
        if self.j != other.j {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let bands = std::array::from_fn(|s| self.bands[s].iter().zip(&other.bands[s]).map(|(a, b)| a + b).collect());
        let mut op = BandedOperator { j: self.j, bands, tag: Hermiticity::General };
        op.tag = if self.tag == other.tag && self.tag != Hermiticity::General {
            self.tag
        } else if op.satisfies(Hermiticity::Hermitian) {
            Hermiticity::Hermitian
        } else if op.satisfies(Hermiticity::SkewHermitian) {
            Hermiticity::SkewHermitian
        } else {
            Hermiticity::General
        };
        Ok(op)
    }

    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let dim = self.dim();
        debug_assert_eq!(v.len(), dim);
        debug_assert_eq!(out.len(), dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = self.bands[2][r] * v[r];
            if r >= 2 {
                acc += self.bands[0][r - 2] * v[r - 2];
            }
            if r >= 1 {
                acc += self.bands[1][r - 1] * v[r - 1];
            }
            if r + 1 < dim {
                acc += self.bands[3][r] * v[r + 1];
            }
            if r + 2 < dim {
                acc += self.bands[4][r] * v[r + 2];
            }
            *o = acc;
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_into(v, &mut out);
        out
    }

    /// Bound on the operator 2-norm: the maximum absolute row sum.
    pub fn norm_bound(&self) -> f64 {
        let dim = self.dim();
        (0..dim)
            .map(|r| (r.saturating_sub(2)..(r + 3).min(dim)).map(|c| self.get(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |r, c| self.get(r, c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Jx,
    Jy,
    Jz,
    Jplus,
    Jminus,
    /// `J+² − J−²`, real antisymmetric.
    Jplus2MinusJminus2,
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jx" => Ok(OperatorKind::Jx),
            "jy" => Ok(OperatorKind::Jy),
            "jz" => Ok(OperatorKind::Jz),
            "jplus" | "j+" => Ok(OperatorKind::Jplus),
            "jminus" | "j-" => Ok(OperatorKind::Jminus),
            "jplus2_minus_jminus2" => Ok(OperatorKind::Jplus2MinusJminus2),
            _ => Err(Error::UnknownOperator(s.to_string())),
        }
    }
}

pub fn build_operator(j: Spin, kind: OperatorKind) -> BandedOperator {
    let dim = j.dim();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    // raise_sq[r] = ⟨M_r| J+ |M_{r+1}⟩²
    let raise_sq: Vec<f64> = (0..dim.saturating_sub(1)).map(|r| j.raise_coeff_sq(j.m(r + 1))).collect();
    let raise: Vec<f64> = raise_sq.iter().map(|x| x.sqrt()).collect();
    match kind {
        OperatorKind::Jz => {
            let mut op = BandedOperator::zeros(j, Hermiticity::Hermitian);
            for r in 0..dim {
                op.set(r, r, c(j.m(r), 0.0));
            }
            op
        }
        OperatorKind::Jplus | OperatorKind::Jminus => {
            let mut op = BandedOperator::zeros(j, Hermiticity::General);
            for (r, &x) in raise.iter().enumerate() {
                if kind == OperatorKind::Jplus {
                    op.set(r, r + 1, c(x, 0.0));
                } else {
                    op.set(r + 1, r, c(x, 0.0));
                }
            }
            op
        }
        OperatorKind::Jx => {
            let mut op = BandedOperator::zeros(j, Hermiticity::Hermitian);
            for (r, &x) in raise.iter().enumerate() {
                op.set(r, r + 1, c(x / 2.0, 0.0));
                op.set(r + 1, r, c(x / 2.0, 0.0));
            }
            op
        }
        OperatorKind::Jy => {
            let mut op = BandedOperator::zeros(j, Hermiticity::Hermitian);
            for (r, &x) in raise.iter().enumerate() {
                op.set(r, r + 1, c(0.0, -x / 2.0));
                op.set(r + 1, r, c(0.0, x / 2.0));
            }
            op
        }
        OperatorKind::Jplus2MinusJminus2 => {
            let mut op = BandedOperator::zeros(j, Hermiticity::SkewHermitian);
            for r in 0..dim.saturating_sub(2) {
                let x = (raise_sq[r] * raise_sq[r + 1]).sqrt();
                op.set(r, r + 2, c(x, 0.0));
                op.set(r + 2, r, c(-x, 0.0));
            }
            op
        }
    }
}
