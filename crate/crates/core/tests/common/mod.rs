//! Dense brute-force oracles shared by the integration tests. Nothing here
//! calls the library's operators or propagators.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(Jz, J+)` in descending-M order for spin `j`.
pub fn ladder(j: f64) -> (CMat, CMat) {
    let dim = (2.0 * j).round() as usize + 1;
    let m = |i: usize| j - i as f64;
    let jz = CMat::from_fn(dim, dim, |r, k| if r == k { c(m(r), 0.0) } else { c(0.0, 0.0) });
    // J+|J,M⟩ = sqrt(J(J+1) − M(M+1)) |J,M+1⟩; M+1 sits one index up
    let jp = CMat::from_fn(dim, dim, |r, k| {
        if r + 1 == k {
            let mm = m(k);
            c((j * (j + 1.0) - mm * (mm + 1.0)).sqrt(), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    (jz, jp)
}

pub fn jx_jy_jz(j: f64) -> (CMat, CMat, CMat) {
    let (jz, jp) = ladder(j);
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5, 0.0);
    let jy = (&jp - &jm) * c(0.0, -0.5);
    (jx, jy, jz)
}

/// Taylor series with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    let norm: f64 = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * c(0.5f64.powi(s), 0.0);
    let n = a.nrows();
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// TACT generator `−(1/2)(J+² − J−²)` at χ = 1, γ = 0.
pub fn tact(j: f64) -> CMat {
    let (_, jp) = ladder(j);
    let jm = jp.adjoint();
    (&jp * &jp - &jm * &jm) * c(-0.5, 0.0)
}

pub fn highest(j: f64) -> Vec<Complex64> {
    let dim = (2.0 * j).round() as usize + 1;
    (0..dim).map(|i| if i == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()
}

pub fn apply(m: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    let out = m * nalgebra::DVector::from_column_slice(v);
    out.iter().copied().collect()
}

/// `exp(−iπ/2 Jy)·exp(τG)|J,J⟩`.
pub fn sss(j: f64, tau: f64) -> Vec<Complex64> {
    let (_, jy, _) = jx_jy_jz(j);
    let twisted = apply(&expm(&(tact(j) * c(tau, 0.0))), &highest(j));
    apply(&expm(&(jy * c(0.0, -std::f64::consts::FRAC_PI_2))), &twisted)
}

/// `⟨ΔO²⟩` for Hermitian `o`.
pub fn variance(o: &CMat, v: &[Complex64]) -> f64 {
    let ov = apply(o, v);
    let mean: Complex64 = v.iter().zip(&ov).map(|(a, b)| a.conj() * b).sum();
    let second: f64 = ov.iter().map(|z| z.norm_sqr()).sum();
    second - mean.re * mean.re
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
