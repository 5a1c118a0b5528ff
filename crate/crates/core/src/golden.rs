//! Golden-section search for the maximum of a unimodal scalar function.

use crate::error::{Error, Result};

/// 1/φ
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Shrinks `[a, b]` until its width is at most `tol`, returning the best
/// interior point evaluated. The objective may fail; the first error aborts.
pub fn maximize<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<GoldenResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite() && a <= b && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("golden section on [{a}, {b}] with tol {tol}")));
    }
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while b - a > tol && iterations < max_iter {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        iterations += 1;
    }
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(GoldenResult { x, fx, iterations })
}
