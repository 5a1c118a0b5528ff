//! Action of `exp(tK)` on a vector for skew-Hermitian banded `K`.
//!
//! Lanczos runs on the Hermitian `H = iK`, so `exp(tK) = exp(-itH)` and the
//! projected problem is a real symmetric tridiagonal matrix. One Krylov basis
//! serves every trial step length: a rejected step only re-evaluates the small
//! exponential, not the basis.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spin::BandedOperator;

struct LanczosBasis {
    q: Vec<Vec<Complex64>>,
    eigvals: Vec<f64>,
    /// Eigenvectors of the projected tridiagonal matrix, one per column.
    u: DMatrix<f64>,
    /// Residual coupling `β_m`; zero when the subspace is invariant.
    beta_next: f64,
}

impl LanczosBasis {
    fn build(op: &BandedOperator, v: &[Complex64], m_max: usize, scale: f64) -> Self {
        let dim = v.len();
        let beta0 = norm(v);
        let mut q: Vec<Vec<Complex64>> = vec![v.iter().map(|c| c / beta0).collect()];
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta = Vec::with_capacity(m_max);
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let i = Complex64::new(0.0, 1.0);
        let mut beta_next = 0.0;

        for k in 0..m_max {
            op.apply_into(&q[k], &mut w);
            w.iter_mut().for_each(|x| *x *= i);
            alpha.push(dot(&q[k], &w).re);
            // two passes of full reorthogonalization
            for _ in 0..2 {
                for qj in &q {
                    let c = dot(qj, &w);
                    w.iter_mut().zip(qj).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            if b <= 1e-13 * scale || k + 1 == dim {
                break;
            }
            if k + 1 == m_max {
                beta_next = b;
                break;
            }
            beta.push(b);
            q.push(w.iter().map(|c| c / b).collect());
        }

        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            t[(k, k)] = alpha[k];
            if k + 1 < m {
                t[(k, k + 1)] = beta[k];
                t[(k + 1, k)] = beta[k];
            }
        }
        let eig = SymmetricEigen::new(t);
        q.truncate(m);
        LanczosBasis { q, eigvals: eig.eigenvalues.iter().copied().collect(), u: eig.eigenvectors, beta_next }
    }

    /// `y = exp(-ihT) e1` in the Lanczos basis.
    fn small_exp(&self, h: f64) -> Vec<Complex64> {
        let m = self.eigvals.len();
        let c: Vec<Complex64> = (0..m).map(|k| Complex64::from_polar(self.u[(0, k)], -h * self.eigvals[k])).collect();
        (0..m).map(|row| (0..m).map(|k| c[k] * self.u[(row, k)]).sum()).collect()
    }

    fn error_estimate(&self, y: &[Complex64]) -> f64 {
        match y.last() {
            Some(last) if self.beta_next > 0.0 => self.beta_next * last.norm(),
            _ => 0.0,
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(t·op)·v` to absolute 2-norm accuracy `tol` over the whole interval.
///
/// Substeps are accepted when their error estimate is below `tol·h/|t|`.
pub(crate) fn expv(
    op: &BandedOperator,
    v: &[Complex64],
    t: f64,
    tol: f64,
    max_substeps: usize,
    krylov_dim: usize,
) -> Result<Vec<Complex64>> {
    let dim = v.len();
    let m_max = krylov_dim.min(dim).max(1);
    let scale = op.norm_bound().max(f64::MIN_POSITIVE);
    let total = t.abs();
    let sign = t.signum();
    let mut state = v.to_vec();
    let mut remaining = total;
    let mut h = total;
    let mut substeps = 0usize;

    while remaining > 0.0 {
        if substeps >= max_substeps {
            return Err(Error::Propagation(format!(
                "Krylov propagation exceeded {max_substeps} substeps with {remaining:e} of {total:e} remaining"
            )));
        }
        let beta0 = norm(&state);
        let basis = LanczosBasis::build(op, &state, m_max, scale);
        h = h.min(remaining);
        let y = loop {
            let y = basis.small_exp(sign * h);
            let err = beta0 * basis.error_estimate(&y);
            // the estimate cannot resolve below roundoff in U·Uᵀ
            let floor = 8.0 * f64::EPSILON * y.len() as f64 * basis.beta_next * beta0;
            if err <= (tol * h / total).max(floor) {
                break y;
            }
            h *= 0.5;
            if h < total * 1e-14 {
                return Err(Error::Propagation(format!("Krylov step collapsed to {h:e} with error estimate {err:e}")));
            }
        };
        let mut next = vec![Complex64::new(0.0, 0.0); dim];
        for (qk, yk) in basis.q.iter().zip(&y) {
            let s = yk * beta0;
            next.iter_mut().zip(qk).for_each(|(n, x)| *n += s * x);
        }
        state = next;
        remaining -= h;
        if remaining <= total * 1e-15 {
            remaining = 0.0;
        }
        substeps += 1;
        h *= 2.0;
    }
    Ok(state)
}
