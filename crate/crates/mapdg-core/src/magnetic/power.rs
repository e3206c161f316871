//! Power iteration for the top eigenpair of a Hermitian operator.

use crate::dense::CMat;
use crate::error::{Error, Result};
use crate::magnetic::ComplexCsr;
use crate::scalar::Scalar;

/// Anything that can apply a Hermitian matrix to a split-plane vector.
pub trait HermitianOp<T> {
    fn dim(&self) -> usize;
    fn apply(&self, xr: &[T], xi: &[T], yr: &mut [T], yi: &mut [T]);
    /// Upper bound on every eigenvalue magnitude (Gershgorin row sums).
    fn eig_bound(&self) -> T;
}

impl<T: Scalar> HermitianOp<T> for ComplexCsr<T> {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn apply(&self, xr: &[T], xi: &[T], yr: &mut [T], yi: &mut [T]) {
        self.spmv(xr, xi, yr, yi);
    }

    fn eig_bound(&self) -> T {
        self.abs_row_sum_max()
    }
}

/// Dense Hermitian operator over split planes.
#[derive(Debug, Clone)]
pub struct DenseHermitian<T> {
    h: CMat<T>,
}

impl<T: Scalar> DenseHermitian<T> {
    pub fn new(h: CMat<T>) -> Result<Self> {
        if h.rows() != h.cols() {
            return Err(Error::Shape("dense operator must be square".into()));
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.h
    }
}

impl<T: Scalar> HermitianOp<T> for DenseHermitian<T> {
    fn dim(&self) -> usize {
        self.h.rows()
    }

    fn apply(&self, xr: &[T], xi: &[T], yr: &mut [T], yi: &mut [T]) {
        let n = self.h.rows();
        for r in 0..n {
            let hr = self.h.re.row(r);
            let hi = self.h.im.row(r);
            let mut ar = T::zero();
            let mut ai = T::zero();
            for c in 0..n {
                ar += hr[c] * xr[c] - hi[c] * xi[c];
                ai += hr[c] * xi[c] + hi[c] * xr[c];
            }
            yr[r] = ar;
            yi[r] = ai;
        }
    }

    fn eig_bound(&self) -> T {
        let n = self.h.rows();
        (0..n)
            .map(|r| {
                let hr = self.h.re.row(r);
                let hi = self.h.im.row(r);
                hr.iter()
                    .zip(hi)
                    .map(|(&p, &q)| (p * p + q * q).sqrt())
                    .sum::<T>()
            })
            .fold(T::zero(), T::max)
    }
}

/// Converged top eigenpair.
#[derive(Debug, Clone)]
pub struct PowerIteration<T> {
    /// Rayleigh quotient of the returned vector (an eigenvalue estimate of
    /// the unshifted operator).
    pub eigenvalue: T,
    /// Eigenvector scaled to squared norm `n`, split planes.
    pub vec_re: Vec<T>,
    pub vec_im: Vec<T>,
    pub iterations: usize,
    pub residual: T,
    /// Set when the very first iterate already met the tolerance: the
    /// spectrum gave the start vector nothing to converge through (e.g. a
    /// scaled identity), so any unit-pattern vector is as good as the
    /// returned one.
    pub degenerate: bool,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit_f64(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Runs shifted power iteration until the relative eigen-residual
/// `||H v - lambda v|| <= tol * max(1, |lambda|)` holds.
///
/// The internal spectral shift (a Gershgorin bound) makes the algebraically
/// largest eigenvalue of the Hermitian operator the dominant one, so the
/// returned pair always belongs to `lambda_1` even when a negative
/// eigenvalue has the largest magnitude. The start vector is a fixed
/// pseudo-random pattern, so results are fully deterministic.
pub fn power_iteration<T: Scalar>(
    op: &dyn HermitianOp<T>,
    tol: T,
    max_iter: usize,
) -> Result<PowerIteration<T>> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Parameter("empty operator".into()));
    }
    if !(tol > T::zero()) || max_iter == 0 {
        return Err(Error::Parameter("tol must be positive and max_iter nonzero".into()));
    }
    let shift = op.eig_bound();

    let mut state: u64 = 0x5eed_1e11;
    let mut xr: Vec<T> = (0..n).map(|_| T::c(unit_f64(&mut state) - 0.5)).collect();
    let mut xi: Vec<T> = (0..n).map(|_| T::c(unit_f64(&mut state) - 0.5)).collect();
    normalize(&mut xr, &mut xi);

    let mut yr = vec![T::zero(); n];
    let mut yi = vec![T::zero(); n];
    let mut last_residual = T::infinity();
    for it in 1..=max_iter {
        op.apply(&xr, &xi, &mut yr, &mut yi);
        // Rayleigh quotient <x, Hx>; real for Hermitian H and unit x.
        let mut lambda = T::zero();
        for i in 0..n {
            lambda += xr[i] * yr[i] + xi[i] * yi[i];
        }
        let mut res_sq = T::zero();
        for i in 0..n {
            let dr = yr[i] - lambda * xr[i];
            let di = yi[i] - lambda * xi[i];
            res_sq += dr * dr + di * di;
        }
        let residual = res_sq.sqrt();
        last_residual = residual;
        if residual <= tol * T::one().max(lambda.abs()) {
            let scale = T::c(n as f64).sqrt();
            for i in 0..n {
                xr[i] *= scale;
                xi[i] *= scale;
            }
            return Ok(PowerIteration {
                eigenvalue: lambda,
                vec_re: xr,
                vec_im: xi,
                iterations: it,
                residual,
                degenerate: it == 1,
            });
        }
        // shifted step: x <- normalize(Hx + shift * x)
        for i in 0..n {
            xr[i] = yr[i] + shift * xr[i];
            xi[i] = yi[i] + shift * xi[i];
        }
        normalize(&mut xr, &mut xi);
    }
    Err(Error::Convergence { iterations: max_iter, residual: last_residual.f64() })
}

fn normalize<T: Scalar>(xr: &mut [T], xi: &mut [T]) {
    let mut norm_sq = T::zero();
    for i in 0..xr.len() {
        norm_sq += xr[i] * xr[i] + xi[i] * xi[i];
    }
    let inv = norm_sq.sqrt().recip();
    for i in 0..xr.len() {
        xr[i] *= inv;
        xi[i] *= inv;
    }
}
