//! Small dense helpers on top of faer.

use faer::linalg::solvers::{DenseSolveCore, PartialPivLu};
use faer::{c64, Mat, MatRef};

pub(crate) fn norm_inf_real(a: MatRef<'_, f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn norm_inf_complex(a: MatRef<'_, c64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Infinity-norm condition number from an explicit inverse. Returns
/// `f64::INFINITY` when the inverse is not finite.
pub(crate) fn condition_inf_real(a: MatRef<'_, f64>, lu: &PartialPivLu<f64>) -> f64 {
    let inv = lu.inverse();
    let c = norm_inf_real(a) * norm_inf_real(inv.as_ref());
    if c.is_finite() && all_finite_real(inv.as_ref()) {
        c
    } else {
        f64::INFINITY
    }
}

/// Returns `(cond_inf, ||A^{-1}||_inf)`.
pub(crate) fn condition_inf_complex(a: MatRef<'_, c64>, lu: &PartialPivLu<c64>) -> (f64, f64) {
    let inv = lu.inverse();
    let inv_norm = norm_inf_complex(inv.as_ref());
    let c = norm_inf_complex(a) * inv_norm;
    if c.is_finite() && all_finite_complex(inv.as_ref()) {
        (c, inv_norm)
    } else {
        (f64::INFINITY, f64::INFINITY)
    }
}

pub(crate) fn to_complex(a: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

/// Real matrix times complex matrix.
pub(crate) fn real_times_complex(a: MatRef<'_, f64>, b: MatRef<'_, c64>) -> Mat<c64> {
    to_complex(a) * b
}

pub(crate) fn all_finite_real(a: MatRef<'_, f64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].is_finite()))
}

pub(crate) fn all_finite_complex(a: MatRef<'_, c64>) -> bool {
    (0..a.ncols())
        .all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}
