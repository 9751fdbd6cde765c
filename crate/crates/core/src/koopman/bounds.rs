//! Perturbation bound for linear systems.
//!
//! For `dx/dt = A x` the functions `phi_j(x) = <x, w_j>`, with `w_j` unit
//! eigenvectors of `A^T`, are Koopman eigenfunctions with eigenvalue
//! `lambda_j`. Perturbing eigenvalues by at most `eps_lambda` and the initial
//! eigenfunction values by at most `eps_phi0` changes a scalar observable
//! `g = sum_j c_j phi_j(x0) exp(lambda_j t)` by no more than
//! `d ||c||_inf exp(Re lambda_max t) (max_j |phi_j(x0)| |1 - exp(eps_lambda t)| + eps_phi0 exp(eps_lambda t))`.

use faer::{c64, Mat};

use crate::error::{Result, SaskError};

/// Perturbation directions, each of modulus at most one. They are scaled by
/// `eps_lambda` and `eps_phi0` respectively.
#[derive(Debug, Clone)]
pub struct PerturbationDirections {
    pub lambda: Vec<c64>,
    pub phi0: Vec<c64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub observed_error: f64,
    pub bound: f64,
    /// Realised `max_j |lambda_j - lambda~_j|`.
    pub eps_lambda: f64,
    /// Realised `max_j |phi_j(x0) - phi~_j(x0)|`.
    pub eps_phi0: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.observed_error <= self.bound
    }
}

/// Evaluate both sides of the linear-system perturbation bound.
///
/// `a` is row-major `d x d`; `c` holds the observable's modal coefficients.
#[allow(clippy::too_many_arguments)]
pub fn perturbation_bound_check(
    a: &[Vec<f64>],
    x0: &[f64],
    c: &[c64],
    t: f64,
    eps_lambda: f64,
    eps_phi0: f64,
    directions: &PerturbationDirections,
) -> Result<BoundCheck> {
    let d = a.len();
    if d == 0 || a.iter().any(|row| row.len() != d) || x0.len() != d || c.len() != d {
        return Err(SaskError::Precondition("inconsistent dimensions".into()));
    }
    if directions.lambda.len() != d || directions.phi0.len() != d {
        return Err(SaskError::Precondition(
            "need one perturbation direction per eigenpair".into(),
        ));
    }
    if directions
        .lambda
        .iter()
        .chain(&directions.phi0)
        .any(|z| z.norm() > 1.0 + 1e-12)
    {
        return Err(SaskError::Precondition(
            "perturbation directions must have modulus <= 1".into(),
        ));
    }
    if eps_lambda < 0.0 || eps_phi0 < 0.0 || t < 0.0 {
        return Err(SaskError::Precondition(
            "eps and t must be non-negative".into(),
        ));
    }

    let at = Mat::from_fn(d, d, |i, j| a[j][i]);
    let evd = at
        .eigen()
        .map_err(|e| SaskError::Decomposition(format!("{e:?}")))?;
    let lambdas: Vec<c64> = (0..d).map(|j| evd.S()[j]).collect();
    let scale = lambdas.iter().map(|l| l.norm()).fold(1.0, f64::max);
    for i in 0..d {
        for j in (i + 1)..d {
            if (lambdas[i] - lambdas[j]).norm() <= 1e-8 * scale {
                return Err(SaskError::Precondition(format!(
                    "repeated eigenvalue {} (indices {i}, {j})",
                    lambdas[i]
                )));
            }
        }
    }

    // phi_j(x0) = sum_i x0_i w_{j,i} with w_j of unit 2-norm.
    let phi0: Vec<c64> = (0..d)
        .map(|j| {
            let u = evd.U();
            let norm = (0..d).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            (0..d).map(|i| u[(i, j)] * x0[i]).sum::<c64>() / norm
        })
        .collect();

    let dl: Vec<c64> = directions.lambda.iter().map(|z| z * eps_lambda).collect();
    let dp: Vec<c64> = directions.phi0.iter().map(|z| z * eps_phi0).collect();

    let g = |lam_shift: &[c64], phi_shift: &[c64]| -> c64 {
        (0..d)
            .map(|j| c[j] * (phi0[j] + phi_shift[j]) * ((lambdas[j] + lam_shift[j]) * t).exp())
            .sum()
    };
    let zeros = vec![c64::new(0.0, 0.0); d];
    let exact = g(&zeros, &zeros);
    let perturbed = g(&dl, &dp);
    let observed_error = (exact - perturbed).norm();

    let eps_l = dl.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eps_p = dp.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let c_inf = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let re_max = lambdas
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let phi_max = phi0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let growth = (eps_l * t).exp();
    let bound =
        d as f64 * c_inf * (re_max * t).exp() * (phi_max * (1.0 - growth).abs() + eps_p * growth);

    Ok(BoundCheck {
        observed_error,
        bound,
        eps_lambda: eps_l,
        eps_phi0: eps_p,
    })
}
