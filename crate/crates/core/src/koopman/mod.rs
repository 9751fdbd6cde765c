//! Local Koopman decomposition on one neighbourhood of the state space.
//!
//! For a box centred at `x0` the reference sparse grid is mapped onto the box,
//! the generator is approximated by `U = sum_i diag(f_i(xi)) G_i`, and the
//! pencil `U W = M W Lambda` yields eigenvalues and eigenfunction values
//! `Phi = M W`. Koopman modes for the identity observable solve `Phi C = Xi`,
//! after which the state at any later time is a sum of exponentials.

mod bounds;

pub use bounds::{perturbation_bound_check, BoundCheck, PerturbationDirections};

use std::cmp::Ordering;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef};

use crate::cheb_basis::{InterpolationOperators, SINGULAR_CONDITION};
use crate::error::{Result, SaskError};
use crate::linalg;
use crate::sparse_grid::SparseGrid;
use crate::system::SemiDiscreteSystem;

/// Isotropic box `[x0 - r, x0 + r]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodBox {
    center: Vec<f64>,
    radius: f64,
}

impl NeighborhoodBox {
    pub fn centered(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(SaskError::Domain(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(SaskError::Domain("box centre must be finite".into()));
        }
        Ok(Self {
            center: center.to_vec(),
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.radius).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center.iter().map(|c| c + self.radius).collect()
    }
}

/// Sparse-grid operators mapped from `[-1, 1]^d` onto a neighbourhood box.
///
/// `M` is unchanged by the affine map; each `G_i` picks up the factor
/// `2 / (U_i - L_i)`, which is kept as a scale rather than materialised.
#[derive(Debug)]
pub struct LocalOperators<'a> {
    ops: &'a InterpolationOperators,
    points: Mat<f64>,
    scales: Vec<f64>,
}

impl<'a> LocalOperators<'a> {
    pub fn operators(&self) -> &'a InterpolationOperators {
        self.ops
    }

    /// The `N x d` matrix `Xi` of physical grid points.
    pub fn points(&self) -> MatRef<'_, f64> {
        self.points.as_ref()
    }

    pub fn point(&self, l: usize) -> Vec<f64> {
        (0..self.points.ncols())
            .map(|i| self.points[(l, i)])
            .collect()
    }

    pub fn scale(&self, dim: usize) -> f64 {
        self.scales[dim]
    }

    /// Materialised `2 G_i / (U_i - L_i)`.
    pub fn scaled_g(&self, dim: usize) -> Mat<f64> {
        let s = self.scales[dim];
        let g = self.ops.g(dim);
        Mat::from_fn(g.nrows(), g.ncols(), |l, j| s * g[(l, j)])
    }
}

/// Map the reference grid and derivative matrices onto `bx`.
pub fn rescale_to_box<'a>(
    grid: &SparseGrid,
    ops: &'a InterpolationOperators,
    bx: &NeighborhoodBox,
) -> Result<LocalOperators<'a>> {
    let d = grid.dim();
    if bx.dim() != d || ops.dim() != d {
        return Err(SaskError::Precondition(format!(
            "box dimension {} does not match grid dimension {d}",
            bx.dim()
        )));
    }
    let r = bx.radius();
    // x0 + r * xi equals (U - L)/2 (xi + 1) + L, written so the centre row is
    // exactly x0.
    let points = Mat::from_fn(grid.len(), d, |l, i| bx.center()[i] + r * grid.point(l)[i]);
    let scales = vec![1.0 / r; d];
    Ok(LocalOperators {
        ops,
        points,
        scales,
    })
}

/// `U = sum_i diag(f_i(xi_1), ..., f_i(xi_N)) G_i` with `f` evaluated once per
/// grid point.
pub fn assemble_generator(
    system: &SemiDiscreteSystem,
    local: &LocalOperators<'_>,
) -> Result<Mat<f64>> {
    let ops = local.operators();
    let n = ops.size();
    let d = ops.dim();
    if system.dim() != d {
        return Err(SaskError::Precondition(format!(
            "system dimension {} does not match grid dimension {d}",
            system.dim()
        )));
    }
    let mut u = Mat::<f64>::zeros(n, n);
    let mut x = vec![0.0; d];
    let mut fx = vec![0.0; d];
    for l in 0..n {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = local.points[(l, i)];
        }
        system.eval_into(&x, &mut fx);
        if let Some(component) = fx.iter().position(|v| !v.is_finite()) {
            return Err(SaskError::Evaluation {
                point_index: l,
                component,
            });
        }
        for (i, &fi) in fx.iter().enumerate() {
            if fi == 0.0 {
                continue;
            }
            let coef = fi * local.scales[i];
            let g = ops.g(i);
            for &j in ops.active_columns(i) {
                u[(l, j)] += coef * g[(l, j)];
            }
        }
    }
    Ok(u)
}

/// How the pencil `(U, M)` is reduced to eigenpairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Solve `M X = U` by LU, then a standard eigendecomposition of `X`.
    #[default]
    Reduction,
    /// QZ on the pencil directly.
    Qz,
}

/// Generalised eigenpairs of `(U, M)`.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    eigenvalues: Vec<c64>,
    w: Mat<c64>,
    phi: Mat<c64>,
    residual: f64,
}

impl Eigenpairs {
    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    /// Coefficient vectors `w_j` (columns), unit 2-norm.
    pub fn w(&self) -> MatRef<'_, c64> {
        self.w.as_ref()
    }

    /// `Phi = M W`: column `j` is the eigenfunction `j` at the grid points.
    pub fn phi(&self) -> MatRef<'_, c64> {
        self.phi.as_ref()
    }

    /// `max_j ||U w_j - lambda_j M w_j||_inf`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Same eigenpairs with column `j` of `W` (and `Phi`) multiplied by
    /// `factors[j]`.
    pub fn with_scaled_columns(&self, factors: &[c64]) -> Eigenpairs {
        assert_eq!(factors.len(), self.eigenvalues.len());
        let scale =
            |m: &Mat<c64>| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * factors[j]);
        Eigenpairs {
            eigenvalues: self.eigenvalues.clone(),
            w: scale(&self.w),
            phi: scale(&self.phi),
            residual: self.residual,
        }
    }
}

fn eigen_order(a: &c64, b: &c64) -> Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// Solve `U W = M W Lambda`.
///
/// Eigenvector columns are normalised to unit 2-norm and eigenpairs are
/// sorted by real part, then imaginary part, both descending.
pub fn eigendecompose(
    u: MatRef<'_, f64>,
    ops: &InterpolationOperators,
    method: EigenMethod,
) -> Result<Eigenpairs> {
    let n = ops.size();
    if u.nrows() != n || u.ncols() != n {
        return Err(SaskError::Precondition(format!(
            "generator is {}x{}, expected {n}x{n}",
            u.nrows(),
            u.ncols()
        )));
    }
    if !(ops.m_condition() < SINGULAR_CONDITION) {
        return Err(SaskError::Conditioning {
            condition: ops.m_condition(),
        });
    }

    let (values, vectors) = match method {
        EigenMethod::Reduction => {
            // Complex Schur form is strictly triangular, which keeps repeated
            // real eigenvalues away from the 2x2 block path of the real solver.
            let x = linalg::to_complex(ops.m_lu().solve(u).as_ref());
            let evd = x
                .eigen()
                .map_err(|e| SaskError::Decomposition(format!("{e:?}")))?;
            let values: Vec<c64> = (0..n).map(|j| evd.S()[j]).collect();
            (values, evd.U().to_owned())
        }
        EigenMethod::Qz => {
            let gevd = linalg::to_complex(u)
                .generalized_eigen(linalg::to_complex(ops.m().as_ref()))
                .map_err(|e| SaskError::Decomposition(format!("{e:?}")))?;
            let mut values = Vec::with_capacity(n);
            for j in 0..n {
                let alpha = gevd.S_a()[j];
                let beta = gevd.S_b()[j];
                if beta.norm() <= f64::EPSILON * alpha.norm() || beta.norm() == 0.0 {
                    return Err(SaskError::Decomposition(format!(
                        "infinite generalized eigenvalue at index {j}"
                    )));
                }
                values.push(alpha / beta);
            }
            (values, gevd.U().to_owned())
        }
    };
    if values
        .iter()
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
        || !linalg::all_finite_complex(vectors.as_ref())
    {
        return Err(SaskError::Decomposition("non-finite eigenpair".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen_order(&values[a], &values[b]));
    let eigenvalues: Vec<c64> = order.iter().map(|&j| values[j]).collect();
    let mut w = Mat::<c64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let norm = (0..n)
            .map(|i| vectors[(i, src)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0) {
            return Err(SaskError::Decomposition(format!(
                "zero eigenvector at index {src}"
            )));
        }
        for i in 0..n {
            w[(i, dst)] = vectors[(i, src)] / norm;
        }
    }
    let phi = linalg::real_times_complex(ops.m().as_ref(), w.as_ref());
    let uw = linalg::real_times_complex(u, w.as_ref());
    let mut residual = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            residual = residual.max((uw[(i, j)] - eigenvalues[j] * phi[(i, j)]).norm());
        }
    }
    Ok(Eigenpairs {
        eigenvalues,
        w,
        phi,
        residual,
    })
}

/// Koopman modes `C` solving `Phi C = Xi`.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    modes: Mat<c64>,
    condition: f64,
    phi_inv_norm: f64,
    rank_deficient: bool,
}

/// Largest accepted `||Phi C - Xi||_inf / ||Xi||_inf` when `Phi` is singular.
const MODE_MISFIT_TOL: f64 = 1e-10;

impl ModeSolution {
    /// `N x d`: column `i` holds the modes for state component `i`.
    pub fn modes(&self) -> MatRef<'_, c64> {
        self.modes.as_ref()
    }

    /// Infinity-norm condition estimate of `Phi`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn phi_inv_norm(&self) -> f64 {
        self.phi_inv_norm
    }

    /// Whether `Phi` was singular to working precision and the modes come
    /// from a least-squares solve.
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }
}

pub fn solve_modes(phi: MatRef<'_, c64>, points: MatRef<'_, f64>) -> Result<ModeSolution> {
    let n = phi.nrows();
    if phi.ncols() != n || points.nrows() != n {
        return Err(SaskError::Precondition(format!(
            "Phi is {}x{}, points {}x{}",
            phi.nrows(),
            phi.ncols(),
            points.nrows(),
            points.ncols()
        )));
    }
    if !linalg::all_finite_complex(phi) || !linalg::all_finite_real(points) {
        return Err(SaskError::ModeSolve {
            condition: f64::INFINITY,
        });
    }
    let lu = phi.partial_piv_lu();
    let (condition, phi_inv_norm) = linalg::condition_inf_complex(phi, &lu);
    let rhs = linalg::to_complex(points);
    let rank_deficient = !(condition < SINGULAR_CONDITION);
    // Clustered, nearly defective eigenvalues can make Phi numerically
    // singular while Xi still lies in the span of the well-resolved columns;
    // the LU solution then reconstructs the state accurately and is kept.
    let mut modes = lu.solve(&rhs);
    if !linalg::all_finite_complex(modes.as_ref()) {
        // Exact zero pivots: fall back to minimum-norm least squares and
        // reject only an inconsistent system.
        let svd = phi
            .svd()
            .map_err(|e| SaskError::Decomposition(format!("{e:?}")))?;
        modes = svd.pseudoinverse() * &rhs;
        let misfit = linalg::norm_inf_complex((phi * &modes - &rhs).as_ref());
        let scale = linalg::norm_inf_complex(rhs.as_ref()).max(f64::MIN_POSITIVE);
        log::debug!(
            "singular Phi (cond {condition:e}), relative mode misfit {:e}",
            misfit / scale
        );
        if !(misfit <= MODE_MISFIT_TOL * scale) {
            return Err(SaskError::ModeSolve { condition });
        }
    }
    if !linalg::all_finite_complex(modes.as_ref()) {
        return Err(SaskError::ModeSolve { condition });
    }
    Ok(ModeSolution {
        modes,
        condition,
        phi_inv_norm,
        rank_deficient,
    })
}

/// Conditioning figures recorded for one decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub m_condition: f64,
    pub phi_condition: f64,
    pub eigen_residual: f64,
    /// `||Phi^{-1}||_inf * N * eps`, with `eps` the eigenpair residual. Values
    /// at or above one mean the perturbation bound for the modes no longer
    /// applies.
    pub perturbation_monitor: f64,
    /// Modes came from a least-squares solve because `Phi` was singular.
    pub rank_deficient_modes: bool,
}

impl Diagnostics {
    pub fn conditioning_warning(&self, cond_warn: f64) -> bool {
        self.m_condition > cond_warn
            || self.perturbation_monitor >= 1.0
            || self.rank_deficient_modes
    }
}

/// One state evaluated from a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub state: Vec<f64>,
    /// Largest imaginary part discarded when taking the real part.
    pub imag_residual: f64,
}

/// Eigenvalues, eigenfunction values and modes for one neighbourhood,
/// anchored at `(anchor_time, anchor_state)`.
#[derive(Debug, Clone)]
pub struct KoopmanDecomposition {
    eigenvalues: Vec<c64>,
    phi: Mat<c64>,
    modes: Mat<c64>,
    /// `amplitudes[j][i] = C(j, i) * Phi(0, j)`.
    amplitudes: Vec<Vec<c64>>,
    anchor_time: f64,
    anchor_state: Vec<f64>,
    diagnostics: Diagnostics,
}

impl KoopmanDecomposition {
    pub fn new(
        eig: Eigenpairs,
        modes: ModeSolution,
        m_condition: f64,
        anchor_time: f64,
        anchor_state: Vec<f64>,
    ) -> Self {
        let n = eig.eigenvalues.len();
        let d = modes.modes.ncols();
        let amplitudes = (0..n)
            .map(|j| {
                (0..d)
                    .map(|i| modes.modes[(j, i)] * eig.phi[(0, j)])
                    .collect()
            })
            .collect();
        let diagnostics = Diagnostics {
            m_condition,
            phi_condition: modes.condition,
            eigen_residual: eig.residual,
            perturbation_monitor: modes.phi_inv_norm * n as f64 * eig.residual,
            rank_deficient_modes: modes.rank_deficient,
        };
        Self {
            eigenvalues: eig.eigenvalues,
            phi: eig.phi,
            modes: modes.modes,
            amplitudes,
            anchor_time,
            anchor_state,
            diagnostics,
        }
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    pub fn phi(&self) -> MatRef<'_, c64> {
        self.phi.as_ref()
    }

    pub fn modes(&self) -> MatRef<'_, c64> {
        self.modes.as_ref()
    }

    pub fn anchor_time(&self) -> f64 {
        self.anchor_time
    }

    /// The state the neighbourhood was centred on.
    pub fn anchor_state(&self) -> &[f64] {
        &self.anchor_state
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn dim(&self) -> usize {
        self.modes.ncols()
    }

    /// `x(t) = sum_j C(j, :) Phi(0, j) exp(lambda_j (t - t0))`, real part.
    ///
    /// Evaluated as `x(t0) + sum_j C(j, :) Phi(0, j) (exp(lambda_j (t - t0)) - 1)`,
    /// which uses the first row of `Phi C = Xi`. The anchor is reproduced
    /// exactly and restarts are continuous to the bit.
    pub fn evaluate(&self, t: f64) -> Result<Evaluation> {
        let dt = t - self.anchor_time;
        if dt < 0.0 {
            return Err(SaskError::Precondition(format!(
                "evaluation time {t} precedes anchor time {}",
                self.anchor_time
            )));
        }
        let d = self.dim();
        let mut acc = vec![c64::new(0.0, 0.0); d];
        for (lambda, amp) in self.eigenvalues.iter().zip(&self.amplitudes) {
            let e = expm1_complex(lambda * dt);
            if e == c64::new(0.0, 0.0) {
                continue;
            }
            for (a, c) in acc.iter_mut().zip(amp) {
                *a += c * e;
            }
        }
        let imag_residual = acc.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        Ok(Evaluation {
            state: acc
                .iter()
                .zip(&self.anchor_state)
                .map(|(z, x0)| x0 + z.re)
                .collect(),
            imag_residual,
        })
    }
}

/// `exp(z) - 1` without cancellation for small `|z|`.
fn expm1_complex(z: c64) -> c64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * c - 2.0 * half * half;
    c64::new(re, z.re.exp() * s)
}

/// Options for [`decompose`].
#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub method: EigenMethod,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::Reduction,
        }
    }
}

/// Rescale, assemble, eigendecompose and solve for modes on `bx`.
pub fn decompose(
    system: &SemiDiscreteSystem,
    grid: &SparseGrid,
    ops: &InterpolationOperators,
    bx: &NeighborhoodBox,
    anchor_time: f64,
    options: DecomposeOptions,
) -> Result<KoopmanDecomposition> {
    let local = rescale_to_box(grid, ops, bx)?;
    let u = assemble_generator(system, &local)?;
    let eig = eigendecompose(u.as_ref(), ops, options.method)?;
    let modes = solve_modes(eig.phi(), local.points())?;
    Ok(KoopmanDecomposition::new(
        eig,
        modes,
        ops.m_condition(),
        anchor_time,
        bx.center().to_vec(),
    ))
}

#[cfg(test)]
mod tests;
