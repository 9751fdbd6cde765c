//! Multivariate Chebyshev basis matched one-to-one with the sparse grid, and
//! the collocation matrices built from it.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::error::{Result, SaskError};
use crate::linalg;
use crate::sparse_grid::{disjoint_size, for_each_tensor, smolyak_combinations, Level, SparseGrid};

/// Above this condition estimate the interpolation matrix counts as singular.
pub const SINGULAR_CONDITION: f64 = 1.0 / f64::EPSILON;

const CLAMP_TOL: f64 = 1e-12;

fn clamp_unit(x: f64) -> f64 {
    if x.abs() <= 1.0 + CLAMP_TOL {
        x.clamp(-1.0, 1.0)
    } else {
        x
    }
}

/// First-kind Chebyshev polynomial `T_k(x)` by the three-term recurrence.
pub fn cheb_eval(k: u32, x: f64) -> f64 {
    let x = clamp_unit(x);
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `T_k'(x) = k U_{k-1}(x)` with `U` the second-kind recurrence.
pub fn cheb_deriv(k: u32, x: f64) -> f64 {
    let x = clamp_unit(x);
    match k {
        0 => 0.0,
        1 => 1.0,
        _ => {
            let (mut prev, mut cur) = (1.0, 2.0 * x);
            for _ in 2..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            k as f64 * cur
        }
    }
}

/// Chebyshev degrees making up the univariate block `F_i`.
pub fn block_degrees(i: u32) -> Vec<u32> {
    match i {
        0 | 1 => vec![0],
        2 => vec![1, 2],
        _ => {
            let lo = (1u32 << (i - 2)) + 1;
            let hi = 1u32 << (i - 1);
            debug_assert_eq!((hi - lo + 1) as usize, disjoint_size(i));
            (lo..=hi).collect()
        }
    }
}

/// `Psi(x) = prod_j T_{k_j}(x_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisFunction {
    pub degrees: Vec<u32>,
}

impl BasisFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.degrees
            .iter()
            .zip(x)
            .map(|(&k, &xi)| cheb_eval(k, xi))
            .product()
    }

    /// Partial derivative with respect to coordinate `dim`.
    pub fn partial(&self, dim: usize, x: &[f64]) -> f64 {
        self.degrees
            .iter()
            .zip(x)
            .enumerate()
            .map(|(j, (&k, &xi))| {
                if j == dim {
                    cheb_deriv(k, xi)
                } else {
                    cheb_eval(k, xi)
                }
            })
            .product()
    }

    pub fn depends_on(&self, dim: usize) -> bool {
        self.degrees[dim] != 0
    }
}

#[derive(Debug, Clone)]
pub struct BasisSet {
    dim: usize,
    functions: Vec<BasisFunction>,
}

impl BasisSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    /// Evaluate the expansion `sum_j w_j Psi_j(x)`.
    pub fn eval_expansion(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        self.functions
            .iter()
            .zip(coeffs)
            .map(|(f, w)| w * f.eval(x))
            .sum()
    }
}

/// Basis with the same block structure as [`crate::sparse_grid::build_grid`].
pub fn build_basis(d: usize, kappa: Level) -> Result<BasisSet> {
    let combos = smolyak_combinations(d, kappa)?;
    let mut functions = Vec::new();
    for combo in &combos {
        let sets: Vec<Vec<u32>> = combo.indices.iter().map(|&i| block_degrees(i)).collect();
        for_each_tensor(&sets, |degs| {
            functions.push(BasisFunction {
                degrees: degs.to_vec(),
            })
        });
    }
    Ok(BasisSet { dim: d, functions })
}

/// `M[l, j] = Psi_j(xi_l)` and `G_i[l, j] = dPsi_j/dx_i (xi_l)` on the
/// reference domain, plus a factorisation of `M`.
#[derive(Debug)]
pub struct InterpolationOperators {
    m: Mat<f64>,
    g: Vec<Mat<f64>>,
    m_lu: PartialPivLu<f64>,
    m_condition: f64,
    /// For each dimension, the basis columns that vary along it.
    active_columns: Vec<Vec<usize>>,
}

impl InterpolationOperators {
    pub fn size(&self) -> usize {
        self.m.nrows()
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn m(&self) -> &Mat<f64> {
        &self.m
    }

    pub fn g(&self, dim: usize) -> &Mat<f64> {
        &self.g[dim]
    }

    pub fn m_lu(&self) -> &PartialPivLu<f64> {
        &self.m_lu
    }

    /// Infinity-norm condition estimate of `M`.
    pub fn m_condition(&self) -> f64 {
        self.m_condition
    }

    pub fn active_columns(&self, dim: usize) -> &[usize] {
        &self.active_columns[dim]
    }
}

pub fn build_operators(grid: &SparseGrid, basis: &BasisSet) -> Result<InterpolationOperators> {
    if grid.dim() != basis.dim() || grid.len() != basis.len() {
        return Err(SaskError::Precondition(format!(
            "grid ({} points, d={}) and basis ({} functions, d={}) do not match",
            grid.len(),
            grid.dim(),
            basis.len(),
            basis.dim()
        )));
    }
    let n = grid.len();
    let d = grid.dim();
    let funcs = basis.functions();
    let m = Mat::from_fn(n, n, |l, j| funcs[j].eval(grid.point(l)));
    let active_columns: Vec<Vec<usize>> = (0..d)
        .map(|i| (0..n).filter(|&j| funcs[j].depends_on(i)).collect())
        .collect();
    let g = (0..d)
        .map(|i| {
            let mut gi = Mat::<f64>::zeros(n, n);
            for &j in &active_columns[i] {
                for l in 0..n {
                    gi[(l, j)] = funcs[j].partial(i, grid.point(l));
                }
            }
            gi
        })
        .collect();
    let m_lu = m.partial_piv_lu();
    let m_condition = linalg::condition_inf_real(m.as_ref(), &m_lu);
    log::debug!("interpolation matrix N={n} d={d}: condition estimate {m_condition:e}");
    Ok(InterpolationOperators {
        m,
        g,
        m_lu,
        m_condition,
        active_columns,
    })
}

/// Coefficients `w` with `M w = values`.
pub fn interpolate(ops: &InterpolationOperators, values: &[f64]) -> Result<Vec<f64>> {
    let n = ops.size();
    if values.len() != n {
        return Err(SaskError::Precondition(format!(
            "expected {n} values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SaskError::Precondition(
            "interpolation values must be finite".into(),
        ));
    }
    if !(ops.m_condition < SINGULAR_CONDITION) {
        return Err(SaskError::Conditioning {
            condition: ops.m_condition,
        });
    }
    let rhs = Mat::from_fn(n, 1, |i, _| values[i]);
    let w = ops.m_lu.solve(&rhs);
    Ok((0..n).map(|i| w[(i, 0)]).collect())
}
