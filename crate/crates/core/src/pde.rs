//! Periodic Fourier collocation and the four benchmark problems.
//!
//! Differentiation matrices live on the grid `x_j = j h`, `h = 2 pi / m`.
//! Problems posed on another periodic interval rescale them: a derivative of
//! order `k` picks up `s^k` where `s` maps the physical length onto `2 pi`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SaskError};
use crate::rk4::{rk4_solve, Rk4Config};
use crate::system::SemiDiscreteSystem;

/// Dense row-major `m x m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMatrix {
    m: usize,
    data: Vec<f64>,
}

impl DiffMatrix {
    fn circulant(column: &[f64]) -> Self {
        let m = column.len();
        let mut data = vec![0.0; m * m];
        for j in 0..m {
            for l in 0..m {
                data[j * m + l] = column[(j + m - l) % m];
            }
        }
        Self { m, data }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.m + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.m..(row + 1) * self.m]
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.m)) {
            *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.apply_into(u, &mut out);
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            m: self.m,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

/// First, second and third derivative matrices on an `m`-point periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOps {
    pub m: usize,
    pub h: f64,
    pub d1: DiffMatrix,
    pub d2: DiffMatrix,
    pub d3: DiffMatrix,
}

impl FourierOps {
    /// Operators for a periodic interval of length `length`.
    pub fn for_length(&self, length: f64) -> Self {
        let s = 2.0 * PI / length;
        Self {
            m: self.m,
            h: self.h / s,
            d1: self.d1.scaled(s),
            d2: self.d2.scaled(s * s),
            d3: self.d3.scaled(s * s * s),
        }
    }
}

/// Entry `(j, l)` of `D_k` is `(1/m) sum_w (i w)^k exp(i w (j - l) h)` over
/// `w = -m/2+1 ..= m/2`, with the Nyquist term dropped for odd `k`. The
/// matrices are circulant, so only the first column is summed.
pub fn fourier_diff_matrices(m: usize) -> Result<FourierOps> {
    if !m.is_multiple_of(2) || m < 4 {
        return Err(SaskError::Config(format!(
            "grid size must be even and at least 4, got {m}"
        )));
    }
    let half = m / 2;
    let angle = |w: usize, q: usize| 2.0 * PI * ((w * q) % m) as f64 / m as f64;
    let column = |order: u32| -> Vec<f64> {
        (0..m)
            .map(|q| {
                // w and -w together contribute 2 Re[(i w)^k e^{i w q h}].
                let mut acc = 0.0;
                for w in 1..half {
                    let (s, c) = angle(w, q).sin_cos();
                    let wk = (w as f64).powi(order as i32);
                    acc += 2.0
                        * wk
                        * match order % 4 {
                            1 => -s,
                            2 => -c,
                            3 => s,
                            _ => c,
                        };
                }
                if order.is_multiple_of(2) {
                    let (_, c) = angle(half, q).sin_cos();
                    let sign = if order.is_multiple_of(4) { 1.0 } else { -1.0 };
                    acc += sign * (half as f64).powi(order as i32) * c;
                }
                acc / m as f64
            })
            .collect()
    };
    Ok(FourierOps {
        m,
        h: 2.0 * PI / m as f64,
        d1: DiffMatrix::circulant(&column(1)),
        d2: DiffMatrix::circulant(&column(2)),
        d3: DiffMatrix::circulant(&column(3)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Advection,
    Heat,
    Kdv,
    Burgers,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Advection => "advection",
            ProblemKind::Heat => "heat",
            ProblemKind::Kdv => "kdv",
            ProblemKind::Burgers => "burgers",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = SaskError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "advection" => Ok(ProblemKind::Advection),
            "heat" => Ok(ProblemKind::Heat),
            "kdv" => Ok(ProblemKind::Kdv),
            "burgers" => Ok(ProblemKind::Burgers),
            other => Err(SaskError::Config(format!("unknown problem {other:?}"))),
        }
    }
}

/// Physical parameters. Fields not used by a problem are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PdeParams {
    /// Advection speed, or soliton speed for KdV.
    pub c: f64,
    pub nu: f64,
    pub beta: f64,
    pub mu: f64,
    /// Half-length of the KdV domain `[-p, p]`.
    pub p: f64,
}

/// A reference trajectory sampled at one time on a problem grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredReference {
    pub problem: ProblemKind,
    pub m: usize,
    pub final_time: f64,
    pub dt_ref: f64,
    pub params: PdeParams,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

const REFERENCE_VERSION: u32 = 1;

impl StoredReference {
    /// CSV with `#` header lines, then `x,u` rows.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# sask reference version={REFERENCE_VERSION}\n# problem={} m={} T={:e} dt_ref={:e} c={:e} nu={:e} beta={:e} mu={:e} p={:e}\nx,u\n",
            self.problem,
            self.m,
            self.final_time,
            self.dt_ref,
            self.params.c,
            self.params.nu,
            self.params.beta,
            self.params.mu,
            self.params.p
        );
        for (x, u) in self.x.iter().zip(&self.u) {
            s.push_str(&format!("{x:e},{u:e}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: &str| SaskError::Reference(msg.to_string());
        let mut fields = std::collections::HashMap::new();
        let mut x = Vec::new();
        let mut u = Vec::new();
        let mut seen_columns = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        fields.insert(k.to_string(), v.to_string());
                    }
                }
            } else if !seen_columns {
                if line != "x,u" {
                    return Err(bad("expected column header x,u"));
                }
                seen_columns = true;
            } else {
                let (a, b) = line.split_once(',').ok_or_else(|| bad("malformed row"))?;
                x.push(a.trim().parse::<f64>().map_err(|_| bad("malformed x"))?);
                u.push(b.trim().parse::<f64>().map_err(|_| bad("malformed u"))?);
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .ok_or_else(|| bad(&format!("missing header field {k}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| bad(&format!("bad header field {k}")))
        };
        let version: u32 = get("version")?.parse().map_err(|_| bad("bad version"))?;
        if version != REFERENCE_VERSION {
            return Err(bad(&format!("unsupported reference version {version}")));
        }
        let m: usize = get("m")?.parse().map_err(|_| bad("bad m"))?;
        if x.len() != m {
            return Err(bad(&format!(
                "header says m={m} but {} rows follow",
                x.len()
            )));
        }
        Ok(Self {
            problem: get("problem")?.parse()?,
            m,
            final_time: num("T")?,
            dt_ref: num("dt_ref")?,
            params: PdeParams {
                c: num("c")?,
                nu: num("nu")?,
                beta: num("beta")?,
                mu: num("mu")?,
                p: num("p")?,
            },
            x,
            u,
        })
    }
}

impl PdeProblem {
    /// Integrate with RK4 at step `dt_ref` and package the state at `final_time`.
    pub fn generate_reference(&self, final_time: f64, dt_ref: f64) -> Result<StoredReference> {
        let u = rk4_solve(
            &self.system,
            &self.initial,
            &Rk4Config {
                dt: dt_ref,
                final_time,
            },
        )?;
        Ok(StoredReference {
            problem: self.kind,
            m: self.m,
            final_time,
            dt_ref,
            params: self.params,
            x: self.grid.clone(),
            u,
        })
    }
}

/// Bundled Burgers reference: m = 256, nu = 0.005, T = 1. Any grid size
/// dividing 256 uses it by sampling every `256 / m`-th point.
pub const BURGERS_REFERENCE_CSV: &str = include_str!("../data/burgers_m256_nu0.005_T1.csv");

type ClosedForm = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Reference {
    /// `u(x, t)`.
    ClosedForm(ClosedForm),
    Stored(Arc<StoredReference>),
    None,
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::ClosedForm(_) => f.write_str("ClosedForm"),
            Reference::Stored(r) => write!(f, "Stored(T={})", r.final_time),
            Reference::None => f.write_str("None"),
        }
    }
}

/// Semi-discrete system, grid, initial state and reference for one problem.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub kind: ProblemKind,
    pub m: usize,
    pub params: PdeParams,
    /// Physical grid points.
    pub grid: Vec<f64>,
    pub initial: Vec<f64>,
    pub system: SemiDiscreteSystem,
    pub reference: Reference,
}

impl PdeProblem {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Reference solution on the grid at time `t`.
    pub fn reference_at(&self, t: f64) -> Result<Vec<f64>> {
        match &self.reference {
            Reference::ClosedForm(u) => Ok(self.grid.iter().map(|&x| u(x, t)).collect()),
            Reference::Stored(r) => {
                if (r.final_time - t).abs() > 1e-12 * t.abs().max(1.0) {
                    return Err(SaskError::Reference(format!(
                        "stored reference is at T = {}, requested t = {t}",
                        r.final_time
                    )));
                }
                Ok(r.u.clone())
            }
            Reference::None => Err(SaskError::Reference(format!(
                "no reference available for {} with m = {}, nu = {}",
                self.kind, self.m, self.params.nu
            ))),
        }
    }

    /// Attach a stored reference computed on this grid or on a finer one
    /// whose size is a multiple of `m` and which contains this grid.
    pub fn with_reference(mut self, reference: StoredReference) -> Result<Self> {
        if reference.problem != self.kind || reference.params != self.params {
            return Err(SaskError::Reference(
                "reference does not match the problem".into(),
            ));
        }
        if !reference.m.is_multiple_of(self.m) {
            return Err(SaskError::Reference(format!(
                "reference grid m = {} is not a refinement of m = {}",
                reference.m, self.m
            )));
        }
        let stride = reference.m / self.m;
        let x: Vec<f64> = reference.x.iter().step_by(stride).copied().collect();
        let u: Vec<f64> = reference.u.iter().step_by(stride).copied().collect();
        let scale = self.grid.iter().fold(1.0, |a: f64, v| a.max(v.abs()));
        if x.iter()
            .zip(&self.grid)
            .any(|(a, b)| (a - b).abs() > 1e-12 * scale)
        {
            return Err(SaskError::Reference(
                "reference grid does not contain the problem grid".into(),
            ));
        }
        self.reference = Reference::Stored(Arc::new(StoredReference {
            m: self.m,
            x,
            u,
            ..reference
        }));
        Ok(self)
    }
}

fn unit_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| j as f64 / m as f64).collect()
}

/// `u_t + u_x = 0` on `[0, 1]`, `u(x, 0) = 0.2 + sin(cos(4 pi x))`.
pub fn make_advection(m: usize) -> Result<PdeProblem> {
    let ops = fourier_diff_matrices(m)?.for_length(1.0);
    let c = 1.0;
    let ic = |x: f64| 0.2 + (4.0 * PI * x).cos().sin();
    let grid = unit_grid(m);
    let d1 = ops.d1;
    let system = SemiDiscreteSystem::new("advection", m, move |u, out| {
        d1.apply_into(u, out);
        for v in out.iter_mut() {
            *v *= -c;
        }
    });
    Ok(PdeProblem {
        kind: ProblemKind::Advection,
        m,
        params: PdeParams {
            c,
            ..Default::default()
        },
        initial: grid.iter().map(|&x| ic(x)).collect(),
        grid,
        system,
        reference: Reference::ClosedForm(Arc::new(move |x, t| ic(x - c * t))),
    })
}

/// `1 / (80 pi^2)`: the `sin(4 pi x)` mode decays like `exp(-t / 5)`.
pub const HEAT_DIFFUSIVITY: f64 = 1.0 / (80.0 * PI * PI);

/// `u_t = u_xx / (80 pi^2)` on `[0, 1]`, `u(x, 0) = sin(4 pi x)`.
pub fn make_heat(m: usize) -> Result<PdeProblem> {
    let ops = fourier_diff_matrices(m)?.for_length(1.0);
    let kappa = HEAT_DIFFUSIVITY;
    let grid = unit_grid(m);
    let d2 = ops.d2.scaled(kappa);
    let system = SemiDiscreteSystem::new("heat", m, move |u, out| d2.apply_into(u, out));
    let exact = |x: f64, t: f64| (4.0 * PI * x).sin() * (-0.2 * t).exp();
    Ok(PdeProblem {
        kind: ProblemKind::Heat,
        m,
        params: PdeParams {
            nu: kappa,
            ..Default::default()
        },
        initial: grid.iter().map(|&x| exact(x, 0.0)).collect(),
        grid,
        system,
        reference: Reference::ClosedForm(Arc::new(exact)),
    })
}

/// `beta~ = beta pi / p`, `mu~ = mu pi^3 / p^3` after mapping `[-p, p]` to `[0, 2 pi]`.
pub fn kdv_scaled_coefficients(beta: f64, mu: f64, p: f64) -> (f64, f64) {
    (beta * PI / p, mu * PI.powi(3) / p.powi(3))
}

/// `u_t + beta u u_x + mu u_xxx = 0` on `[-p, p]` with a travelling soliton.
///
/// The soliton is summed over periodic images so that it is an exact
/// solution of the periodic problem up to the far-field tails.
pub fn make_kdv(m: usize, c: f64, beta: f64, mu: f64, p: f64) -> Result<PdeProblem> {
    if !(c > 0.0 && beta != 0.0 && mu > 0.0 && p > 0.0) {
        return Err(SaskError::Config(
            "kdv needs c > 0, beta != 0, mu > 0, p > 0".into(),
        ));
    }
    let ops = fourier_diff_matrices(m)?;
    let (bt, mt) = kdv_scaled_coefficients(beta, mu, p);
    let grid: Vec<f64> = (0..m).map(|j| -p + 2.0 * p * j as f64 / m as f64).collect();
    let (d1, d3) = (ops.d1, ops.d3);
    let system = SemiDiscreteSystem::new("kdv", m, move |u, out| {
        let ux = d1.apply(u);
        let uxxx = d3.apply(u);
        for j in 0..u.len() {
            out[j] = -bt * u[j] * ux[j] - mt * uxxx[j];
        }
    });
    let amp = 3.0 * c / beta;
    let k = 0.5 * (c / mu).sqrt();
    let period = 2.0 * p;
    let soliton = move |x: f64, t: f64| {
        let centred = (x - c * t + p).rem_euclid(period) - p;
        (-3..=3)
            .map(|image| {
                let s = k * (centred + image as f64 * period);
                amp / s.cosh().powi(2)
            })
            .sum()
    };
    Ok(PdeProblem {
        kind: ProblemKind::Kdv,
        m,
        params: PdeParams {
            c,
            beta,
            mu,
            p,
            nu: 0.0,
        },
        initial: grid.iter().map(|&x| soliton(x, 0.0)).collect(),
        grid,
        system,
        reference: Reference::ClosedForm(Arc::new(soliton)),
    })
}

/// `u_t + (u^2 / 2)_x = nu u_xx` on `[0, 1]`, `u(x, 0) = 0.2 + sin(2 pi x)`.
///
/// The bundled reference is attached when `nu` matches and `m` divides its grid.
pub fn make_burgers(m: usize, nu: f64) -> Result<PdeProblem> {
    if !(nu >= 0.0) {
        return Err(SaskError::Config(format!(
            "viscosity must be non-negative, got {nu}"
        )));
    }
    let ops = fourier_diff_matrices(m)?.for_length(1.0);
    let grid = unit_grid(m);
    let (d1, d2) = (ops.d1, ops.d2);
    let system = SemiDiscreteSystem::new("burgers", m, move |u, out| {
        let sq: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
        let mut diff = vec![0.0; u.len()];
        d1.apply_into(&sq, out);
        d2.apply_into(u, &mut diff);
        for (o, dd) in out.iter_mut().zip(&diff) {
            *o = -*o + nu * dd;
        }
    });
    let params = PdeParams {
        nu,
        ..Default::default()
    };
    let problem = PdeProblem {
        kind: ProblemKind::Burgers,
        m,
        params,
        initial: grid.iter().map(|&x| 0.2 + (2.0 * PI * x).sin()).collect(),
        grid,
        system,
        reference: Reference::None,
    };
    let bundled = StoredReference::from_csv(BURGERS_REFERENCE_CSV)?;
    if bundled.m % m == 0 && bundled.params == params {
        problem.with_reference(bundled)
    } else {
        Ok(problem)
    }
}

/// Build a problem by kind with its default physical parameters.
pub fn make_problem(kind: ProblemKind, m: usize, nu: Option<f64>) -> Result<PdeProblem> {
    match kind {
        ProblemKind::Advection => make_advection(m),
        ProblemKind::Heat => make_heat(m),
        ProblemKind::Kdv => make_kdv(m, 0.5, 3.0, 9.0, 45.0),
        ProblemKind::Burgers => make_burgers(m, nu.unwrap_or(0.005)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub rel_l2: f64,
    pub l_inf: f64,
}

/// Relative 2-norm error and max-norm error of `y` against `y_star`.
pub fn error_metrics(y: &[f64], y_star: &[f64]) -> Result<ErrorMetrics> {
    if y.len() != y_star.len() {
        return Err(SaskError::Precondition(format!(
            "length mismatch: {} vs {}",
            y.len(),
            y_star.len()
        )));
    }
    let norm = y_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(SaskError::Precondition("reference has zero norm".into()));
    }
    let diff = y
        .iter()
        .zip(y_star)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let l_inf = y
        .iter()
        .zip(y_star)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ErrorMetrics {
        rel_l2: diff / norm,
        l_inf,
    })
}
