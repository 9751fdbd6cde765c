//! Adaptive driver: check points, validity test and neighbourhood restarts.
//!
//! The solution is carried by one local decomposition at a time. At each
//! check point the state is reconstructed; if any component has left the
//! acceptable range `[L_i + gamma r, U_i - gamma r]` the neighbourhood is
//! re-centred on that state and the decomposition rebuilt, anchored at the
//! check point.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::cheb_basis::{build_basis, build_operators, InterpolationOperators};
use crate::error::{Result, SaskError};
use crate::koopman::{
    decompose, DecomposeOptions, EigenMethod, KoopmanDecomposition, NeighborhoodBox,
};
use crate::sparse_grid::{build_grid, Level, SparseGrid};
use crate::system::SemiDiscreteSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of check points `n`.
    pub checkpoints: usize,
    pub final_time: f64,
    pub radius: f64,
    pub kappa: Level,
    pub gamma: f64,
    pub imag_tol: f64,
    pub cond_warn: f64,
    pub method: EigenMethod,
}

impl SolverConfig {
    pub fn new(checkpoints: usize, final_time: f64, radius: f64, kappa: Level, gamma: f64) -> Self {
        Self {
            checkpoints,
            final_time,
            radius,
            kappa,
            gamma,
            imag_tol: 1e-6,
            cond_warn: 1e12,
            method: EigenMethod::Reduction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.checkpoints == 0 {
            return Err(SaskError::Config("need at least one check point".into()));
        }
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(SaskError::Config(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(SaskError::Config(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        check_gamma(self.gamma)
    }

    /// `tau_k = k T / (n + 1)` for `k = 1..=n`.
    pub fn checkpoint_times(&self) -> Vec<f64> {
        let n = self.checkpoints;
        (1..=n)
            .map(|k| k as f64 * self.final_time / (n + 1) as f64)
            .collect()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(SaskError::Config(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )))
    }
}

/// Per-dimension closed intervals `R_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptableRange {
    intervals: Vec<(f64, f64)>,
}

impl AcceptableRange {
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Boundary values count as inside.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.intervals)
            .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }
}

/// `R_i = [L_i + gamma r, U_i - gamma r]`.
pub fn acceptable_range(bx: &NeighborhoodBox, gamma: f64) -> Result<AcceptableRange> {
    check_gamma(gamma)?;
    let shrink = gamma * bx.radius();
    let intervals = bx
        .lower()
        .into_iter()
        .zip(bx.upper())
        .map(|(lo, hi)| {
            if gamma == 1.0 {
                // Collapses to the centre.
                let c = 0.5 * (lo + hi);
                (c, c)
            } else {
                (lo + shrink, hi - shrink)
            }
        })
        .collect();
    Ok(AcceptableRange { intervals })
}

/// Record of one adaptive pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub checkpoint_states: Vec<(f64, Vec<f64>)>,
    pub update_count: usize,
    /// `(anchor_time, anchor_state)` of every decomposition used, in order.
    pub anchors: Vec<(f64, Vec<f64>)>,
    /// Condition estimate of `Phi` for every decomposition.
    pub condition_log: Vec<f64>,
    pub imag_residual_max: f64,
    pub warnings: Vec<String>,
}

/// Reference-domain grid and operators for one `(d, kappa)`.
#[derive(Debug)]
pub struct ReferenceOperators {
    pub grid: SparseGrid,
    pub ops: InterpolationOperators,
}

impl ReferenceOperators {
    pub fn build(d: usize, kappa: Level) -> Result<Self> {
        let grid = build_grid(d, kappa)?;
        let basis = build_basis(d, kappa)?;
        let ops = build_operators(&grid, &basis)?;
        Ok(Self { grid, ops })
    }

    /// Shared, lazily built instance.
    pub fn cached(d: usize, kappa: Level) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(usize, Level), Arc<ReferenceOperators>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().unwrap().get(&(d, kappa)) {
            return Ok(Arc::clone(hit));
        }
        let built = Arc::new(Self::build(d, kappa)?);
        let mut guard = cache.lock().unwrap();
        Ok(Arc::clone(guard.entry((d, kappa)).or_insert(built)))
    }
}

struct Driver<'a> {
    system: &'a SemiDiscreteSystem,
    cfg: &'a SolverConfig,
    reference: Arc<ReferenceOperators>,
    trace: SolveTrace,
}

impl<'a> Driver<'a> {
    fn new(system: &'a SemiDiscreteSystem, x0: &[f64], cfg: &'a SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if x0.len() != system.dim() {
            return Err(SaskError::Precondition(format!(
                "initial state has {} components, system has {}",
                x0.len(),
                system.dim()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(SaskError::Precondition(
                "initial state must be finite".into(),
            ));
        }
        let reference = ReferenceOperators::cached(system.dim(), cfg.kappa)?;
        Ok(Self {
            system,
            cfg,
            reference,
            trace: SolveTrace::default(),
        })
    }

    fn decompose_at(
        &mut self,
        time: f64,
        center: &[f64],
    ) -> Result<(KoopmanDecomposition, AcceptableRange)> {
        let wrap = |e: SaskError| {
            if time == 0.0 {
                e
            } else {
                SaskError::AtCheckpoint {
                    time,
                    source: Box::new(e),
                }
            }
        };
        let bx = NeighborhoodBox::centered(center, self.cfg.radius).map_err(wrap)?;
        let dec = decompose(
            self.system,
            &self.reference.grid,
            &self.reference.ops,
            &bx,
            time,
            DecomposeOptions {
                method: self.cfg.method,
            },
        )
        .map_err(wrap)?;
        let diag = dec.diagnostics();
        self.trace.condition_log.push(diag.phi_condition);
        if diag.conditioning_warning(self.cfg.cond_warn) {
            let msg = format!(
                "t = {time}: ill-conditioned decomposition (cond M {:e}, cond Phi {:e}, monitor {:e})",
                diag.m_condition, diag.phi_condition, diag.perturbation_monitor
            );
            log::warn!("{msg}");
            self.trace.warnings.push(msg);
        }
        self.trace.anchors.push((time, center.to_vec()));
        let range = acceptable_range(&bx, self.cfg.gamma)?;
        Ok((dec, range))
    }

    fn evaluate(&mut self, dec: &KoopmanDecomposition, t: f64) -> Result<Vec<f64>> {
        let ev = dec.evaluate(t)?;
        if let Some(i) = ev.state.iter().position(|v| !v.is_finite()) {
            return Err(SaskError::Divergence {
                location: format!("t = {t}, component {i}"),
            });
        }
        let norm = ev.state.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ev.imag_residual > self.cfg.imag_tol * norm.max(f64::MIN_POSITIVE) {
            let msg = format!("t = {t}: discarded imaginary part {:e}", ev.imag_residual);
            log::warn!("{msg}");
            self.trace.warnings.push(msg);
        }
        self.trace.imag_residual_max = self.trace.imag_residual_max.max(ev.imag_residual);
        Ok(ev.state)
    }

    /// Run the adaptive pass; `outputs` receives the state at each requested
    /// time (sorted, within `[0, T]`).
    fn run(
        mut self,
        x0: &[f64],
        requested: &[f64],
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>, SolveTrace)> {
        let (mut dec, mut range) = self.decompose_at(0.0, x0)?;
        let mut outputs = Vec::with_capacity(requested.len());
        let mut pending = requested.iter().copied().peekable();

        for tau in self.cfg.checkpoint_times() {
            while let Some(&t) = pending.peek() {
                if t > tau {
                    break;
                }
                outputs.push(self.evaluate(&dec, t)?);
                pending.next();
            }
            let x = self.evaluate(&dec, tau)?;
            self.trace.checkpoint_states.push((tau, x.clone()));
            if !range.contains(&x) {
                let (next, next_range) = self.decompose_at(tau, &x)?;
                dec = next;
                range = next_range;
                self.trace.update_count += 1;
            }
        }
        for t in pending {
            outputs.push(self.evaluate(&dec, t)?);
        }
        let final_state = self.evaluate(&dec, self.cfg.final_time)?;
        Ok((final_state, outputs, self.trace))
    }
}

/// State at `cfg.final_time` from `x0`, plus the adaptive trace.
pub fn solve(
    system: &SemiDiscreteSystem,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveTrace)> {
    let (state, _, trace) = Driver::new(system, x0, cfg)?.run(x0, &[])?;
    Ok((state, trace))
}

/// States at each of `ts` (sorted, within `[0, T]`) from the same adaptive
/// pass as [`solve`].
pub fn dense_output(
    system: &SemiDiscreteSystem,
    x0: &[f64],
    cfg: &SolverConfig,
    ts: &[f64],
) -> Result<(Vec<Vec<f64>>, SolveTrace)> {
    if ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(SaskError::Precondition(
            "output times must be sorted".into(),
        ));
    }
    if ts.iter().any(|&t| !(0.0..=cfg.final_time).contains(&t)) {
        return Err(SaskError::Precondition(format!(
            "output times must lie in [0, {}]",
            cfg.final_time
        )));
    }
    let (_, outputs, trace) = Driver::new(system, x0, cfg)?.run(x0, ts)?;
    Ok((outputs, trace))
}
