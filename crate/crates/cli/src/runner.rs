//! Execute presets and turn the results into records.

use std::io::Write;
use std::time::Instant;

use sask_core::pde::{error_metrics, PdeProblem};
use sask_core::rk4::{rk4_solve, Rk4Config};
use sask_core::{solve, Result};

use crate::preset::{BenchmarkPreset, SolverKind};
use crate::record::RunRecord;

/// A finished run: the record plus the data needed for a solution dump.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub grid: Vec<f64>,
    pub solution: Vec<f64>,
    pub reference: Vec<f64>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    /// Plot-ready CSV: `x,u,u_ref`.
    pub fn write_solution<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "u", "u_ref"])?;
        for ((x, u), r) in self.grid.iter().zip(&self.solution).zip(&self.reference) {
            w.write_record([x.to_string(), u.to_string(), r.to_string()])?;
        }
        w.flush()
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

struct Solved {
    state: Vec<f64>,
    update_count: usize,
    warnings: Vec<String>,
}

fn solve_once(preset: &BenchmarkPreset, problem: &PdeProblem) -> Result<Solved> {
    match preset.solver {
        SolverKind::Sask => {
            let (state, trace) = solve(&problem.system, &problem.initial, &preset.solver_config())?;
            Ok(Solved {
                state,
                update_count: trace.update_count,
                warnings: trace.warnings,
            })
        }
        SolverKind::Rk4 => {
            let cfg = Rk4Config {
                dt: preset.dt,
                final_time: preset.final_time,
            };
            Ok(Solved {
                state: rk4_solve(&problem.system, &problem.initial, &cfg)?,
                update_count: 0,
                warnings: Vec::new(),
            })
        }
    }
}

/// Run one preset `repeat` times; only the solve is timed and the median
/// time is reported. Errors come from the last solve (solves are
/// deterministic).
pub fn run(preset: &BenchmarkPreset, repeat: usize) -> Result<RunOutcome> {
    let repeat = repeat.max(1);
    let problem = preset.build_problem()?;
    let reference = problem.reference_at(preset.final_time)?;
    let mut times = Vec::with_capacity(repeat);
    let mut last = None;
    for _ in 0..repeat {
        let start = Instant::now();
        let solved = solve_once(preset, &problem)?;
        times.push(start.elapsed().as_secs_f64());
        last = Some(solved);
    }
    let solved = last.expect("at least one solve");
    let metrics = error_metrics(&solved.state, &reference)?;
    let p = preset.params;
    let record = RunRecord {
        preset: preset.name.clone(),
        problem: problem.name().to_string(),
        solver: preset.solver,
        m: preset.m,
        final_time: preset.final_time,
        n: preset.sask.n,
        r: preset.sask.r,
        kappa: preset.sask.kappa,
        gamma: preset.sask.gamma,
        dt: preset.dt,
        c: p.c,
        nu: p.nu,
        beta: p.beta,
        mu: p.mu,
        p: p.p,
        repeat,
        rel_l2: metrics.rel_l2,
        l_inf: metrics.l_inf,
        wall_time_s: median(times),
        update_count: solved.update_count,
        warnings: solved.warnings.len(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    Ok(RunOutcome {
        record,
        grid: problem.grid.clone(),
        solution: solved.state,
        reference,
        warnings: solved.warnings,
    })
}

/// Both solvers on one preset.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub sask: RunOutcome,
    pub rk4: RunOutcome,
}

impl Comparison {
    /// RK4 wall time in units of the SASK wall time.
    pub fn normalized_rk4_time(&self) -> f64 {
        self.rk4.record.wall_time_s / self.sask.record.wall_time_s
    }

    pub fn records(&self) -> [RunRecord; 2] {
        [self.sask.record.clone(), self.rk4.record.clone()]
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: time sask 1.00 rk4 {:.2} | rel_L2 sask {:.3e} rk4 {:.3e} | L_inf sask {:.3e} rk4 {:.3e}",
            self.sask.record.preset,
            self.normalized_rk4_time(),
            self.sask.record.rel_l2,
            self.rk4.record.rel_l2,
            self.sask.record.l_inf,
            self.rk4.record.l_inf
        )
    }
}

pub fn compare(preset: &BenchmarkPreset, repeat: usize) -> Result<Comparison> {
    Ok(Comparison {
        sask: run(&preset.with_solver(SolverKind::Sask), repeat)?,
        rk4: run(&preset.with_solver(SolverKind::Rk4), repeat)?,
    })
}
