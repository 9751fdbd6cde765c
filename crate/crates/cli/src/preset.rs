//! Named benchmark configurations.

use std::fmt;

use sask_core::pde::{
    make_advection, make_burgers, make_heat, make_kdv, PdeParams, PdeProblem, ProblemKind,
    HEAT_DIFFUSIVITY,
};
use sask_core::{Level, Result, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Sask,
    Rk4,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Sask => "sask",
            SolverKind::Rk4 => "rk4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaskParams {
    pub n: usize,
    pub r: f64,
    pub kappa: u32,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPreset {
    pub name: String,
    pub problem: ProblemKind,
    pub m: usize,
    pub params: PdeParams,
    pub final_time: f64,
    pub solver: SolverKind,
    pub sask: SaskParams,
    /// RK4 step.
    pub dt: f64,
}

impl BenchmarkPreset {
    pub fn build_problem(&self) -> Result<PdeProblem> {
        let p = &self.params;
        match self.problem {
            ProblemKind::Advection => make_advection(self.m),
            ProblemKind::Heat => make_heat(self.m),
            ProblemKind::Kdv => make_kdv(self.m, p.c, p.beta, p.mu, p.p),
            ProblemKind::Burgers => make_burgers(self.m, p.nu),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(
            self.sask.n,
            self.final_time,
            self.sask.r,
            Level(self.sask.kappa),
            self.sask.gamma,
        )
    }

    pub fn with_solver(&self, solver: SolverKind) -> Self {
        Self {
            solver,
            ..self.clone()
        }
    }
}

const KDV: PdeParams = PdeParams {
    c: 0.5,
    nu: 0.0,
    beta: 3.0,
    mu: 9.0,
    p: 45.0,
};

const BURGERS: PdeParams = PdeParams {
    c: 0.0,
    nu: 0.005,
    beta: 0.0,
    mu: 0.0,
    p: 0.0,
};

const ADVECTION: PdeParams = PdeParams {
    c: 1.0,
    nu: 0.0,
    beta: 0.0,
    mu: 0.0,
    p: 0.0,
};

#[allow(clippy::too_many_arguments)]
fn preset(
    name: &str,
    problem: ProblemKind,
    m: usize,
    params: PdeParams,
    final_time: f64,
    (n, r, gamma): (usize, f64, f64),
    dt: f64,
) -> BenchmarkPreset {
    BenchmarkPreset {
        name: name.to_string(),
        problem,
        m,
        params,
        final_time,
        solver: SolverKind::Sask,
        sask: SaskParams {
            n,
            r,
            kappa: 1,
            gamma,
        },
        dt,
    }
}

/// All presets. The `-a`..`-d` entries are the timing comparison set; the
/// others are the single-problem accuracy runs. Every PDE run uses level 1
/// so the grid has `2m + 1` points.
pub fn presets() -> Vec<BenchmarkPreset> {
    use ProblemKind::*;
    let heat = PdeParams {
        nu: HEAT_DIFFUSIVITY,
        ..PdeParams::default()
    };
    vec![
        preset(
            "advection-a",
            Advection,
            32,
            ADVECTION,
            100.0,
            (1, 1.0, 0.2),
            5e-4,
        ),
        preset("heat-b", Heat, 32, heat, 10.0, (10, 0.1, 0.5), 1e-3),
        preset("kdv-c", Kdv, 100, KDV, 10.0, (100, 0.1, 0.8), 1e-3),
        preset(
            "burgers-d",
            Burgers,
            64,
            BURGERS,
            1.0,
            (100, 0.1, 1.0),
            1e-4,
        ),
        preset(
            "advection-t10",
            Advection,
            32,
            ADVECTION,
            10.0,
            (10, 1.0, 0.2),
            1e-3,
        ),
        preset("heat-t10", Heat, 32, heat, 10.0, (10, 0.1, 0.2), 1e-3),
        preset(
            "burgers-n50",
            Burgers,
            64,
            BURGERS,
            1.0,
            (50, 0.1, 1.0),
            1e-4,
        ),
    ]
}

pub fn find_preset(name: &str) -> Option<BenchmarkPreset> {
    presets().into_iter().find(|p| p.name == name)
}

/// Preset used when only `--problem` is given.
pub fn default_for(problem: ProblemKind) -> BenchmarkPreset {
    let name = match problem {
        ProblemKind::Advection => "advection-t10",
        ProblemKind::Heat => "heat-t10",
        ProblemKind::Kdv => "kdv-c",
        ProblemKind::Burgers => "burgers-n50",
    };
    find_preset(name).expect("default preset exists")
}
