//! Classical fixed-step fourth-order Runge-Kutta, used as the baseline.

use crate::error::{Result, SaskError};
use crate::system::SemiDiscreteSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Config {
    pub dt: f64,
    pub final_time: f64,
}

impl Rk4Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SaskError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.final_time >= 0.0) || !self.final_time.is_finite() {
            return Err(SaskError::Config(format!(
                "final time must be non-negative, got {}",
                self.final_time
            )));
        }
        Ok(())
    }

    /// Step sizes covering `[0, T]`: uniform steps of `dt` and, if `T` is not
    /// a multiple of `dt`, one shorter step ending exactly on `T`.
    pub fn steps(&self) -> (usize, f64) {
        let ratio = self.final_time / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            (nearest as usize, 0.0)
        } else {
            let full = ratio.floor();
            (full as usize, self.final_time - full * self.dt)
        }
    }
}

struct Stages {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stages {
    fn new(d: usize) -> Self {
        Self {
            k1: vec![0.0; d],
            k2: vec![0.0; d],
            k3: vec![0.0; d],
            k4: vec![0.0; d],
            tmp: vec![0.0; d],
        }
    }

    fn step(&mut self, system: &SemiDiscreteSystem, x: &mut [f64], h: f64) {
        fn axpy(out: &mut [f64], x: &[f64], a: f64, k: &[f64]) {
            for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
                *o = xi + a * ki;
            }
        }
        system.eval_into(x, &mut self.k1);
        axpy(&mut self.tmp, x, 0.5 * h, &self.k1);
        system.eval_into(&self.tmp, &mut self.k2);
        axpy(&mut self.tmp, x, 0.5 * h, &self.k2);
        system.eval_into(&self.tmp, &mut self.k3);
        axpy(&mut self.tmp, x, h, &self.k3);
        system.eval_into(&self.tmp, &mut self.k4);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrate from `x0` at `t = 0` to `cfg.final_time`.
pub fn rk4_solve(system: &SemiDiscreteSystem, x0: &[f64], cfg: &Rk4Config) -> Result<Vec<f64>> {
    cfg.validate()?;
    if x0.len() != system.dim() {
        return Err(SaskError::Precondition(format!(
            "initial state has {} components, system has {}",
            x0.len(),
            system.dim()
        )));
    }
    let (full, rest) = cfg.steps();
    let mut x = x0.to_vec();
    let mut stages = Stages::new(x.len());
    let check = |x: &[f64], step: usize| -> Result<()> {
        match x.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(SaskError::Divergence {
                location: format!("step {step}, component {i}"),
            }),
            None => Ok(()),
        }
    };
    for step in 0..full {
        stages.step(system, &mut x, cfg.dt);
        check(&x, step)?;
    }
    if rest > 0.0 {
        stages.step(system, &mut x, rest);
        check(&x, full)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> SemiDiscreteSystem {
        SemiDiscreteSystem::new("decay", 1, |x, out| out[0] = -x[0])
    }

    #[test]
    fn exponential_decay() {
        let x = rk4_solve(
            &decay(),
            &[1.0],
            &Rk4Config {
                dt: 1e-3,
                final_time: 1.0,
            },
        )
        .unwrap();
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_dynamics_are_stationary() {
        let x0 = [1.5, -2.0];
        let x = rk4_solve(
            &SemiDiscreteSystem::zero(2),
            &x0,
            &Rk4Config {
                dt: 0.1,
                final_time: 3.0,
            },
        )
        .unwrap();
        assert_eq!(x, x0.to_vec());
    }

    #[test]
    fn last_step_lands_on_final_time() {
        assert_eq!(
            Rk4Config {
                dt: 0.25,
                final_time: 1.0
            }
            .steps(),
            (4, 0.0)
        );
        assert_eq!(
            Rk4Config {
                dt: 1e-3,
                final_time: 1.0
            }
            .steps(),
            (1000, 0.0)
        );
        let (n, rest) = Rk4Config {
            dt: 0.3,
            final_time: 1.0,
        }
        .steps();
        assert_eq!(n, 3);
        assert!((rest - 0.1).abs() < 1e-15);
        // Constant velocity integrates exactly, so landing errors would show.
        let sys = SemiDiscreteSystem::new("drift", 1, |_, out| out[0] = 1.0);
        let x = rk4_solve(
            &sys,
            &[0.0],
            &Rk4Config {
                dt: 0.3,
                final_time: 1.0,
            },
        )
        .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fourth_order_convergence() {
        let sys = SemiDiscreteSystem::new("logistic", 1, |x, out| out[0] = x[0] * (1.0 - x[0]));
        let exact = |t: f64| 1.0 / (1.0 + 9.0 * (-t).exp());
        let errs: Vec<f64> = [1e-1, 5e-2, 2.5e-2]
            .iter()
            .map(|&dt| {
                (rk4_solve(
                    &sys,
                    &[0.1],
                    &Rk4Config {
                        dt,
                        final_time: 2.0,
                    },
                )
                .unwrap()[0]
                    - exact(2.0))
                .abs()
            })
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!(
                (3.8..=4.2).contains(&slope),
                "slope {slope}, errors {errs:?}"
            );
        }
    }

    #[test]
    fn divergence_is_an_error() {
        let sys = SemiDiscreteSystem::new("blowup", 1, |x, out| out[0] = x[0] * x[0]);
        let err = rk4_solve(
            &sys,
            &[1.0],
            &Rk4Config {
                dt: 0.1,
                final_time: 5.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, SaskError::Divergence { .. }));
    }

    #[test]
    fn invalid_config() {
        assert!(rk4_solve(
            &decay(),
            &[1.0],
            &Rk4Config {
                dt: 0.0,
                final_time: 1.0
            }
        )
        .is_err());
        assert!(rk4_solve(
            &decay(),
            &[1.0],
            &Rk4Config {
                dt: 0.1,
                final_time: -1.0
            }
        )
        .is_err());
        assert!(rk4_solve(
            &decay(),
            &[1.0, 2.0],
            &Rk4Config {
                dt: 0.1,
                final_time: 1.0
            }
        )
        .is_err());
    }
}
