use std::fmt;
use std::sync::Arc;

type DynamicsFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// An autonomous system `dx/dt = f(x)` on `R^d`.
#[derive(Clone)]
pub struct SemiDiscreteSystem {
    name: String,
    dim: usize,
    dynamics: Arc<DynamicsFn>,
}

impl SemiDiscreteSystem {
    /// `dynamics(x, out)` must write `f(x)` into `out` (length `dim`).
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        dynamics: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            dynamics: Arc::new(dynamics),
        }
    }

    /// `dx/dt = A x` for a row-major `d x d` matrix.
    pub fn linear(name: impl Into<String>, a: Vec<Vec<f64>>) -> Self {
        let d = a.len();
        assert!(a.iter().all(|row| row.len() == d), "A must be square");
        Self::new(name, d, move |x, out| {
            for (o, row) in out.iter_mut().zip(&a) {
                *o = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum();
            }
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new("zero", dim, |_, out| out.fill(0.0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.dynamics)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }
}

impl fmt::Debug for SemiDiscreteSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemiDiscreteSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}
