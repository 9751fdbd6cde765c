//! Independent oracles shared by unit tests.

/// `exp(A t) x0` by scaling and squaring with a Taylor series.
pub(crate) fn expm_apply(a: &[Vec<f64>], t: f64, x0: &[f64]) -> Vec<f64> {
    let d = a.len();
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let h = t / f64::from(1u32 << squarings);
    let mut e = identity(d);
    let mut term = identity(d);
    for k in 1..30 {
        term = matmul(&term, a);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= h / k as f64;
            }
        }
        for i in 0..d {
            for j in 0..d {
                e[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        e = matmul(&e, &e);
    }
    (0..d)
        .map(|i| (0..d).map(|j| e[i][j] * x0[j]).sum())
        .collect()
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}
