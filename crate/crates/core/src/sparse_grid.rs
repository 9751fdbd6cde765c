//! Smolyak sparse grids built from nested Chebyshev-extrema point sets.
//!
//! The one-dimensional sets are `N_1 = {0}`, `N_2 = {0, -1, 1}`, ... with
//! `m(i) = 2^(i-1) + 1` points for `i >= 2`. The grid is assembled from the
//! disjoint differences `A_i = N_i \ N_{i-1}` so that every point appears
//! exactly once.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::Range;

use crate::error::{Result, SaskError};

const SNAP_TOL: f64 = 1e-15;

/// Approximation level `kappa` of an isotropic Smolyak grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(pub u32);

impl Level {
    pub fn kappa(self) -> u32 {
        self.0
    }

    /// Number of points per dimension along a coordinate axis.
    pub fn points_per_dim(self) -> usize {
        if self.0 == 0 {
            1
        } else {
            (1usize << self.0) + 1
        }
    }
}

/// One multi-index `(i_1, ..., i_d)` selected by the Smolyak rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexCombination {
    pub indices: Vec<u32>,
}

impl IndexCombination {
    pub fn total(&self) -> u32 {
        self.indices.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Number of points in the nested set `N_i`.
pub fn nested_size(i: u32) -> usize {
    if i <= 1 {
        1
    } else {
        (1usize << (i - 1)) + 1
    }
}

/// Number of points in the disjoint set `A_i`.
pub fn disjoint_size(i: u32) -> usize {
    match i {
        0 | 1 => 1,
        2 => 2,
        _ => 1usize << (i - 2),
    }
}

fn snap(v: f64) -> f64 {
    for canonical in [0.0, 1.0, -1.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2] {
        if (v - canonical).abs() <= SNAP_TOL {
            return canonical;
        }
    }
    v
}

/// `cos(j * pi / 2^p)` with the fraction reduced first so the same point is
/// produced bit-for-bit regardless of which level requests it.
fn chebyshev_extremum(mut j: u64, mut p: u32) -> f64 {
    while p > 0 && j.is_multiple_of(2) {
        j /= 2;
        p -= 1;
    }
    let v = match p {
        0 => {
            if j.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        }
        _ => {
            // Mirror the upper half so that x and -x are exact negatives.
            let n = 1u64 << p;
            if 2 * j > n {
                -((n - j) as f64 * PI / n as f64).cos()
            } else {
                (j as f64 * PI / n as f64).cos()
            }
        }
    };
    snap(v)
}

fn check_set_index(i: u32) -> Result<()> {
    if i == 0 {
        return Err(SaskError::Domain("set index must be >= 1".into()));
    }
    if i > 30 {
        return Err(SaskError::Domain(format!("set index {i} is too large")));
    }
    Ok(())
}

/// The disjoint set `A_i`, in ascending order.
pub fn disjoint_set(i: u32) -> Result<Vec<f64>> {
    check_set_index(i)?;
    let pts = match i {
        1 => vec![0.0],
        2 => vec![-1.0, 1.0],
        _ => {
            // New extrema of T_{2^(i-1)}: odd j in cos(j pi / 2^(i-1)).
            let p = i - 1;
            let count = 1u64 << p;
            let mut v: Vec<f64> = (1..count)
                .step_by(2)
                .map(|j| chebyshev_extremum(j, p))
                .collect();
            v.sort_by(f64::total_cmp);
            v
        }
    };
    Ok(pts)
}

/// The nested set `N_i`, ordered as the concatenation `A_1, A_2, ..., A_i`
/// so that `N_i` is a prefix of `N_{i+1}`.
pub fn nested_set(i: u32) -> Result<Vec<f64>> {
    check_set_index(i)?;
    let mut out = Vec::with_capacity(nested_size(i));
    for k in 1..=i {
        out.extend(disjoint_set(k)?);
    }
    Ok(out)
}

/// All multi-indices with `d <= sum(i_j) <= d + kappa`.
///
/// Ordered by increasing total; within a total, by decreasing largest index
/// and then lexicographically descending. The all-ones combination is first.
pub fn smolyak_combinations(d: usize, kappa: Level) -> Result<Vec<IndexCombination>> {
    if d == 0 {
        return Err(SaskError::Domain("dimension must be >= 1".into()));
    }
    let max_total = d as u32 + kappa.0;
    let mut combos = Vec::new();
    let mut current = vec![1u32; d];
    enumerate_bounded(&mut current, 0, kappa.0, &mut combos);
    combos.sort_by(|a: &Vec<u32>, b: &Vec<u32>| {
        let ta: u32 = a.iter().sum();
        let tb: u32 = b.iter().sum();
        let ma = a.iter().max().copied().unwrap_or(1);
        let mb = b.iter().max().copied().unwrap_or(1);
        ta.cmp(&tb).then(mb.cmp(&ma)).then_with(|| b.cmp(a))
    });
    debug_assert!(combos.iter().all(|c| c.iter().sum::<u32>() <= max_total));
    Ok(combos
        .into_iter()
        .map(|indices| IndexCombination { indices })
        .collect())
}

/// Depth-first enumeration of index vectors with total excess (over all
/// ones) at most `budget`.
fn enumerate_bounded(current: &mut Vec<u32>, pos: usize, budget: u32, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for extra in 0..=budget {
        current[pos] = 1 + extra;
        enumerate_bounded(current, pos + 1, budget - extra, out);
    }
    current[pos] = 1;
}

/// Visit the tensor product of `sets`, last dimension varying fastest.
pub(crate) fn for_each_tensor<T: Copy>(sets: &[Vec<T>], mut visit: impl FnMut(&[T])) {
    if sets.iter().any(|s| s.is_empty()) {
        return;
    }
    let d = sets.len();
    let mut idx = vec![0usize; d];
    let mut item: Vec<T> = sets.iter().map(|s| s[0]).collect();
    loop {
        visit(&item);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sets[k].len() {
                item[k] = sets[k][idx[k]];
                break;
            }
            idx[k] = 0;
            item[k] = sets[k][0];
        }
    }
}

/// A Smolyak sparse grid on the reference domain `[-1, 1]^d`.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    dim: usize,
    level: Level,
    points: Vec<Vec<f64>>,
    combos: Vec<IndexCombination>,
    point_offsets: Vec<Range<usize>>,
}

impl SparseGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, l: usize) -> &[f64] {
        &self.points[l]
    }

    pub fn combos(&self) -> &[IndexCombination] {
        &self.combos
    }

    /// Contiguous range of point indices contributed by combination `c`.
    pub fn point_range(&self, c: usize) -> Range<usize> {
        self.point_offsets[c].clone()
    }
}

/// Build the sparse grid for dimension `d` and level `kappa`.
///
/// Points are the disjoint union over combinations of `A_{i_1} x ... x A_{i_d}`,
/// in combination order; the first point is the centre of the domain.
pub fn build_grid(d: usize, kappa: Level) -> Result<SparseGrid> {
    let combos = smolyak_combinations(d, kappa)?;
    let max_index = 1 + kappa.0;
    let disjoint: Vec<Vec<f64>> = (1..=max_index).map(disjoint_set).collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut point_offsets = Vec::with_capacity(combos.len());
    for combo in &combos {
        let start = points.len();
        let sets: Vec<Vec<f64>> = combo
            .indices
            .iter()
            .map(|&i| disjoint[i as usize - 1].clone())
            .collect();
        for_each_tensor(&sets, |p| points.push(p.to_vec()));
        point_offsets.push(start..points.len());
    }

    Ok(SparseGrid {
        dim: d,
        level: kappa,
        points,
        combos,
        point_offsets,
    })
}
