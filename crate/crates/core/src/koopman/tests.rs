use super::*;
use crate::cheb_basis::{build_basis, build_operators};
use crate::sparse_grid::{build_grid, Level};
use crate::test_support::{expm_apply, rel_err};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(d: usize, k: u32) -> (SparseGrid, InterpolationOperators) {
    let grid = build_grid(d, Level(k)).unwrap();
    let basis = build_basis(d, Level(k)).unwrap();
    let ops = build_operators(&grid, &basis).unwrap();
    (grid, ops)
}

fn linear_decomposition(a: &[Vec<f64>], x0: &[f64], r: f64, k: u32) -> KoopmanDecomposition {
    let (grid, ops) = setup(a.len(), k);
    let sys = SemiDiscreteSystem::linear("linear", a.to_vec());
    let bx = NeighborhoodBox::centered(x0, r).unwrap();
    decompose(&sys, &grid, &ops, &bx, 0.0, DecomposeOptions::default()).unwrap()
}

fn contains(spectrum: &[c64], target: c64, tol: f64) -> bool {
    spectrum.iter().any(|z| (z - target).norm() < tol)
}

#[test]
fn identity_box_is_identity_rescale() {
    let (grid, ops) = setup(2, 2);
    let bx = NeighborhoodBox::centered(&[0.0, 0.0], 1.0).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    for l in 0..grid.len() {
        assert_eq!(local.point(l), grid.point(l).to_vec());
    }
    assert_eq!(local.scale(0), 1.0);
    let g = local.scaled_g(1);
    for l in 0..grid.len() {
        for j in 0..grid.len() {
            assert_eq!(g[(l, j)], ops.g(1)[(l, j)]);
        }
    }
}

#[test]
fn affine_map_sends_endpoints() {
    let (grid, ops) = setup(1, 1);
    let bx = NeighborhoodBox::centered(&[1.0], 1.0).unwrap();
    assert_eq!(bx.lower(), vec![0.0]);
    assert_eq!(bx.upper(), vec![2.0]);
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    // Reference point -1 is grid point 1.
    assert_eq!(grid.point(1), &[-1.0]);
    assert_eq!(local.point(1), vec![0.0]);
    assert_eq!(local.point(2), vec![2.0]);
    assert_eq!(local.scale(0), 1.0);

    let bx = NeighborhoodBox::centered(&[0.3], 0.25).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    assert_eq!(local.scale(0), 4.0);
    assert_eq!(local.point(0), vec![0.3]);
}

#[test]
fn non_positive_radius_is_rejected() {
    assert!(matches!(
        NeighborhoodBox::centered(&[0.0], 0.0),
        Err(SaskError::Domain(_))
    ));
    assert!(NeighborhoodBox::centered(&[0.0], -1.0).is_err());
}

#[test]
fn zero_dynamics_give_zero_generator() {
    let (grid, ops) = setup(3, 2);
    let bx = NeighborhoodBox::centered(&[0.1, 0.2, 0.3], 0.5).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let u = assemble_generator(&SemiDiscreteSystem::zero(3), &local).unwrap();
    assert!(linalg::norm_inf_real(u.as_ref()) == 0.0);
}

#[test]
fn constant_dynamics_give_g() {
    let (grid, ops) = setup(1, 1);
    let bx = NeighborhoodBox::centered(&[0.0], 1.0).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let sys = SemiDiscreteSystem::new("one", 1, |_, out| out[0] = 1.0);
    let u = assemble_generator(&sys, &local).unwrap();
    for l in 0..3 {
        for j in 0..3 {
            assert_eq!(u[(l, j)], ops.g(0)[(l, j)]);
        }
    }
}

#[test]
fn linear_dynamics_give_scaled_g() {
    let (grid, ops) = setup(1, 2);
    let bx = NeighborhoodBox::centered(&[0.0], 1.0).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let lam = -0.7;
    let sys = SemiDiscreteSystem::linear("lin", vec![vec![lam]]);
    let u = assemble_generator(&sys, &local).unwrap();
    for l in 0..grid.len() {
        for j in 0..grid.len() {
            let expected = lam * grid.point(l)[0] * ops.g(0)[(l, j)];
            assert!((u[(l, j)] - expected).abs() < 1e-15);
        }
    }
}

#[test]
fn non_finite_dynamics_name_the_point() {
    let (grid, ops) = setup(1, 1);
    let bx = NeighborhoodBox::centered(&[0.0], 1.0).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let sys = SemiDiscreteSystem::new("blowup", 1, |x, out| out[0] = 1.0 / (x[0] - 1.0));
    let err = assemble_generator(&sys, &local).unwrap_err();
    // 1/(1-1) is infinite at the point +1, which is grid point 2.
    assert_eq!(
        err,
        SaskError::Evaluation {
            point_index: 2,
            component: 0
        }
    );
}

#[test]
fn zero_generator_has_zero_spectrum() {
    let (_, ops) = setup(2, 1);
    let n = ops.size();
    let u = Mat::<f64>::zeros(n, n);
    let eig = eigendecompose(u.as_ref(), &ops, EigenMethod::Reduction).unwrap();
    assert!(eig.eigenvalues().iter().all(|z| z.norm() == 0.0));
}

/// Generator `(a + b x) d/dx` on the monomials `1, x, ..., x^p`.
fn monomial_generator(a: f64, b: f64, p: usize) -> Mat<f64> {
    let mut l = Mat::<f64>::zeros(p + 1, p + 1);
    for k in 1..=p {
        l[(k - 1, k)] += a * k as f64;
        l[(k, k)] += b * k as f64;
    }
    l
}

#[test]
fn scalar_decay_spectrum_matches_monomial_oracle() {
    let (_, ops) = setup(1, 2);
    let (grid, _) = setup(1, 2);
    let bx = NeighborhoodBox::centered(&[0.0], 1.0).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let sys = SemiDiscreteSystem::linear("decay", vec![vec![-1.0]]);
    let u = assemble_generator(&sys, &local).unwrap();
    let eig = eigendecompose(u.as_ref(), &ops, EigenMethod::Reduction).unwrap();

    let oracle = monomial_generator(0.0, -1.0, 4).eigenvalues().unwrap();
    let mut oracle_re: Vec<f64> = oracle.iter().map(|z| z.re).collect();
    oracle_re.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(eig.eigenvalues().len(), 5);
    for (ours, exp) in eig.eigenvalues().iter().zip(&oracle_re) {
        assert!(
            (ours.re - exp).abs() < 1e-8 && ours.im.abs() < 1e-8,
            "{ours} vs {exp}"
        );
    }
    for (ours, exp) in eig.eigenvalues().iter().zip([0.0, -1.0, -2.0, -3.0, -4.0]) {
        assert!((ours - c64::new(exp, 0.0)).norm() < 1e-8);
    }
}

#[test]
fn harmonic_oscillator_spectrum_contains_plus_minus_i() {
    let a = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
    let dec = linear_decomposition(&a, &[0.0, 0.0], 1.0, 2);
    assert!(contains(dec.eigenvalues(), c64::new(0.0, 1.0), 1e-8));
    assert!(contains(dec.eigenvalues(), c64::new(0.0, -1.0), 1e-8));
}

#[test]
fn eigenpairs_are_sorted_and_normalised() {
    let a = vec![vec![-0.5, 1.0], vec![-1.0, -0.2]];
    let (grid, ops) = setup(2, 2);
    let bx = NeighborhoodBox::centered(&[0.2, -0.1], 0.5).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let u = assemble_generator(&SemiDiscreteSystem::linear("l", a), &local).unwrap();
    let eig = eigendecompose(u.as_ref(), &ops, EigenMethod::Reduction).unwrap();
    for w in eig.eigenvalues().windows(2) {
        assert!(eigen_order(&w[0], &w[1]) != Ordering::Greater);
    }
    for j in 0..ops.size() {
        let norm: f64 = (0..ops.size())
            .map(|i| eig.w()[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
    assert!(eig.residual() < 1e-10);
}

#[test]
fn reduction_and_qz_agree_on_spectrum() {
    let a = [
        vec![-0.5, 1.0, 0.0],
        vec![-1.0, -0.2, 0.3],
        vec![0.1, 0.0, -1.5],
    ];
    let (grid, ops) = setup(3, 2);
    let bx = NeighborhoodBox::centered(&[0.2, -0.1, 0.4], 0.5).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let sys = SemiDiscreteSystem::new("quadratic", 3, move |x, out| {
        for i in 0..3 {
            out[i] = (0..3).map(|j| a[i][j] * x[j]).sum::<f64>() + 0.1 * x[i] * x[(i + 1) % 3];
        }
    });
    let u = assemble_generator(&sys, &local).unwrap();
    let red = eigendecompose(u.as_ref(), &ops, EigenMethod::Reduction).unwrap();
    let qz = eigendecompose(u.as_ref(), &ops, EigenMethod::Qz).unwrap();
    assert!(qz.residual() < 1e-9);
    for z in red.eigenvalues() {
        assert!(
            contains(qz.eigenvalues(), *z, 1e-7),
            "{z} missing from QZ spectrum"
        );
    }
}

#[test]
fn scalar_decay_reconstruction() {
    let dec = linear_decomposition(&[vec![-1.0]], &[0.5], 0.5, 2);
    let x = dec.evaluate(2.0).unwrap().state[0];
    let exact = 0.5 * (-2.0f64).exp();
    assert!(((x - exact) / exact).abs() < 1e-8, "{x} vs {exact}");
    assert!((exact - 0.0676676416).abs() < 1e-9);

    let x1 = dec.evaluate(1.0).unwrap().state[0];
    assert!(((x1 - 0.5 * (-1.0f64).exp()) / x1).abs() < 1e-8);
}

#[test]
fn zero_dynamics_reconstruction_is_constant() {
    let (grid, ops) = setup(2, 1);
    let x0 = [0.3, -0.7];
    let bx = NeighborhoodBox::centered(&x0, 0.1).unwrap();
    let dec = decompose(
        &SemiDiscreteSystem::zero(2),
        &grid,
        &ops,
        &bx,
        0.0,
        DecomposeOptions::default(),
    )
    .unwrap();
    for t in [0.0, 1.0, 10.0, 1e3] {
        let s = dec.evaluate(t).unwrap().state;
        assert!(rel_err(&s, &x0) < 1e-12);
    }
}

#[test]
fn modes_reproduce_grid_points() {
    let (grid, ops) = setup(2, 2);
    let bx = NeighborhoodBox::centered(&[0.4, 0.1], 0.3).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let sys = SemiDiscreteSystem::new("vdp", 2, |x, out| {
        out[0] = x[1];
        out[1] = (1.0 - x[0] * x[0]) * x[1] - x[0];
    });
    let u = assemble_generator(&sys, &local).unwrap();
    let eig = eigendecompose(u.as_ref(), &ops, EigenMethod::Reduction).unwrap();
    let modes = solve_modes(eig.phi(), local.points()).unwrap();
    let recon = eig.phi() * modes.modes();
    for l in 0..grid.len() {
        for i in 0..2 {
            assert!((recon[(l, i)] - c64::new(local.points()[(l, i)], 0.0)).norm() < 1e-10);
        }
    }
}

#[test]
fn singular_phi_is_a_mode_solve_error() {
    let phi = Mat::<c64>::zeros(3, 3);
    let pts = Mat::<f64>::from_fn(3, 1, |i, _| i as f64 + 1.0);
    assert!(matches!(
        solve_modes(phi.as_ref(), pts.as_ref()),
        Err(SaskError::ModeSolve { .. })
    ));
}

#[test]
fn singular_but_consistent_phi_still_reproduces_xi() {
    // Two identical columns; the right-hand side lies in the column space.
    let phi = Mat::<c64>::from_fn(3, 3, |i, j| match (i, j) {
        (_, 0) | (_, 1) => c64::new(1.0 + i as f64, 0.0),
        (i, _) => c64::new((i * i) as f64, 0.0),
    });
    let pts = Mat::<f64>::from_fn(3, 1, |i, _| 2.0 * (1.0 + i as f64) + (i * i) as f64);
    let sol = solve_modes(phi.as_ref(), pts.as_ref()).unwrap();
    assert!(sol.rank_deficient());
    let c = sol.modes();
    for i in 0..3 {
        let row: c64 = (0..3).map(|j| phi[(i, j)] * c[(j, 0)]).sum();
        assert!((row.re - pts[(i, 0)]).abs() < 1e-12 && row.im.abs() < 1e-12);
    }
}

#[test]
fn anchor_evaluation_returns_anchor_state() {
    let dec = linear_decomposition(&[vec![0.0, 1.0], vec![-1.0, 0.0]], &[1.0, 0.0], 1.0, 2);
    let s = dec.evaluate(0.0).unwrap().state;
    assert!(rel_err(&s, &[1.0, 0.0]) < 1e-8);
    assert!(dec.evaluate(-1e-3).is_err());
}

#[test]
fn harmonic_oscillator_quarter_turn() {
    let dec = linear_decomposition(&[vec![0.0, 1.0], vec![-1.0, 0.0]], &[1.0, 0.0], 1.0, 2);
    let e = dec.evaluate(std::f64::consts::FRAC_PI_2).unwrap();
    assert!((e.state[0] - 0.0).abs() < 1e-6);
    assert!((e.state[1] + 1.0).abs() < 1e-6);
    assert!(e.imag_residual < 1e-8);
}

#[test]
fn rescaling_eigenvectors_leaves_solution_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (grid, ops) = setup(2, 2);
    let bx = NeighborhoodBox::centered(&[0.4, 0.1], 0.3).unwrap();
    let local = rescale_to_box(&grid, &ops, &bx).unwrap();
    let sys = SemiDiscreteSystem::new("vdp", 2, |x, out| {
        out[0] = x[1];
        out[1] = (1.0 - x[0] * x[0]) * x[1] - x[0];
    });
    let u = assemble_generator(&sys, &local).unwrap();
    let eig = eigendecompose(u.as_ref(), &ops, EigenMethod::Reduction).unwrap();
    let base = KoopmanDecomposition::new(
        eig.clone(),
        solve_modes(eig.phi(), local.points()).unwrap(),
        ops.m_condition(),
        0.0,
        vec![0.4, 0.1],
    );
    let factors: Vec<c64> = (0..ops.size())
        .map(|_| {
            c64::from_polar(
                rng.gen_range(0.2..5.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let scaled_eig = eig.with_scaled_columns(&factors);
    let scaled = KoopmanDecomposition::new(
        scaled_eig.clone(),
        solve_modes(scaled_eig.phi(), local.points()).unwrap(),
        ops.m_condition(),
        0.0,
        vec![0.4, 0.1],
    );
    for t in [0.0, 0.05, 0.1, 0.2] {
        let a = base.evaluate(t).unwrap().state;
        let b = scaled.evaluate(t).unwrap().state;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10, "t={t}: {x} vs {y}");
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn eigenvalues_of(a: &[Vec<f64>]) -> Vec<c64> {
    let d = a.len();
    Mat::from_fn(d, d, |i, j| a[i][j]).eigenvalues().unwrap()
}

#[test]
fn linear_spectrum_contains_eigenvalues_of_a() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for d in [2usize, 3] {
        for _ in 0..5 {
            let a = random_matrix(&mut rng, d);
            let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dec = linear_decomposition(&a, &x0, 0.5, 2);
            for lam in eigenvalues_of(&a) {
                assert!(
                    contains(dec.eigenvalues(), lam, 1e-8),
                    "{lam} not found for d={d}"
                );
            }
        }
    }
}

#[test]
fn linear_solution_matches_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for d in [1usize, 2, 3] {
        for _ in 0..5 {
            let a = random_matrix(&mut rng, d);
            let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..1.0)).collect();
            let dec = linear_decomposition(&a, &x0, 1.0, 2);
            for t in [0.0, 0.1, 0.3] {
                let exact = expm_apply(&a, t, &x0);
                let got = dec.evaluate(t).unwrap().state;
                assert!(rel_err(&got, &exact) < 1e-8, "d={d} t={t}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reconstruction_at_anchor_is_anchor_state(
        x0 in prop::collection::vec(-2.0f64..2.0, 2),
        r in 0.05f64..1.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        k in 1u32..=2,
    ) {
        let (grid, ops) = setup(2, k);
        let c = coeffs.clone();
        let sys = SemiDiscreteSystem::new("smooth", 2, move |x, out| {
            out[0] = c[0] * x[1] + c[1] * (x[0]).sin() + c[2];
            out[1] = c[3] * x[0] * x[1] + c[4] * (0.5 * x[1]).cos() + c[5] * x[0];
        });
        let bx = NeighborhoodBox::centered(&x0, r).unwrap();
        let dec = decompose(&sys, &grid, &ops, &bx, 0.0, DecomposeOptions::default()).unwrap();
        let s = dec.evaluate(0.0).unwrap().state;
        let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        let err = s.iter().zip(&x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err / norm < 1e-8, "err {}", err);
    }
}
