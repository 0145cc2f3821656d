//! Pseudo-inverse allocation against a dense SVD least-squares solve.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rwhil_core::control::allocate;
use rwhil_core::dynamics::default_spin_axes;

const CASES: usize = 10_000;

#[test]
fn random_cases_match_dense_least_squares() {
    let g = default_spin_axes();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_eq: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for _ in 0..CASES {
        let u_d = Vector3::from_fn(|_, _| rng.random_range(-0.1..0.1));
        let theta = DVector::from_fn(4, |_, _| rng.random_range(0.05..=1.0));
        let u = allocate(&u_d, &theta, &g).unwrap();

        let m = DMatrix::from_fn(3, 4, |r, c| g[(r, c)] * theta[c]);
        let back = &m * &u;
        worst_eq = worst_eq.max((0..3).map(|i| (back[i] - u_d[i]).abs()).fold(0.0, f64::max));

        let b = DVector::from_column_slice(u_d.as_slice());
        let oracle = m.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        worst_norm = worst_norm.max((u.norm() - oracle.norm()).abs());
        assert!((&u - &oracle).amax() < 1e-9, "u = {u}, oracle = {oracle}");
    }
    assert!(worst_eq < 1e-9, "worst equality error {worst_eq:e}");
    assert!(worst_norm < 1e-9, "worst norm mismatch {worst_norm:e}");
}

#[test]
fn solution_has_no_null_space_component() {
    let g = default_spin_axes();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let u_d = Vector3::from_fn(|_, _| rng.random_range(-0.1..0.1));
        let theta = DVector::from_fn(4, |_, _| rng.random_range(0.05..=1.0));
        let u = allocate(&u_d, &theta, &g).unwrap();
        let m = DMatrix::from_fn(3, 4, |r, c| g[(r, c)] * theta[c]);
        // null direction from the projector I - M⁺M
        let proj = DMatrix::identity(4, 4) - m.clone().pseudo_inverse(1e-14).unwrap() * &m;
        let null = proj.column_iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap().normalize();
        assert!((&m * &null).amax() < 1e-12);
        assert!(u.dot(&null).abs() < 1e-9 * (1.0 + u.norm()));
    }
}
