use approx::assert_relative_eq;
use bogolab::spatial::{build_grid, Representation, SpaceTag, StateVector};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use std::f64::consts::PI;

fn state(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

fn sized_state() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..64).prop_flat_map(|n| (Just(n), state(n)))
}

proptest! {
    #[test]
    fn parseval_between_representations((n, v) in sized_state()) {
        let grid = build_grid(n, 1.0).unwrap();
        let nodal = StateVector::nodal(v);
        let spectral = grid.transform(&nodal, Representation::Spectral).unwrap();
        let a = grid.norm(&nodal, SpaceTag::L2).unwrap();
        let b = grid.norm(&spectral, SpaceTag::L2).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a), "{a} vs {b}");
        let back = grid.transform(&spectral, Representation::Nodal).unwrap();
        for (x, y) in back.values.iter().zip(&nodal.values) {
            prop_assert!((x - y).abs() <= 1e-11 * (1.0 + a));
        }
    }

    #[test]
    fn discrete_poincare((n, v) in sized_state(), length in 0.5..4.0f64) {
        let grid = build_grid(n, length).unwrap();
        let u = StateVector::nodal(v);
        let h1 = grid.norm(&u, SpaceTag::H10).unwrap();
        let l2 = grid.norm(&u, SpaceTag::L2).unwrap();
        prop_assert!(h1 * h1 >= grid.first_eigenvalue() * l2 * l2 * (1.0 - 1e-12));
    }

    #[test]
    fn duality_sandwich((n, v) in sized_state()) {
        let grid = build_grid(n, 1.0).unwrap();
        let u = StateVector::nodal(v);
        let l1 = grid.first_eigenvalue();
        let hm = grid.norm(&u, SpaceTag::Hminus1).unwrap();
        let l2 = grid.norm(&u, SpaceTag::L2).unwrap();
        let h1 = grid.norm(&u, SpaceTag::H10).unwrap();
        let slack = 1e-12 * (1.0 + h1);
        prop_assert!(hm <= l2 / l1.sqrt() + slack);
        prop_assert!(l2 / l1.sqrt() <= h1 / l1 + slack);
        // the tridiagonal route agrees with spectral division
        let tri = grid.hminus1_norm_nodal(&u.values);
        prop_assert!((tri - hm).abs() <= 1e-10 * (1.0 + hm));
    }

    #[test]
    fn inv_laplacian_inverts_the_stencil((n, v) in sized_state()) {
        let grid = build_grid(n, 1.0).unwrap();
        let u = StateVector::nodal(v);
        let w = grid.inv_laplacian(&u).unwrap();
        let back = grid.laplacian(&w).unwrap();
        let scale = u.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (x, y) in back.values.iter().zip(&u.values) {
            prop_assert!((x + y).abs() <= 1e-10 * scale, "{x} vs {y}");
        }
    }
}

#[test]
fn first_eigenvector_is_sharp_for_poincare() {
    let grid = build_grid(31, 1.0).unwrap();
    let e1 = StateVector::nodal(grid.eigenvector(0).to_vec());
    assert_relative_eq!(grid.norm(&e1, SpaceTag::L2).unwrap(), 1.0, epsilon = 1e-12);
    assert_relative_eq!(
        grid.norm(&e1, SpaceTag::H10).unwrap().powi(2),
        grid.first_eigenvalue(),
        max_relative = 1e-12
    );
}

#[test]
fn sine_norms_on_a_fine_grid() {
    let grid = build_grid(255, 1.0).unwrap();
    let u = grid.sample(|x| (PI * x).sin());
    assert_relative_eq!(grid.norm(&u, SpaceTag::L2).unwrap(), 0.5f64.sqrt(), max_relative = 1e-10);
    // the discrete λ₁ lags π² by O(h²)
    assert_relative_eq!(
        grid.norm(&u, SpaceTag::Hminus1).unwrap(),
        (1.0 / (2.0 * PI * PI)).sqrt(),
        max_relative = 1e-4
    );
    let w = grid.inv_laplacian(&u).unwrap();
    for (x, wi) in grid.nodes().iter().zip(&w.values) {
        assert!((wi - (PI * x).sin() / (PI * PI)).abs() <= 1e-4 / (PI * PI));
    }
}

#[test]
fn zero_state_has_zero_norms_in_every_space() {
    let grid = build_grid(7, 2.0).unwrap();
    let z = StateVector::zeros(7);
    for space in [SpaceTag::L2, SpaceTag::H10, SpaceTag::Hminus1, SpaceTag::Lp(4.0)] {
        assert_eq!(grid.norm(&z, space).unwrap(), 0.0);
    }
}

#[test]
fn eigenpairs_match_a_dense_symmetric_solver() {
    for (n, length) in [(1, 1.0), (7, 1.0), (31, 2.5)] {
        let grid = build_grid(n, length).unwrap();
        let h = grid.spacing();
        let neg_lap = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0 / (h * h),
            1 => -1.0 / (h * h),
            _ => 0.0,
        });
        let mut dense: Vec<f64> = SymmetricEigen::new(neg_lap.clone()).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        for (a, b) in dense.iter().zip(grid.eigenvalues()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-10);
        }
        for k in 0..n {
            let e = nalgebra::DVector::from_column_slice(grid.eigenvector(k));
            let r = &neg_lap * &e - &e * grid.eigenvalues()[k];
            assert!(r.amax() <= 1e-9 * grid.eigenvalues()[k] * e.amax());
            // orthonormal in h Σ u v
            assert_relative_eq!(h * e.dot(&e), 1.0, epsilon = 1e-12);
        }
    }
}
