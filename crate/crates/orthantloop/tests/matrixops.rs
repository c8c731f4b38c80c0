mod common;

use orthantloop::error::Error;
use orthantloop::kinematics::{build_sigma, SigmaMatrix};
use orthantloop::matrixops::*;
use proptest::prelude::*;

#[test]
fn identity_correlation_data() {
    let c = correlation_data(&SigmaMatrix::from_entries(SymMatrix::identity(3))).unwrap();
    assert_eq!(c.r_matrix, SymMatrix::identity(3));
    assert_eq!(c.rho, SymMatrix::identity(3));
    assert_eq!(c.d_reduced, 1.0);
}

#[test]
fn two_by_two_inversion() {
    let s = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let c = correlation_data(&SigmaMatrix::from_entries(s)).unwrap();
    assert!((c.det_sigma - 0.75).abs() < 1e-15);
    assert!((c.r_matrix.get(0, 0) - 1.0 / 0.75).abs() < 1e-14);
    assert!((c.r_matrix.get(0, 1) + 0.5 / 0.75).abs() < 1e-14);
    assert!((c.rho.get(0, 1) + 0.5).abs() < 1e-15);
}

#[test]
fn reduced_determinant_of_equal_cosines() {
    let cfg = common::equicorrelated(3, 1.0, 0.5, 3.0);
    let c = correlation_data(&build_sigma(&cfg).unwrap()).unwrap();
    // 1 - 3 c^2 + 2 c^3
    assert!((c.d_reduced - 0.5).abs() < 1e-14);
}

#[test]
fn singular_sigma_is_reported() {
    let s = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    assert!(matches!(
        correlation_data(&SigmaMatrix::from_entries(s)),
        Err(Error::SingularMatrix { .. })
    ));
}

#[test]
fn rho_from_inverse_matches_cofactors() {
    let mut rng = common::rng(11);
    for n in 2..=7 {
        let s = common::random_spd(&mut rng, n);
        let c = CorrelationData::from_matrix(&s).unwrap();
        for i in 0..n {
            for j in 0..n {
                let via_cof = c.cofactors.get(i, j) / (c.cofactors.get(i, i) * c.cofactors.get(j, j)).sqrt();
                assert!((via_cof - c.rho.get(i, j)).abs() < 1e-10);
            }
        }
        let brute = s.cofactors_by_minors();
        for i in 0..n {
            for j in 0..n {
                assert!((brute.get(i, j) - c.cofactors.get(i, j)).abs() < 1e-10 * c.det_sigma.abs().max(1.0));
            }
        }
    }
}

#[test]
fn delete_index_examples() {
    assert_eq!(delete_index(&SymMatrix::<f64>::identity(3), 1).unwrap(), SymMatrix::identity(2));
    let (a, b, c) = (0.1, 0.2, 0.3);
    let m = SymMatrix::from_rows(&[vec![1.0, a, b], vec![a, 1.0, c], vec![b, c, 1.0]]).unwrap();
    assert_eq!(delete_index(&m, 1).unwrap().rows(), vec![vec![1.0, b], vec![b, 1.0]]);
    assert_eq!(
        delete_index(&m, 3).unwrap_err(),
        Error::IndexOutOfRange { index: 3, dim: 3 }
    );
}

#[test]
fn oversized_matrices_are_rejected() {
    assert_eq!(
        CorrelationData::from_matrix(&SymMatrix::<f64>::identity(10)).unwrap_err(),
        Error::MatrixTooLarge(10)
    );
}

proptest! {
    #[test]
    fn delete_index_keeps_parent_entries(n in 2usize..8, seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let m = common::random_spd(&mut common::rng(seed), n);
        let i = pick.index(n);
        let d = delete_index(&m, i).unwrap();
        let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
        for (a, &ka) in keep.iter().enumerate() {
            for (b, &kb) in keep.iter().enumerate() {
                prop_assert_eq!(d.get(a, b), m.get(ka, kb));
                prop_assert_eq!(d.get(a, b), d.get(b, a));
            }
        }
    }

    #[test]
    fn cholesky_reconstructs(n in 1usize..9, seed in any::<u64>()) {
        let s = common::random_spd(&mut common::rng(seed), n);
        let l = s.cholesky().expect("positive definite");
        let rebuilt = SymMatrix::from_fn(n, |i, j| (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>());
        let diff = SymMatrix::from_fn(n, |i, j| rebuilt.get(i, j) - s.get(i, j));
        prop_assert!(diff.frobenius_norm() <= 1e-12 * s.frobenius_norm());
    }

    #[test]
    fn correlations_strictly_inside_unit_interval(n in 2usize..8, seed in any::<u64>()) {
        let s = common::random_spd(&mut common::rng(seed), n);
        let c = CorrelationData::from_matrix(&s).unwrap();
        for i in 0..n {
            prop_assert!((c.rho.get(i, i) - 1.0).abs() < 1e-14);
            for j in 0..n {
                if i != j {
                    prop_assert!(c.rho.get(i, j).abs() < 1.0);
                }
            }
        }
        prop_assert_eq!(s.definiteness(1e-12), Definiteness::PositiveDefinite);
    }

    #[test]
    fn inverse_times_matrix_is_identity(n in 1usize..9, seed in any::<u64>()) {
        let s = common::random_spd(&mut common::rng(seed), n);
        let r = s.inverse().unwrap();
        for i in 0..n {
            for j in 0..n {
                let p: f64 = (0..n).map(|k| s.get(i, k) * r.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((p - target).abs() < 1e-10);
            }
        }
    }
}
