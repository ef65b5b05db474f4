use nalgebra::{Matrix3x4, Vector4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidity_core::lawson_osserman::{induced_metric, lo_map, lo_scalar_profile, minimal_residual, s3_sample, ConeMap};
use rigidity_core::linalg::sorted_symmetric_eigen;
use rigidity_core::profiles;

fn point() -> impl Strategy<Value = Vector4<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_map(|(a, b, c, d)| Vector4::new(a, b, c, d))
        .prop_filter("away from origin", |x| x.norm() > 0.05)
}

proptest! {
    #[test]
    fn map_is_one_homogeneous(x in point(), t in 0.1..10.0f64) {
        let a = lo_map(&(x * t)).unwrap();
        let b = lo_map(&x).unwrap();
        prop_assert!((a - b * t).norm() < 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn metric_is_zero_homogeneous(x in point(), t in 0.1..10.0f64) {
        let a = induced_metric(&(x * t)).unwrap();
        let b = induced_metric(&x).unwrap();
        prop_assert!((a.g - b.g).norm() < 1e-10);
    }

    #[test]
    fn jacobian_matches_components(x in point()) {
        // Analytic Jacobian vs the jet derivatives of the registry components.
        let jet = ConeMap::lawson_osserman().jet(&x).unwrap();
        for (k, name) in ["lo-f1", "lo-f2", "lo-f3"].iter().enumerate() {
            let d = profiles::lookup(name).unwrap().derivatives(x.as_slice()).unwrap();
            for i in 0..4 {
                prop_assert!((jet.jacobian[(k, i)] - d.gradient[i]).abs() < 1e-12 * (1.0 + d.gradient.norm()));
                for j in 0..4 {
                    prop_assert!((jet.hessians[k][(i, j)] - d.hessian[(i, j)]).abs() < 1e-10 * (1.0 + d.hessian.norm()));
                }
            }
        }
    }
}

#[test]
fn metric_is_at_least_identity_and_inverts() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let x = Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let m = induced_metric(&x).unwrap();
        let (ev, _) = sorted_symmetric_eigen(&m.g);
        assert!(ev[3] >= 1.0 - 1e-12);
        assert!((m.g.transpose() - &m.g).norm() < 1e-14);
        assert!((&m.inverse * &m.g - nalgebra::DMatrix::identity(4, 4)).norm() < 1e-12);
    }
}

#[test]
fn linear_and_perturbed_maps() {
    let points = s3_sample(16, 4096);
    let m = Matrix3x4::new(1.0, 2.0, 0.0, -1.0, 0.5, 0.0, 3.0, 1.0, 0.0, -2.0, 1.0, 0.0);
    let linear = minimal_residual(&ConeMap::linear(m), &points).unwrap();
    assert!(linear.residual_max < 1e-12);
    let perturbed = ConeMap::lawson_osserman().perturbed(0, 0, 0, 1e-2);
    let r = minimal_residual(&perturbed, &points).unwrap();
    assert!(r.residual_max > 1e-3, "{}", r.residual_max);
}

#[test]
fn residual_is_resolution_independent() {
    let map = ConeMap::lawson_osserman();
    for n in [8, 16, 32] {
        let r = minimal_residual(&map, &s3_sample(n, 10_000)).unwrap();
        assert!(r.residual_max < 1e-12, "n = {n}: {}", r.residual_max);
    }
}

#[test]
fn scalar_profile_examples() {
    let u = lo_scalar_profile();
    assert_eq!(u.eval(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
    assert!((u.eval(&[2.0, 0.0, 2.0, 1.0]).unwrap() - 2.0 * u.eval(&[1.0, 0.0, 1.0, 0.5]).unwrap()).abs() < 1e-14);
}
