use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use proptest::prelude::*;

use rigidity_core::coefficients::{
    certify, reduce_to_chart, synthesize_field, synthesize_pointwise, IdentityField, SynthesisError, DEFAULT_KAPPA_MAX,
};
use rigidity_core::grid::SphereGrid;
use rigidity_core::lawson_osserman::InverseMetricField;
use rigidity_core::linalg::{ellipticity, sorted_symmetric_eigen, tangent_basis};
use rigidity_core::profiles;

/// A symmetric matrix with radial kernel at `x` and prescribed tangential eigenvalues.
fn hessian_with(x: &Vector3<f64>, mu: [f64; 2], angle: f64) -> (DMatrix<f64>, DVector<f64>) {
    let xd = DVector::from_column_slice(x.normalize().as_slice());
    let q = tangent_basis(&xd);
    let (s, c) = angle.sin_cos();
    let e1 = q.column(0) * c + q.column(1) * s;
    let e2 = q.column(1) * c - q.column(0) * s;
    let m = &e1 * e1.transpose() * mu[0] + &e2 * e2.transpose() * mu[1];
    (m, xd)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn synthesis_annihilates_saddles(
        x in (-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64),
        p in 0.01..10.0f64,
        n in 0.01..10.0f64,
        angle in 0.0..3.2f64,
    ) {
        let x = Vector3::new(x.0, x.1, x.2);
        let (m, xd) = hessian_with(&x, [p, -n], angle);
        let s = synthesize_pointwise(&m, &xd, DEFAULT_KAPPA_MAX, 1e-12).unwrap();
        prop_assert!(s.trace_residual.abs() < 1e-12 * (1.0 + m.norm()));
        let (ev, _) = sorted_symmetric_eigen(&s.matrix);
        prop_assert!(ev[2] > 0.0);
        prop_assert!((ev[0] * ev[2] - 1.0).abs() < 1e-10);
        prop_assert!((ellipticity(&s.matrix) - s.lambda).abs() < 1e-10);
        let ratio = if p > n { p / n } else { n / p };
        prop_assert!((s.condition - ratio).abs() < 1e-9 * ratio);
    }

    #[test]
    fn synthesis_rejects_definite(p in 0.01..10.0f64, q in 0.01..10.0f64, sign in prop::bool::ANY) {
        let s = if sign { 1.0 } else { -1.0 };
        let (m, xd) = hessian_with(&Vector3::new(0.2, -0.4, 0.9), [s * p, s * q], 0.3);
        let err = synthesize_pointwise(&m, &xd, DEFAULT_KAPPA_MAX, 1e-12).unwrap_err();
        let infeasible = matches!(err, SynthesisError::Infeasible { .. });
        prop_assert!(infeasible);
    }
}

#[test]
fn identity_certificate_is_one() {
    let pts: Vec<_> = (0..20).map(|k| DVector::from_vec(vec![1.0, k as f64, -0.5])).collect();
    assert_eq!(certify(&IdentityField { dim: 3 }, &pts).unwrap(), 1.0);
}

#[test]
fn lo_scalar_synthesis_is_feasible_everywhere() {
    let u = profiles::lookup("lo-scalar").unwrap();
    let grid = SphereGrid::for_dimension(4, 12).unwrap();
    let r = synthesize_field(&u, &grid, DEFAULT_KAPPA_MAX, None).unwrap();
    assert!(r.infeasible.is_empty() && r.condition_exceeded.is_empty());
    assert!(r.lambda.unwrap() >= 1.0 / 6f64.sqrt() - 1e-12);
    assert!(r.max_trace_residual < 1e-12);
    let json = serde_json::to_value(r.sampled_field()).unwrap();
    assert_eq!(json["grid"]["sphere"], "s3");
    assert_eq!(json["matrices"].as_array().unwrap().len(), grid.len());
}

#[test]
fn chart_reduction_requires_three_dimensions() {
    assert!(reduce_to_chart(&InverseMetricField::default()).is_err());
}

#[test]
fn chart_reduction_of_rotated_constant_field() {
    // A constant field a: A = B^T a B restricted; compare with a direct expansion.
    let a = Matrix3::new(2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 1.5);
    struct Constant(Matrix3<f64>);
    impl rigidity_core::coefficients::CoefficientField for Constant {
        fn dim(&self) -> usize {
            3
        }
        fn matrix_at(&self, _x: &DVector<f64>) -> rigidity_core::Result<DMatrix<f64>> {
            Ok(DMatrix::from_column_slice(3, 3, self.0.as_slice()))
        }
    }
    let field = Constant(a);
    let red = reduce_to_chart(&field).unwrap();
    let p = [0.4, -0.7];
    let m = red.matrix_at(p).unwrap();
    let (x1, x2) = (p[0], p[1]);
    let a11 = a[(0, 0)] - 2.0 * x1 * a[(0, 2)] + x1 * x1 * a[(2, 2)];
    let a12 = a[(0, 1)] - x2 * a[(0, 2)] - x1 * a[(1, 2)] + x1 * x2 * a[(2, 2)];
    let a22 = a[(1, 1)] - 2.0 * x2 * a[(1, 2)] + x2 * x2 * a[(2, 2)];
    assert!((m[(0, 0)] - a11).abs() < 1e-14);
    assert!((m[(0, 1)] - a12).abs() < 1e-14);
    assert!((m[(1, 1)] - a22).abs() < 1e-14);
}
