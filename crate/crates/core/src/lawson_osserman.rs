//! The Lawson-Osserman minimal cone `R^4 -> R^3`: map, induced metric and
//! the residual of the non-divergence system with inverse-metric
//! coefficients.

use nalgebra::{DMatrix, DVector, Matrix3x4, Matrix4, SMatrix, Vector3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::HomogeneousFunction;
use crate::coefficients::{certify, CoefficientField};
use crate::error::{Error, Result};
use crate::grid::{subsample, S3Grid};
use crate::linalg::matrix_serde;
use crate::profiles;

/// Default S^3 grid resolution and sample cap.
pub const DEFAULT_GRID: usize = 32;
pub const DEFAULT_SAMPLE_CAP: usize = 10_000;

/// One-homogeneous map `f^k(x) = (M x)_k + x^T Q_k x / |x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeMap {
    pub linear: Matrix3x4<f64>,
    pub quadratic: [Matrix4<f64>; 3],
}

/// Value, Jacobian (3x4) and the three component Hessians at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeJet {
    pub value: Vector3<f64>,
    pub jacobian: Matrix3x4<f64>,
    pub hessians: [Matrix4<f64>; 3],
}

impl ConeMap {
    /// `(sqrt5 / 2) |x|^-1 (x1^2 + x2^2 - x3^2 - x4^2, 2 x1 x3 + 2 x2 x4, 2 x2 x3 - 2 x1 x4)`.
    pub fn lawson_osserman() -> Self {
        let c = 5f64.sqrt() / 2.0;
        let q1 = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, -1.0, -1.0));
        let mut q2 = Matrix4::zeros();
        q2[(0, 2)] = 1.0;
        q2[(2, 0)] = 1.0;
        q2[(1, 3)] = 1.0;
        q2[(3, 1)] = 1.0;
        let mut q3 = Matrix4::zeros();
        q3[(1, 2)] = 1.0;
        q3[(2, 1)] = 1.0;
        q3[(0, 3)] = -1.0;
        q3[(3, 0)] = -1.0;
        ConeMap {
            linear: Matrix3x4::zeros(),
            quadratic: [q1 * c, q2 * c, q3 * c],
        }
    }

    pub fn linear(m: Matrix3x4<f64>) -> Self {
        ConeMap {
            linear: m,
            quadratic: [Matrix4::zeros(); 3],
        }
    }

    /// Adds `eps x_i x_j / |x|` to component `k` (symmetrized).
    pub fn perturbed(mut self, k: usize, i: usize, j: usize, eps: f64) -> Self {
        self.quadratic[k][(i, j)] += 0.5 * eps;
        self.quadratic[k][(j, i)] += 0.5 * eps;
        self
    }

    pub fn eval(&self, x: &Vector4<f64>) -> Result<Vector3<f64>> {
        Ok(self.jet(x)?.value)
    }

    /// Exact derivatives by the quotient rule for `P(x) / r` with `P`
    /// quadratic:
    /// `d_i (P/r) = P_i/r - P x_i/r^3`,
    /// `d_ij (P/r) = P_ij/r - (P_i x_j + P_j x_i + P delta_ij)/r^3 + 3 P x_i x_j/r^5`.
    pub fn jet(&self, x: &Vector4<f64>) -> Result<ConeJet> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Origin);
        }
        let (r3, r5) = (r.powi(3), r.powi(5));
        let mut value = self.linear * x;
        let mut jacobian = self.linear;
        let mut hessians = [Matrix4::zeros(); 3];
        for k in 0..3 {
            let q = &self.quadratic[k];
            let p = x.dot(&(q * x));
            let dp = q * x * 2.0;
            value[k] += p / r;
            for i in 0..4 {
                jacobian[(k, i)] += dp[i] / r - p * x[i] / r3;
                for j in 0..4 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    hessians[k][(i, j)] = 2.0 * q[(i, j)] / r - (dp[i] * x[j] + dp[j] * x[i] + p * delta) / r3
                        + 3.0 * p * x[i] * x[j] / r5;
                }
            }
        }
        Ok(ConeJet {
            value,
            jacobian,
            hessians,
        })
    }

    /// `g = I + J^T J` and its inverse.
    pub fn induced_metric(&self, x: &Vector4<f64>) -> Result<InducedMetric> {
        let j = self.jet(x)?.jacobian;
        metric_from_jacobian(x, &j)
    }

    /// `max_k |sum_ij a_ij d_ij f^k|` at `x` with `a` the inverse induced metric.
    pub fn residual_at(&self, x: &Vector4<f64>) -> Result<f64> {
        let jet = self.jet(x)?;
        let metric = metric_from_jacobian(x, &jet.jacobian)?;
        let a = Matrix4::from_column_slice(metric.inverse.as_slice());
        Ok(jet
            .hessians
            .iter()
            .map(|h| a.component_mul(h).sum().abs())
            .fold(0.0, f64::max))
    }
}

/// The Lawson-Osserman map (operation `lo_map`).
pub fn lo_map(x: &Vector4<f64>) -> Result<Vector3<f64>> {
    ConeMap::lawson_osserman().eval(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedMetric {
    pub point: [f64; 4],
    #[serde(with = "matrix_serde")]
    pub g: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub inverse: DMatrix<f64>,
}

fn metric_from_jacobian(x: &Vector4<f64>, j: &Matrix3x4<f64>) -> Result<InducedMetric> {
    let g: SMatrix<f64, 4, 4> = Matrix4::identity() + j.transpose() * j;
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::Invalid("induced metric is not positive definite".into()))?;
    let inverse = chol.inverse();
    Ok(InducedMetric {
        point: [x[0], x[1], x[2], x[3]],
        g: DMatrix::from_column_slice(4, 4, g.as_slice()),
        inverse: DMatrix::from_column_slice(4, 4, inverse.as_slice()),
    })
}

/// Induced metric of the Lawson-Osserman cone.
pub fn induced_metric(x: &Vector4<f64>) -> Result<InducedMetric> {
    ConeMap::lawson_osserman().induced_metric(x)
}

/// `a(x) = g(x)^-1` for a cone map, as a coefficient field on `R^4`.
#[derive(Debug, Clone)]
pub struct InverseMetricField {
    pub map: ConeMap,
}

impl Default for InverseMetricField {
    fn default() -> Self {
        InverseMetricField {
            map: ConeMap::lawson_osserman(),
        }
    }
}

impl CoefficientField for InverseMetricField {
    fn dim(&self) -> usize {
        4
    }

    fn matrix_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: x.len(),
            });
        }
        let x = Vector4::from_column_slice(x.as_slice());
        Ok(self.map.induced_metric(&x)?.inverse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual_max: f64,
    pub argmax: [f64; 4],
    pub points: usize,
}

/// Largest residual of the system over the points.
pub fn minimal_residual(map: &ConeMap, points: &[Vector4<f64>]) -> Result<ResidualReport> {
    let (residual_max, argmax) = points
        .par_iter()
        .map(|x| map.residual_at(x).map(|r| (r, *x)))
        .try_reduce(|| (0.0, Vector4::zeros()), |a, b| Ok(if b.0 > a.0 { b } else { a }))?;
    Ok(ResidualReport {
        residual_max,
        argmax: argmax.into(),
        points: points.len(),
    })
}

/// Strided subset of the `n^3` grid on `S^3`, at most `cap` points.
pub fn s3_sample(n: usize, cap: usize) -> Vec<Vector4<f64>> {
    let grid = S3Grid::new(n);
    subsample(grid.len(), cap)
        .into_iter()
        .map(|idx| Vector4::from_column_slice(grid.point(idx).as_slice()))
        .collect()
}

/// `(x1^2 + x2^2 - x3^2 - x4^2) / |x|` on `R^4`.
pub fn lo_scalar_profile() -> HomogeneousFunction {
    profiles::lookup("lo-scalar").expect("bundled profile")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub nodes: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyLoReport {
    pub residual_max: f64,
    pub argmax: [f64; 4],
    pub grid: GridSummary,
    /// Ellipticity of the inverse-metric coefficients over the samples.
    pub lambda_certificate: f64,
}

/// Residual of the Lawson-Osserman system and the coefficient certificate on
/// the `n^3` grid subsampled to `cap` points.
pub fn verify_lo(n: usize, cap: usize) -> Result<VerifyLoReport> {
    if n == 0 || cap == 0 {
        return Err(Error::Invalid("grid and sample cap must be positive".into()));
    }
    let points = s3_sample(n, cap);
    let map = ConeMap::lawson_osserman();
    let residual = minimal_residual(&map, &points)?;
    let field = InverseMetricField { map };
    let dpoints: Vec<DVector<f64>> = points
        .iter()
        .map(|p| DVector::from_column_slice(p.as_slice()))
        .collect();
    let lambda_certificate = certify(&field, &dpoints)?;
    Ok(VerifyLoReport {
        residual_max: residual.residual_max,
        argmax: residual.argmax,
        grid: GridSummary {
            n,
            nodes: S3Grid::new(n).len(),
            points: points.len(),
        },
        lambda_certificate,
    })
}
