//! Elliptic coefficient fields: pointwise synthesis of saddle-annihilating
//! matrices, certification, and the chart, spherical and divergence-form
//! reductions.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, default_tau_zero, spherical_frame, tangential_projection, HomogeneousFunction};
use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::jet::Jet2;
use crate::linalg::{self, MatrixJson};

/// Default cap on the condition number of a synthesized matrix.
pub const DEFAULT_KAPPA_MAX: f64 = 1e6;

/// Symmetric matrix field on `R^n \ {0}`, extended 0-homogeneously from the
/// unit sphere.
pub trait CoefficientField: Sync {
    fn dim(&self) -> usize;
    fn matrix_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityField {
    pub dim: usize,
}

impl CoefficientField for IdentityField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn matrix_at(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim))
    }
}

/// Largest `lambda` with `lambda I <= A(x) <= lambda^-1 I` over the points.
pub fn certify(field: &dyn CoefficientField, points: &[DVector<f64>]) -> Result<f64> {
    points
        .par_iter()
        .map(|x| field.matrix_at(x).map(|a| linalg::ellipticity(&a)))
        .try_reduce(|| 1.0, |a, b| Ok(a.min(b)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub matrix: DMatrix<f64>,
    /// `1 / sqrt(cond(A))`, equal to `min eig A = 1 / max eig A`.
    pub lambda: f64,
    pub condition: f64,
    /// `tr(A M)`.
    pub trace_residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("no elliptic annihilator: tangential Hessian is semidefinite and nonzero ({tangential_eigenvalues:?})")]
    Infeasible { tangential_eigenvalues: Vec<f64> },
    #[error("annihilator needs condition number {condition:.3e}, above the cap")]
    ConditionExceeded { condition: f64 },
}

/// Builds a symmetric positive-definite `A` with `tr(A M) = 0` for a Hessian
/// `M` with radial kernel at the direction `x`.
///
/// `A` is diagonal in the eigenbasis of the tangential part of `M` plus the
/// radial direction. The sign group with the smaller eigenvalue sum is
/// weighted up until the trace balances; every other direction keeps weight
/// one. The result is scaled so that `min eig * max eig = 1`.
pub fn synthesize_pointwise(
    m: &DMatrix<f64>,
    x: &DVector<f64>,
    kappa_max: f64,
    tau_zero: f64,
) -> std::result::Result<Synthesis, SynthesisError> {
    let n = m.nrows();
    let x = x.normalize();
    let (t, q) = tangential_projection(m, &x);
    let (mu, w) = linalg::sorted_symmetric_eigen(&t);
    let vectors = q * w;

    let pos: f64 = mu.iter().filter(|&&l| l > tau_zero).sum();
    let neg: f64 = -mu.iter().filter(|&&l| l < -tau_zero).sum::<f64>();
    let radial = (x.transpose() * m * &x)[(0, 0)];
    let free: f64 = mu.iter().filter(|&&l| l.abs() <= tau_zero).sum::<f64>() + radial;

    if pos == 0.0 && neg == 0.0 {
        return Ok(Synthesis {
            matrix: DMatrix::identity(n, n),
            lambda: 1.0,
            condition: 1.0,
            trace_residual: m.trace(),
        });
    }
    if pos == 0.0 || neg == 0.0 {
        return Err(SynthesisError::Infeasible {
            tangential_eigenvalues: mu,
        });
    }
    // Weights a (positive group) and b (negative group) solve
    // a pos - b neg + free = 0 with the smaller group scaled up.
    let (a, b) = if pos < neg {
        ((neg - free) / pos, 1.0)
    } else {
        (1.0, (pos + free) / neg)
    };
    let hi = a.max(b).max(1.0);
    let lo = a.min(b).min(1.0);
    let condition = hi / lo;
    if condition > kappa_max {
        return Err(SynthesisError::ConditionExceeded { condition });
    }
    let scale = 1.0 / (hi * lo).sqrt();
    let mut matrix = &x * x.transpose();
    for (k, &l) in mu.iter().enumerate() {
        let weight = if l > tau_zero {
            a
        } else if l < -tau_zero {
            b
        } else {
            1.0
        };
        let v = vectors.column(k);
        matrix += v * v.transpose() * weight;
    }
    matrix *= scale;
    let trace_residual = (&matrix * m).trace();
    Ok(Synthesis {
        matrix,
        lambda: 1.0 / condition.sqrt(),
        condition,
        trace_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisStatus {
    Ok,
    Infeasible,
    ConditionExceeded,
}

impl SynthesisStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SynthesisStatus::Ok => "ok",
            SynthesisStatus::Infeasible => "infeasible",
            SynthesisStatus::ConditionExceeded => "condition_exceeded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSynthesis {
    pub index: usize,
    pub coords: Vec<f64>,
    pub status: SynthesisStatus,
    pub lambda: Option<f64>,
    pub condition: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub profile: String,
    pub dim: usize,
    pub grid: SphereGrid,
    pub tau_zero: f64,
    pub kappa_max: f64,
    /// Global certificate: minimum pointwise `lambda` over synthesized points.
    pub lambda: Option<f64>,
    pub infeasible: Vec<usize>,
    pub condition_exceeded: Vec<usize>,
    /// `max |tr(A(x) D^2u(x))|` over synthesized points.
    pub max_trace_residual: f64,
    #[serde(skip)]
    pub points: Vec<PointSynthesis>,
    #[serde(skip)]
    pub matrices: Vec<Option<DMatrix<f64>>>,
}

impl SynthesisReport {
    pub fn feasible_count(&self) -> usize {
        self.points.len() - self.infeasible.len() - self.condition_exceeded.len()
    }

    /// Feasibility map as CSV: angular coordinates, pointwise lambda, status.
    pub fn feasibility_csv(&self) -> String {
        let mut out = self.grid.coord_names().join(",");
        out.push_str(",lambda_pointwise,status\n");
        for p in &self.points {
            for c in &p.coords {
                out.push_str(&format!("{c},"));
            }
            match p.lambda {
                Some(l) => out.push_str(&format!("{l},")),
                None => out.push(','),
            }
            out.push_str(p.status.as_str());
            out.push('\n');
        }
        out
    }

    /// The synthesized matrices as a serializable sampled field.
    pub fn sampled_field(&self) -> SampledCoefficientField {
        SampledCoefficientField {
            dim: self.dim,
            grid: self.grid,
            lambda: self.lambda,
            matrices: self.matrices.iter().map(|m| m.as_ref().map(MatrixJson::from)).collect(),
        }
    }
}

/// Coefficient field sampled on a grid (JSON wire format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCoefficientField {
    pub dim: usize,
    pub grid: SphereGrid,
    pub lambda: Option<f64>,
    /// One matrix per grid node; `null` where synthesis failed.
    pub matrices: Vec<Option<MatrixJson>>,
}

/// Runs [`synthesize_pointwise`] at every grid node. `tau_zero = None` uses
/// [`default_tau_zero`] scaled by the largest Hessian norm on the grid.
pub fn synthesize_field(
    u: &HomogeneousFunction,
    grid: &SphereGrid,
    kappa_max: f64,
    tau_zero: Option<f64>,
) -> Result<SynthesisReport> {
    if grid.dim() != u.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            got: grid.dim(),
        });
    }
    let hessians: Vec<(DVector<f64>, DMatrix<f64>)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            u.derivatives(x.as_slice()).map(|d| (x, d.hessian))
        })
        .collect::<Result<_>>()?;
    let tau = tau_zero.unwrap_or_else(|| {
        let scale = hessians.iter().map(|(_, m)| linalg::frobenius(m)).fold(0.0, f64::max);
        default_tau_zero(scale)
    });
    let outcomes: Vec<_> = hessians
        .par_iter()
        .map(|(x, m)| synthesize_pointwise(m, x, kappa_max, tau))
        .collect();

    let mut report = SynthesisReport {
        profile: u.name().to_string(),
        dim: u.dim(),
        grid: *grid,
        tau_zero: tau,
        kappa_max,
        lambda: None,
        infeasible: Vec::new(),
        condition_exceeded: Vec::new(),
        max_trace_residual: 0.0,
        points: Vec::with_capacity(grid.len()),
        matrices: Vec::with_capacity(grid.len()),
    };
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        let coords = grid.coords(idx);
        match outcome {
            Ok(s) => {
                report.lambda = Some(report.lambda.map_or(s.lambda, |l: f64| l.min(s.lambda)));
                report.max_trace_residual = report.max_trace_residual.max(s.trace_residual.abs());
                report.points.push(PointSynthesis {
                    index: idx,
                    coords,
                    status: SynthesisStatus::Ok,
                    lambda: Some(s.lambda),
                    condition: Some(s.condition),
                });
                report.matrices.push(Some(s.matrix));
            }
            Err(SynthesisError::Infeasible { .. }) => {
                report.infeasible.push(idx);
                report.points.push(PointSynthesis {
                    index: idx,
                    coords,
                    status: SynthesisStatus::Infeasible,
                    lambda: None,
                    condition: None,
                });
                report.matrices.push(None);
            }
            Err(SynthesisError::ConditionExceeded { condition }) => {
                report.condition_exceeded.push(idx);
                report.points.push(PointSynthesis {
                    index: idx,
                    coords,
                    status: SynthesisStatus::ConditionExceeded,
                    lambda: None,
                    condition: Some(condition),
                });
                report.matrices.push(None);
            }
        }
    }
    Ok(report)
}

/// Pointwise synthesized field for `u`, evaluated on demand.
#[derive(Debug, Clone)]
pub struct SynthesizedField {
    pub u: HomogeneousFunction,
    pub kappa_max: f64,
    pub tau_zero: f64,
}

impl CoefficientField for SynthesizedField {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn matrix_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let x = x.normalize();
        let d = self.u.derivatives(x.as_slice())?;
        synthesize_pointwise(&d.hessian, &x, self.kappa_max, self.tau_zero)
            .map(|s| s.matrix)
            .map_err(|e| Error::FieldUndefined(e.to_string()))
    }
}

/// The 2D chart operator `sum A_ij D_ij h` on the plane `x3 = 1`.
pub struct ReducedChartCoefficients<'a> {
    field: &'a dyn CoefficientField,
}

/// `A(x1, x2)` is the upper-left 2x2 block of `B^T a(x1, x2, 1) B`, with `B`
/// the chart factor of the Hessian, so that
/// `sum a_ij D_ij u = sum A_ij h_ij`.
pub fn reduce_to_chart(a: &dyn CoefficientField) -> Result<ReducedChartCoefficients<'_>> {
    if a.dim() != 3 {
        return Err(Error::RequiresDimension3(a.dim()));
    }
    Ok(ReducedChartCoefficients { field: a })
}

impl ReducedChartCoefficients<'_> {
    pub fn matrix_at(&self, p: [f64; 2]) -> Result<Matrix2<f64>> {
        let x = DVector::from_vec(vec![p[0], p[1], 1.0]);
        let a = self.field.matrix_at(&x)?;
        let b = DMatrix::from_column_slice(3, 3, calculus::chart_factor(p).as_slice());
        let full = b.transpose() * a * b;
        Ok(Matrix2::new(full[(0, 0)], full[(0, 1)], full[(1, 0)], full[(1, 1)]))
    }

    /// Local ellipticity `lambda(x1, x2)` of the reduced matrix.
    pub fn ellipticity_at(&self, p: [f64; 2]) -> Result<f64> {
        let m = self.matrix_at(p)?;
        Ok(linalg::ellipticity(&DMatrix::from_column_slice(2, 2, m.as_slice())))
    }

    /// `sum A_ij h_ij` for a chart Hessian.
    pub fn apply(&self, p: [f64; 2], h_hessian: &Matrix2<f64>) -> Result<f64> {
        Ok(self.matrix_at(p)?.component_mul(h_hessian).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoefficients {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: f64,
}

impl SphericalCoefficients {
    /// `sum A_ij g_ij + sum B_i g_i + C g`.
    pub fn apply(&self, g: &Jet2<2>) -> f64 {
        let mut out = self.c * g.v;
        for i in 0..2 {
            out += self.b[i] * g.g[i];
            for j in 0..2 {
                out += self.a[(i, j)] * g.h[i][j];
            }
        }
        out
    }
}

/// The equation `tr(a D^2(r g)) = 0` written on the spherical profile `g`.
pub struct SphericalOperator<'a> {
    field: &'a dyn CoefficientField,
    pole_margin: f64,
}

pub fn reduce_to_sphere(a: &dyn CoefficientField) -> Result<SphericalOperator<'_>> {
    if a.dim() != 3 {
        return Err(Error::RequiresDimension3(a.dim()));
    }
    Ok(SphericalOperator {
        field: a,
        pole_margin: calculus::DEFAULT_POLE_MARGIN,
    })
}

/// Spherical coefficients from the tangential block `(t22, t23, t33)` of
/// `R^T a R` at latitude `theta2`.
pub fn spherical_coefficients_from_block(t22: f64, t23: f64, t33: f64, theta2: f64) -> SphericalCoefficients {
    let (s, c) = theta2.sin_cos();
    SphericalCoefficients {
        a: Matrix2::new(t22 / (c * c), t23 / c, t23 / c, t33),
        b: Vector2::new(2.0 * t23 * s / (c * c), -t22 * s / c),
        c: t22 + t33,
    }
}

impl SphericalOperator<'_> {
    pub fn with_pole_margin(mut self, margin: f64) -> Self {
        self.pole_margin = margin;
        self
    }

    pub fn coefficients_at(&self, theta: [f64; 2]) -> Result<SphericalCoefficients> {
        let distance = std::f64::consts::FRAC_PI_2 - theta[1].abs();
        if distance < self.pole_margin {
            return Err(Error::PoleProximity {
                distance,
                limit: self.pole_margin,
            });
        }
        let frame = spherical_frame(theta);
        let x = DVector::from_column_slice(frame.column(0).as_slice());
        let a = self.field.matrix_at(&x)?;
        let r = DMatrix::from_column_slice(3, 3, frame.as_slice());
        let t = r.transpose() * a * r;
        Ok(spherical_coefficients_from_block(
            t[(1, 1)],
            0.5 * (t[(1, 2)] + t[(2, 1)]),
            t[(2, 2)],
            theta[1],
        ))
    }

    /// Operator applied to the spherical profile of `u` at `theta`.
    pub fn residual(&self, u: &HomogeneousFunction, theta: [f64; 2]) -> Result<f64> {
        let g = u.spherical_jet(theta, self.pole_margin)?;
        Ok(self.coefficients_at(theta)?.apply(&g))
    }
}

/// Divergence-form coefficients for the derivative `h_1` of a chart solution:
/// `B11 = A11/A22`, `B12 = 2 A12/A22`, `B21 = 0`, `B22 = 1`.
pub fn divergence_coefficients(a: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let a22 = a[(1, 1)];
    if a22.is_nan() || a22 <= 1e-300 {
        return Err(Error::DegenerateA22(a22));
    }
    Ok(Matrix2::new(a[(0, 0)] / a22, 2.0 * a[(0, 1)] / a22, 0.0, 1.0))
}

/// Tensor-product squared-cosine bump
/// `phi(y) = prod_k cos^2(pi (y_k - c_k) / (2 radius))` on the square of
/// half-width `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, y: [f64; 2]) -> f64 {
        let k = std::f64::consts::PI / (2.0 * self.radius);
        (0..2)
            .map(|i| {
                let s = y[i] - self.center[i];
                if s.abs() >= self.radius {
                    0.0
                } else {
                    (k * s).cos().powi(2)
                }
            })
            .product()
    }

    pub fn gradient(&self, y: [f64; 2]) -> Vector2<f64> {
        let k = std::f64::consts::PI / (2.0 * self.radius);
        let mut f = [0.0; 2];
        let mut df = [0.0; 2];
        for i in 0..2 {
            let s = y[i] - self.center[i];
            if s.abs() < self.radius {
                f[i] = (k * s).cos().powi(2);
                df[i] = -k * (2.0 * k * s).sin();
            }
        }
        Vector2::new(df[0] * f[1], f[0] * df[1])
    }
}

/// `per_axis^2` translated bumps of the given radius filling `[lo, hi]^2`.
pub fn bump_family(per_axis: usize, radius: f64, lo: f64, hi: f64) -> Vec<Bump> {
    let centers: Vec<f64> = if per_axis == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        let a = lo + radius;
        let b = hi - radius;
        (0..per_axis)
            .map(|k| a + (b - a) * k as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let mut out = Vec::with_capacity(per_axis * per_axis);
    for &cy in &centers {
        for &cx in &centers {
            out.push(Bump {
                center: [cx, cy],
                radius,
            });
        }
    }
    out
}

/// The default test family: 9 bumps of radius 0.2 on `[-0.5, 0.5]^2`.
pub fn default_bumps() -> Vec<Bump> {
    bump_family(3, 0.2, -0.5, 0.5)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule per axis over each bump's support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub panels: usize,
    pub points_per_panel: usize,
}

impl Default for Quadrature {
    /// 16 points per axis per bump.
    fn default() -> Self {
        Quadrature {
            panels: 2,
            points_per_panel: 8,
        }
    }
}

impl Quadrature {
    /// Nodes and weights on `[a, b]`.
    pub fn rule(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (z, w) = gauss_legendre(self.points_per_panel);
        let width = (b - a) / self.panels as f64;
        let mut out = Vec::with_capacity(self.panels * self.points_per_panel);
        for p in 0..self.panels {
            let lo = a + p as f64 * width;
            for (zk, wk) in z.iter().zip(&w) {
                out.push((lo + 0.5 * width * (zk + 1.0), 0.5 * width * wk));
            }
        }
        out
    }
}

/// `max_phi |int (B grad w) . grad phi|` over the bump family.
pub fn weak_residual<FB, FW>(b: FB, grad_w: FW, bumps: &[Bump], quad: Quadrature) -> Result<f64>
where
    FB: Fn([f64; 2]) -> Result<Matrix2<f64>> + Sync,
    FW: Fn([f64; 2]) -> Result<Vector2<f64>> + Sync,
{
    bumps
        .par_iter()
        .map(|bump| {
            let rx = quad.rule(bump.center[0] - bump.radius, bump.center[0] + bump.radius);
            let ry = quad.rule(bump.center[1] - bump.radius, bump.center[1] + bump.radius);
            let mut total = 0.0;
            for &(y2, w2) in &ry {
                for &(y1, w1) in &rx {
                    let y = [y1, y2];
                    let flux = b(y)? * grad_w(y)?;
                    total += w1 * w2 * flux.dot(&bump.gradient(y));
                }
            }
            Ok(total.abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}
