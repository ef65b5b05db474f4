//! Homogeneous functions and their derivatives.
//!
//! A homogeneous function `u` of order `alpha` is stored through a
//! [`Profile`]: an ambient expression, a projective chart `h` on the plane
//! `x_n = +-1`, or (for `n = 3`) a spherical profile `g(theta1, theta2)` with
//! `u = r^alpha g`. All exact derivatives come from jets; the
//! finite-difference routines only ever evaluate values.
//!
//! Spherical coordinates: `x1 = r cos(theta2) cos(theta1)`,
//! `x2 = r cos(theta2) sin(theta1)`, `x3 = r sin(theta2)`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet2, Jet3, Real};
use crate::linalg::{self, matrix_serde, vector_serde};

/// Default angular margin kept from the poles by the spherical chart.
pub const DEFAULT_POLE_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileForm {
    /// `u(x)` written directly in ambient coordinates (already homogeneous).
    Ambient(Expr),
    /// `h` on the plane `x_n = 1` and optionally on `x_n = -1`, in the first
    /// `n - 1` coordinates.
    Chart { upper: Expr, lower: Option<Expr> },
    /// `g(theta1, theta2)` on the unit sphere, `n = 3` only.
    Spherical(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub dim: usize,
    pub formula: String,
    pub citation: String,
    pub form: ProfileForm,
}

impl Profile {
    pub fn ambient(name: &str, dim: usize, formula: &str, expr: Expr) -> Self {
        Profile {
            name: name.to_string(),
            dim,
            formula: formula.to_string(),
            citation: String::new(),
            form: ProfileForm::Ambient(expr),
        }
    }

    pub fn chart(name: &str, dim: usize, formula: &str, upper: Expr, lower: Option<Expr>) -> Self {
        Profile {
            name: name.to_string(),
            dim,
            formula: formula.to_string(),
            citation: String::new(),
            form: ProfileForm::Chart { upper, lower },
        }
    }

    pub fn spherical(name: &str, formula: &str, g: Expr) -> Self {
        Profile {
            name: name.to_string(),
            dim: 3,
            formula: formula.to_string(),
            citation: String::new(),
            form: ProfileForm::Spherical(g),
        }
    }

    pub fn cite(mut self, citation: &str) -> Self {
        self.citation = citation.to_string();
        self
    }
}

/// Exact value, gradient and Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct HomogeneousFunction {
    profile: Arc<Profile>,
    order: f64,
}

impl HomogeneousFunction {
    pub fn new(profile: Profile) -> Self {
        Self::with_order(profile, 1.0)
    }

    pub fn with_order(profile: Profile, order: f64) -> Self {
        HomogeneousFunction {
            profile: Arc::new(profile),
            order,
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn name(&self) -> &str {
        &self.profile.name
    }

    pub fn dim(&self) -> usize {
        self.profile.dim
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    fn require_order_one(&self) -> Result<()> {
        if (self.order - 1.0).abs() > 1e-15 {
            return Err(Error::NotOrderOne(self.order));
        }
        Ok(())
    }

    fn require_dim3(&self) -> Result<()> {
        if self.dim() != 3 {
            return Err(Error::RequiresDimension3(self.dim()));
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::Origin);
        }
        Ok(())
    }

    fn eval_real<T: Real>(&self, x: &[T]) -> Result<T> {
        let n = x.len();
        match &self.profile.form {
            ProfileForm::Ambient(e) => Ok(e.eval(x)),
            ProfileForm::Chart { upper, lower } => {
                let last = x[n - 1];
                let norm = x.iter().map(|v| v.value() * v.value()).sum::<f64>().sqrt();
                let pole = Error::ChartPole { coordinate: n };
                let (t, expr) = if last.value().abs() <= 1e-14 * norm {
                    return Err(pole);
                } else if last.value() > 0.0 {
                    (last, upper)
                } else {
                    (-last, lower.as_ref().ok_or(pole)?)
                };
                let y: Vec<T> = x[..n - 1].iter().map(|&xi| xi / t).collect();
                Ok(t.powf(self.order) * expr.eval(&y))
            }
            ProfileForm::Spherical(g) => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let theta1 = x[1].atan2(x[0]);
                let theta2 = x[2].atan2(rho);
                Ok(r2.sqrt().powf(self.order) * g.eval(&[theta1, theta2]))
            }
        }
    }

    /// Rejects derivative evaluation of a spherical-only profile near a pole.
    fn check_spherical_pole(&self, x: &[f64], margin: f64) -> Result<()> {
        if let ProfileForm::Spherical(_) = self.profile.form {
            let theta2 = x[2].atan2(x[0].hypot(x[1]));
            let distance = FRAC_PI_2 - theta2.abs();
            if distance < margin {
                return Err(Error::PoleProximity {
                    distance,
                    limit: margin,
                });
            }
        }
        Ok(())
    }

    /// `u(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.eval_real(x)
    }

    /// Exact value, gradient and Hessian at `x`.
    pub fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        self.check_point(x)?;
        self.check_spherical_pole(x, DEFAULT_POLE_MARGIN)?;
        match self.dim() {
            2 => self.derivatives_n::<2>(x),
            3 => self.derivatives_n::<3>(x),
            4 => self.derivatives_n::<4>(x),
            d => Err(Error::Invalid(format!("unsupported dimension {d}"))),
        }
    }

    fn derivatives_n<const N: usize>(&self, x: &[f64]) -> Result<Derivatives> {
        let p: [f64; N] = x.try_into().expect("dimension checked");
        let j = self.eval_real(&Jet2::<N>::seed(&p))?;
        Ok(Derivatives {
            value: j.v,
            gradient: DVector::from_row_slice(&j.g),
            hessian: DMatrix::from_fn(N, N, |a, b| j.h[a][b]),
        })
    }

    /// Exact third derivatives: entry `k` of the result is the matrix
    /// `(d_k d_i d_j u)_{ij}`.
    pub fn third_derivatives(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(x)?;
        self.check_spherical_pole(x, DEFAULT_POLE_MARGIN)?;
        match self.dim() {
            3 => self.third_n::<3>(x),
            4 => self.third_n::<4>(x),
            d => Err(Error::Invalid(format!("unsupported dimension {d}"))),
        }
    }

    fn third_n<const N: usize>(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let p: [f64; N] = x.try_into().expect("dimension checked");
        let j = self.eval_real(&Jet3::<N>::seed(&p))?;
        Ok((0..N).map(|k| DMatrix::from_fn(N, N, |a, b| j.t[k][a][b])).collect())
    }

    /// Jet of the chart profile `h(p) = u(p1, p2, 1)`.
    pub fn chart_jet(&self, p: [f64; 2]) -> Result<Jet2<2>> {
        self.require_dim3()?;
        let [a, b] = Jet2::<2>::seed(&p);
        self.eval_real(&[a, b, Jet2::constant(1.0)])
    }

    /// Third-order jet of the chart profile.
    pub fn chart_jet3(&self, p: [f64; 2]) -> Result<Jet3<2>> {
        self.require_dim3()?;
        let [a, b] = Jet3::<2>::seed(&p);
        self.eval_real(&[a, b, Jet3::constant(1.0)])
    }

    /// Jet of the spherical profile `g(theta) = u(x(theta))` on the unit sphere.
    pub fn spherical_jet(&self, theta: [f64; 2], pole_margin: f64) -> Result<Jet2<2>> {
        self.require_dim3()?;
        let distance = FRAC_PI_2 - theta[1].abs();
        if distance < pole_margin {
            return Err(Error::PoleProximity {
                distance,
                limit: pole_margin,
            });
        }
        let [t1, t2] = Jet2::<2>::seed(&theta);
        match &self.profile.form {
            ProfileForm::Spherical(g) => Ok(g.eval(&[t1, t2])),
            _ => {
                let x = [t2.cos() * t1.cos(), t2.cos() * t1.sin(), t2.sin()];
                self.eval_real(&x)
            }
        }
    }

    /// Third-order jet of the spherical profile.
    pub fn spherical_jet3(&self, theta: [f64; 2]) -> Result<Jet3<2>> {
        self.require_dim3()?;
        let [t1, t2] = Jet3::<2>::seed(&theta);
        match &self.profile.form {
            ProfileForm::Spherical(g) => Ok(g.eval(&[t1, t2])),
            _ => {
                let x = [t2.cos() * t1.cos(), t2.cos() * t1.sin(), t2.sin()];
                self.eval_real(&x)
            }
        }
    }

    /// Spherical profile value only (no pole check).
    pub fn spherical_value(&self, theta: [f64; 2]) -> Result<f64> {
        self.require_dim3()?;
        match &self.profile.form {
            ProfileForm::Spherical(g) => Ok(g.eval(&theta)),
            _ => self.eval_real(spherical_point(theta).as_slice()),
        }
    }
}

/// Unit vector with spherical angles `theta`.
pub fn spherical_point(theta: [f64; 2]) -> Vector3<f64> {
    let (s1, c1) = theta[0].sin_cos();
    let (s2, c2) = theta[1].sin_cos();
    Vector3::new(c2 * c1, c2 * s1, s2)
}

/// Angles `(theta1, theta2)` of a nonzero vector.
pub fn spherical_angles(x: &Vector3<f64>) -> [f64; 2] {
    [x.y.atan2(x.x), x.z.atan2(x.x.hypot(x.y))]
}

/// Orthonormal frame with columns `(e_r, e_theta1, e_theta2)`.
pub fn spherical_frame(theta: [f64; 2]) -> Matrix3<f64> {
    let (s1, c1) = theta[0].sin_cos();
    let (s2, c2) = theta[1].sin_cos();
    Matrix3::new(
        c2 * c1,
        -s1,
        -s2 * c1, //
        c2 * s1,
        c1,
        -s2 * s1, //
        s2,
        0.0,
        c2,
    )
}

/// Tangential block `(H22, H23, H33)` of the Hessian of `u = r g` at `r = 1`
/// in the orthonormal frame `(e_theta1, e_theta2)`.
pub fn spherical_tangential_block(g: &Jet2<2>, theta2: f64) -> (f64, f64, f64) {
    let (s, c) = theta2.sin_cos();
    let t = s / c;
    let h22 = g.h[0][0] / (c * c) - t * g.g[1] + g.v;
    let h23 = (g.h[0][1] + t * g.g[0]) / c;
    let h33 = g.h[1][1] + g.v;
    (h22, h23, h33)
}

/// `u(x)` (operation `eval`).
pub fn eval(u: &HomogeneousFunction, x: &[f64]) -> Result<f64> {
    u.eval(x)
}

/// `grad u(x1, x2, 1) = (h1, h2, h - x1 h1 - x2 h2)`.
pub fn gradient_chart(u: &HomogeneousFunction, p: [f64; 2]) -> Result<Vector3<f64>> {
    u.require_order_one()?;
    let h = u.chart_jet(p)?;
    Ok(Vector3::new(h.g[0], h.g[1], h.v - p[0] * h.g[0] - p[1] * h.g[1]))
}

/// The lower-triangular factor `B` with `D^2u(x1, x2, 1) = B H_h B^T`.
pub fn chart_factor(p: [f64; 2]) -> Matrix3<f64> {
    Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        -p[0], -p[1], 1.0,
    )
}

/// `D^2u(x1, x2, 1)` from the chart Hessian of `h`.
pub fn hessian_chart(u: &HomogeneousFunction, p: [f64; 2]) -> Result<Matrix3<f64>> {
    u.require_order_one()?;
    let h = u.chart_jet(p)?;
    let hh = Matrix3::new(
        h.h[0][0], h.h[0][1], 0.0, //
        h.h[1][0], h.h[1][1], 0.0, //
        0.0, 0.0, 0.0,
    );
    let b = chart_factor(p);
    Ok(b * hh * b.transpose())
}

/// `D^2u` at the unit vector with angles `theta`, assembled as `R H R^T`.
pub fn hessian_spherical(u: &HomogeneousFunction, theta: [f64; 2], pole_margin: f64) -> Result<Matrix3<f64>> {
    u.require_order_one()?;
    let g = u.spherical_jet(theta, pole_margin)?;
    let (h22, h23, h33) = spherical_tangential_block(&g, theta[1]);
    let h = Matrix3::new(
        0.0, 0.0, 0.0, //
        0.0, h22, h23, //
        0.0, h23, h33,
    );
    let r = spherical_frame(theta);
    Ok(r * h * r.transpose())
}

/// Central-difference derivative of the requested order.
#[derive(Debug, Clone, PartialEq)]
pub enum FdDerivative {
    Gradient(DVector<f64>),
    Hessian(DMatrix<f64>),
}

fn check_step(x: &[f64], step: f64) -> Result<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if step.is_nan() || step <= 0.0 || norm <= 2.0 * step {
        return Err(Error::StepTooLarge { step, norm });
    }
    Ok(norm)
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

/// Central differences of order 1 (gradient) or 2 (Hessian); truncation error
/// is `O(step^2)`.
pub fn fd_derivatives(u: &HomogeneousFunction, x: &[f64], order: usize, step: f64) -> Result<FdDerivative> {
    match order {
        1 => fd_gradient(u, x, step).map(FdDerivative::Gradient),
        2 => fd_hessian(u, x, step).map(FdDerivative::Hessian),
        _ => Err(Error::Invalid(format!(
            "finite-difference order {order} not in {{1, 2}}"
        ))),
    }
}

pub fn fd_gradient(u: &HomogeneousFunction, x: &[f64], step: f64) -> Result<DVector<f64>> {
    check_step(x, step)?;
    let n = x.len();
    let mut g = DVector::zeros(n);
    for i in 0..n {
        let up = u.eval(&shifted(x, &[(i, step)]))?;
        let down = u.eval(&shifted(x, &[(i, -step)]))?;
        g[i] = (up - down) / (2.0 * step);
    }
    Ok(g)
}

pub fn fd_hessian(u: &HomogeneousFunction, x: &[f64], step: f64) -> Result<DMatrix<f64>> {
    check_step(x, step)?;
    let n = x.len();
    let h = step;
    let centre = u.eval(x)?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let up = u.eval(&shifted(x, &[(i, h)]))?;
        let down = u.eval(&shifted(x, &[(i, -h)]))?;
        m[(i, i)] = (up - 2.0 * centre + down) / (h * h);
        for j in (i + 1)..n {
            let pp = u.eval(&shifted(x, &[(i, h), (j, h)]))?;
            let pm = u.eval(&shifted(x, &[(i, h), (j, -h)]))?;
            let mp = u.eval(&shifted(x, &[(i, -h), (j, h)]))?;
            let mm = u.eval(&shifted(x, &[(i, -h), (j, -h)]))?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Third derivatives by central differences of the finite-difference Hessian;
/// entry `k` is `(d_k d_i d_j u)_{ij}`.
pub fn fd_third(u: &HomogeneousFunction, x: &[f64], step: f64) -> Result<Vec<DMatrix<f64>>> {
    check_step(x, 2.0 * step)?;
    (0..x.len())
        .map(|k| {
            let up = fd_hessian(u, &shifted(x, &[(k, step)]), step)?;
            let down = fd_hessian(u, &shifted(x, &[(k, -step)]), step)?;
            Ok((up - down) / (2.0 * step))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianClass {
    Zero,
    Saddle,
    SemidefiniteNonzero,
    Definite,
}

impl HessianClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            HessianClass::Zero => "zero",
            HessianClass::Saddle => "saddle",
            HessianClass::SemidefiniteNonzero => "semidefinite_nonzero",
            HessianClass::Definite => "definite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianSample {
    pub dim: usize,
    #[serde(with = "vector_serde")]
    pub direction: DVector<f64>,
    #[serde(with = "matrix_serde")]
    pub hessian: DMatrix<f64>,
    /// Eigenvalues of the tangential projection, descending.
    pub tangential_eigenvalues: Vec<f64>,
    pub class: HessianClass,
    pub frobenius: f64,
}

impl HessianSample {
    pub fn tangential_product(&self) -> f64 {
        self.tangential_eigenvalues.iter().product()
    }
}

/// `tau_zero = 1e-8 (1 + scale)` where `scale` is the largest Hessian
/// Frobenius norm seen on the sample grid.
pub fn default_tau_zero(frobenius_scale: f64) -> f64 {
    1e-8 * (1.0 + frobenius_scale)
}

/// Tangential projection `Q^T M Q` of `m` at the unit direction `x`, and the
/// basis `Q`.
pub fn tangential_projection(m: &DMatrix<f64>, x: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = linalg::tangent_basis(x);
    let t = q.transpose() * m * &q;
    (t, q)
}

/// Classifies a symmetric Hessian at the direction `x` (normalized here).
pub fn classify_hessian(m: &DMatrix<f64>, x: &DVector<f64>, tau_zero: f64) -> HessianSample {
    let x = x.normalize();
    let frobenius = linalg::frobenius(m);
    let (t, _) = tangential_projection(m, &x);
    let (eigenvalues, _) = linalg::sorted_symmetric_eigen(&t);
    let class = if frobenius < tau_zero {
        HessianClass::Zero
    } else {
        let pos = eigenvalues.iter().filter(|&&l| l > tau_zero).count();
        let neg = eigenvalues.iter().filter(|&&l| l < -tau_zero).count();
        if pos > 0 && neg > 0 {
            HessianClass::Saddle
        } else if pos == eigenvalues.len() || neg == eigenvalues.len() {
            HessianClass::Definite
        } else {
            HessianClass::SemidefiniteNonzero
        }
    };
    HessianSample {
        dim: m.nrows(),
        direction: x,
        hessian: m.clone(),
        tangential_eigenvalues: eigenvalues,
        class,
        frobenius,
    }
}

/// Exact Hessian of `u` at the direction `x`, classified.
pub fn hessian_sample(u: &HomogeneousFunction, x: &DVector<f64>, tau_zero: f64) -> Result<HessianSample> {
    let d = u.derivatives(x.as_slice())?;
    Ok(classify_hessian(&d.hessian, x, tau_zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles;

    fn lookup(name: &str) -> HomogeneousFunction {
        profiles::lookup(name).unwrap()
    }

    #[test]
    fn eval_examples() {
        let x3 = HomogeneousFunction::new(Profile::chart("h1", 3, "x3", Expr::c(1.0), Some(Expr::c(-1.0))));
        assert_eq!(eval(&x3, &[0.0, 0.0, 2.0]).unwrap(), 2.0);
        let q = lookup("q2-over-r");
        assert!((eval(&q, &[3.0, 4.0, 0.0]).unwrap() + 7.0 / 5.0).abs() < 1e-15);
        let f1 = lookup("lo-f1");
        assert!((eval(&f1, &[1.0, 0.0, 0.0, 0.0]).unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_chart_rejects_equator_and_lower_half() {
        let u = lookup("chart:x1sq");
        assert_eq!(eval(&u, &[1.0, 0.0, 0.0]), Err(Error::ChartPole { coordinate: 3 }));
        assert!(matches!(eval(&u, &[1.0, 0.0, -1.0]), Err(Error::ChartPole { .. })));
        assert!(matches!(eval(&u, &[0.0, 0.0, 0.0]), Err(Error::Origin)));
    }

    #[test]
    fn gradient_chart_examples() {
        let one = lookup("chart:x3");
        assert_eq!(gradient_chart(&one, [0.3, -2.0]).unwrap(), Vector3::new(0.0, 0.0, 1.0));
        let x1 = lookup("linear:x1");
        let g = gradient_chart(&x1, [5.0, 1.0]).unwrap();
        assert!((g - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        let sq = lookup("chart:x1sq");
        let g = gradient_chart(&sq, [3.0, 2.0]).unwrap();
        assert!((g - Vector3::new(6.0, 0.0, -9.0)).norm() < 1e-13);
    }

    #[test]
    fn hessian_chart_examples() {
        let lin = lookup("linear:mix");
        assert!(hessian_chart(&lin, [0.4, 0.9]).unwrap().norm() < 1e-14);
        let x1x2 = lookup("chart:x1x2");
        let m = hessian_chart(&x1x2, [0.0, 0.0]).unwrap();
        let expected = Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!((m - expected).norm() < 1e-15);
        let sq = lookup("chart:x1sq");
        let m = hessian_chart(&sq, [1.0, 0.0]).unwrap();
        let expected = Matrix3::new(2.0, 0.0, -2.0, 0.0, 0.0, 0.0, -2.0, 0.0, 2.0);
        assert!((m - expected).norm() < 1e-14);
    }

    #[test]
    fn hessian_spherical_examples() {
        for name in ["sph:sin-lat", "sph:cos-lat-cos-lon"] {
            let u = lookup(name);
            for theta in [[0.0, 0.0], [1.2, -0.7], [-2.5, 1.4]] {
                let m = hessian_spherical(&u, theta, DEFAULT_POLE_MARGIN).unwrap();
                assert!(m.norm() < 1e-12, "{name} at {theta:?}: {m}");
            }
        }
        let q = lookup("q2-over-r");
        let m = hessian_spherical(&q, [0.0, 0.0], DEFAULT_POLE_MARGIN).unwrap();
        let expected = Matrix3::from_diagonal(&Vector3::new(0.0, -3.0, -1.0));
        assert!((m - expected).norm() < 1e-14);
    }

    #[test]
    fn hessian_spherical_rejects_poles() {
        let q = lookup("q2-over-r");
        let err = hessian_spherical(&q, [0.0, FRAC_PI_2 - 1e-4], DEFAULT_POLE_MARGIN).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
    }

    #[test]
    fn order_one_required_for_chart_formulas() {
        let p = profiles::lookup("q2-over-r").unwrap().profile().clone();
        let u = HomogeneousFunction::with_order(p, 0.5);
        assert_eq!(hessian_chart(&u, [0.0, 0.0]), Err(Error::NotOrderOne(0.5)));
    }

    #[test]
    fn fd_examples() {
        let sq = lookup("chart:x1sq");
        let m = fd_hessian(&sq, &[1.0, 0.0, 1.0], 1e-3).unwrap();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-5);
        let lin = lookup("linear:mix");
        let g = fd_gradient(&lin, &[0.3, 0.2, -0.9], 1e-3).unwrap();
        let exact = lin.derivatives(&[0.3, 0.2, -0.9]).unwrap().gradient;
        assert!((g - exact).amax() < 1e-10);
        assert!(matches!(
            fd_derivatives(&lin, &[0.001, 0.0, 0.0], 1, 1e-3),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let zero = classify_hessian(&DMatrix::zeros(3, 3), &e3, 1e-8);
        assert_eq!(zero.class, HessianClass::Zero);

        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -2.0, 0.0]));
        let s = classify_hessian(&m, &e3, 1e-8);
        assert_eq!(s.class, HessianClass::Saddle);
        assert!((s.tangential_product() + 4.0).abs() < 1e-14);
        assert_eq!(s.tangential_eigenvalues, vec![2.0, -2.0]);

        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -3.0, -1.0]));
        let d = classify_hessian(&m, &e1, 1e-8);
        assert_eq!(d.class, HessianClass::Definite);
        assert!((d.tangential_product() - 3.0).abs() < 1e-14);

        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -3.0, 0.0]));
        let d = classify_hessian(&m, &e1, 1e-8);
        assert_eq!(d.class, HessianClass::SemidefiniteNonzero);
    }

    #[test]
    fn hessian_sample_json_uses_row_major_layout() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        let s = classify_hessian(&m, &DVector::from_vec(vec![0.0, 0.0, 1.0]), 1e-8);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["hessian"]["dim"], 3);
        assert_eq!(json["hessian"]["data"][1], 2.0);
        assert_eq!(json["class"], "saddle");
        let back: HessianSample = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
    }
}
