//! Geometry of the gradient surface `grad u(S^2)`: fundamental forms and
//! curvatures, saddle and singular-set scans, supporting-plane probes and
//! leading-polynomial extraction at singular directions.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    classify_hessian, default_tau_zero, hessian_sample, spherical_point, HessianClass, HomogeneousFunction,
};
use crate::error::{Error, Result};
use crate::grid::{S2Grid, SphereGrid};
use crate::jet::{Jet2, Real};
use crate::linalg::{self, rotation_to_pole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub direction: [f64; 3],
    /// `grad u(x)`, a point of the gradient surface.
    pub image: [f64; 3],
    /// Unit normal of the surface at `image`, oriented along `+x`.
    pub normal: [f64; 3],
    /// `F_1 x F_2` in the rotated frame, `(0, 0, u11 u22 - u12^2)`.
    pub cross_rotated: [f64; 3],
    /// First and second fundamental forms in the rotated chart.
    pub first_form: [[f64; 2]; 2],
    pub second_form: [[f64; 2]; 2],
    /// Principal curvatures, `kappa[0] >= kappa[1]`.
    pub curvatures: [f64; 2],
    /// Nonzero tangential Hessian eigenvalues `lambda1 >= lambda2`.
    pub hessian_eigenvalues: [f64; 2],
}

impl SurfaceSample {
    /// Angle between the normal and the line through `x`.
    pub fn normal_angle(&self) -> f64 {
        let n = Vector3::from(self.normal);
        let x = Vector3::from(self.direction);
        n.cross(&x).norm().atan2(n.dot(&x).abs())
    }
}

fn eigenvalues_2x2(m: &Matrix2<f64>) -> [f64; 2] {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m.determinant();
    let disc = (half_trace * half_trace - det).max(0.0).sqrt();
    [half_trace + disc, half_trace - disc]
}

/// Surface data at `grad u(x)`. The direction is rotated to the north pole;
/// in the rotated chart `F(x1, x2) = grad u(x1, x2, sqrt(1 - x1^2 - x2^2))`,
/// `I = U^2` and `II = -U` where `U` is the tangential Hessian block.
pub fn surface_sample(u: &HomogeneousFunction, x: &[f64], tau_zero: f64) -> Result<SurfaceSample> {
    if u.dim() != 3 {
        return Err(Error::RequiresDimension3(u.dim()));
    }
    if (u.order() - 1.0).abs() > 1e-15 {
        return Err(Error::NotOrderOne(u.order()));
    }
    let xv = Vector3::from_column_slice(x);
    if xv.norm() == 0.0 {
        return Err(Error::Origin);
    }
    let xv = xv.normalize();
    let d = u.derivatives(xv.as_slice())?;
    let hess = Matrix3::from_column_slice(d.hessian.as_slice());
    let norm = hess.norm();
    if norm < tau_zero {
        return Err(Error::SingularPoint { norm, tau: tau_zero });
    }
    let r = rotation_to_pole(&xv);
    let v = r * hess * r.transpose();
    let uu = Matrix2::new(v[(0, 0)], v[(0, 1)], v[(1, 0)], v[(1, 1)]);
    let first = uu.transpose() * uu;
    let second = -uu;
    // F_i is column i of V (the third entry vanishes up to rounding).
    let cross = v.column(0).cross(&v.column(1));
    let normal_rot = if cross.norm() > 0.0 {
        cross.normalize()
    } else {
        Vector3::z()
    };
    let mut normal = r.transpose() * normal_rot;
    if normal.dot(&xv) < 0.0 {
        normal = -normal;
    }
    let shape = first
        .try_inverse()
        .map(|inv| inv * second)
        .unwrap_or_else(|| Matrix2::from_element(f64::NAN));
    let curvatures = if shape.iter().all(|v| v.is_finite()) {
        eigenvalues_2x2(&shape)
    } else {
        // Rank-deficient U: one curvature is infinite.
        let [l1, l2] = eigenvalues_2x2(&uu);
        let mut k = [-1.0 / l1, -1.0 / l2];
        k.sort_by(|a, b| b.total_cmp(a));
        k
    };
    let grad = &d.gradient;
    Ok(SurfaceSample {
        direction: xv.into(),
        image: [grad[0], grad[1], grad[2]],
        normal: normal.into(),
        cross_rotated: cross.into(),
        first_form: [[first[(0, 0)], first[(0, 1)]], [first[(1, 0)], first[(1, 1)]]],
        second_form: [[second[(0, 0)], second[(0, 1)]], [second[(1, 0)], second[(1, 1)]]],
        curvatures,
        hessian_eigenvalues: eigenvalues_2x2(&uu),
    })
}

/// Largest Hessian Frobenius norm over the grid, used to scale `tau_zero`.
pub fn hessian_scale(u: &HomogeneousFunction, grid: &SphereGrid) -> Result<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            u.derivatives(grid.point(idx).as_slice())
                .map(|d| linalg::frobenius(&d.hessian))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub zero: usize,
    pub saddle: usize,
    pub semidefinite_nonzero: usize,
    pub definite: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: usize,
    pub direction: Vec<f64>,
    pub tangential_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleScanReport {
    pub profile: String,
    pub grid: SphereGrid,
    pub tau_zero: f64,
    pub counts: ClassCounts,
    pub definite_witnesses: Vec<Witness>,
    pub semidefinite_witnesses: Vec<Witness>,
    /// Class per grid node.
    #[serde(skip)]
    pub classes: Vec<HessianClass>,
}

/// Classifies the Hessian at every grid node (any dimension with a grid).
pub fn saddle_scan(u: &HomogeneousFunction, grid: &SphereGrid, tau_zero: Option<f64>) -> Result<SaddleScanReport> {
    let tau = match tau_zero {
        Some(t) => t,
        None => default_tau_zero(hessian_scale(u, grid)?),
    };
    let samples = (0..grid.len())
        .into_par_iter()
        .map(|idx| hessian_sample(u, &grid.point(idx), tau))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = ClassCounts::default();
    let mut definite_witnesses = Vec::new();
    let mut semidefinite_witnesses = Vec::new();
    let mut classes = Vec::with_capacity(samples.len());
    for (idx, s) in samples.into_iter().enumerate() {
        let witness = || Witness {
            index: idx,
            direction: s.direction.as_slice().to_vec(),
            tangential_eigenvalues: s.tangential_eigenvalues.clone(),
        };
        match s.class {
            HessianClass::Zero => counts.zero += 1,
            HessianClass::Saddle => counts.saddle += 1,
            HessianClass::SemidefiniteNonzero => {
                counts.semidefinite_nonzero += 1;
                semidefinite_witnesses.push(witness());
            }
            HessianClass::Definite => {
                counts.definite += 1;
                definite_witnesses.push(witness());
            }
        }
        classes.push(s.class);
    }
    Ok(SaddleScanReport {
        profile: u.name().to_string(),
        grid: *grid,
        tau_zero: tau,
        counts,
        definite_witnesses,
        semidefinite_witnesses,
        classes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularSetClass {
    Empty,
    Finite,
    WholeSphere,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLevel {
    pub n_theta1: usize,
    pub n_theta2: usize,
    /// Grid-adapted threshold used at this level.
    pub threshold: f64,
    pub below_threshold: usize,
    /// Geodesic diameters of the clusters, largest first.
    pub diameters: Vec<f64>,
    /// Unit-vector centroid of each cluster.
    pub centers: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSetReport {
    pub profile: String,
    pub tau_zero: f64,
    /// Estimated bound on the third derivatives on the sphere.
    pub lipschitz: f64,
    pub levels: Vec<ClusterLevel>,
    /// `(max diameter + h)` ratio between consecutive levels.
    pub shrink_ratios: Vec<f64>,
    pub classification: SingularSetClass,
}

/// Default number of refinements after the base level.
pub const DEFAULT_REFINEMENTS: usize = 3;
/// Largest per-doubling shrink ratio accepted as "finite".
pub const FINITE_SHRINK_RATIO: f64 = 0.6;

fn geodesic(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

fn farthest<'a>(points: &'a [Vector3<f64>], from: &Vector3<f64>) -> (f64, &'a Vector3<f64>) {
    points
        .iter()
        .map(|p| (geodesic(from, p), p))
        .fold((0.0, &points[0]), |acc, c| if c.0 > acc.0 { c } else { acc })
}

/// Approximate diameter by two farthest-point sweeps.
fn cluster_diameter(points: &[Vector3<f64>]) -> f64 {
    let (_, a) = farthest(points, &points[0]);
    farthest(points, a).0
}

/// Grid clusters where `|D^2u|` falls below a threshold, tracked under
/// refinement. A grid node can sit up to about half a cell from a singular
/// direction, so level `N` uses `tau_N = tau_zero + L h_N` with `L` an
/// estimate of `max |D^3u|` on the sphere.
pub fn singular_set_scan(
    u: &HomogeneousFunction,
    base: S2Grid,
    tau_zero: Option<f64>,
    refinements: usize,
) -> Result<SingularSetReport> {
    if u.dim() != 3 {
        return Err(Error::RequiresDimension3(u.dim()));
    }
    let base_grid = SphereGrid::S2(base);
    let tau = match tau_zero {
        Some(t) => t,
        None => default_tau_zero(hessian_scale(u, &base_grid)?),
    };
    let lipschitz = (0..base.len())
        .into_par_iter()
        .map(|idx| {
            let x = base.point(idx);
            u.third_derivatives(x.as_slice())
                .map(|t| t.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    let mut levels = Vec::with_capacity(refinements + 1);
    let mut whole_sphere = true;
    for level in 0..=refinements {
        let grid = S2Grid::new(base.n_theta1 << level, base.n_theta2 << level);
        let h = grid.cell_size();
        let threshold = tau + lipschitz * h;
        let norms: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let x = grid.point(idx);
                u.derivatives(x.as_slice()).map(|d| linalg::frobenius(&d.hessian))
            })
            .collect::<Result<_>>()?;
        whole_sphere &= norms.iter().all(|&v| v < tau);
        let below: Vec<bool> = norms.iter().map(|&v| v < threshold).collect();
        let mut seen = vec![false; grid.len()];
        let mut clusters: Vec<(f64, [f64; 3])> = Vec::new();
        for start in 0..grid.len() {
            if !below[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut members = Vec::new();
            while let Some(idx) = queue.pop_front() {
                members.push(grid.point(idx));
                for nb in grid.neighbors(idx) {
                    if below[nb] && !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
            let sum: Vector3<f64> = members.iter().sum();
            let center = if sum.norm() > 0.0 { sum.normalize() } else { members[0] };
            clusters.push((cluster_diameter(&members), center.into()));
        }
        clusters.sort_by(|a, b| b.0.total_cmp(&a.0));
        levels.push(ClusterLevel {
            n_theta1: grid.n_theta1,
            n_theta2: grid.n_theta2,
            threshold,
            below_threshold: below.iter().filter(|&&b| b).count(),
            diameters: clusters.iter().map(|c| c.0).collect(),
            centers: clusters.iter().map(|c| c.1).collect(),
        });
    }
    let extent = |l: &ClusterLevel| {
        l.diameters.first().copied().unwrap_or(0.0) + S2Grid::new(l.n_theta1, l.n_theta2).cell_size()
    };
    let shrink_ratios: Vec<f64> = levels.windows(2).map(|w| extent(&w[1]) / extent(&w[0])).collect();
    let last = levels.last().expect("at least one level");
    let classification = if whole_sphere {
        SingularSetClass::WholeSphere
    } else if last.diameters.is_empty() {
        SingularSetClass::Empty
    } else if !shrink_ratios.is_empty() && shrink_ratios.iter().all(|&r| r <= FINITE_SHRINK_RATIO) {
        SingularSetClass::Finite
    } else {
        SingularSetClass::Other
    };
    Ok(SingularSetReport {
        profile: u.name().to_string(),
        tau_zero: tau,
        lipschitz,
        levels,
        shrink_ratios,
        classification,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub index: usize,
    pub direction: [f64; 3],
    pub image: [f64; 3],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub profile: String,
    pub nu: [f64; 3],
    pub grid: S2Grid,
    /// `max nu . grad u` over the samples.
    pub contact_value: f64,
    /// Local maxima attaining the contact value (up to rounding), by index.
    pub contact_set: Vec<ContactPoint>,
    /// Gap between the contact value and the best remaining local maximum.
    pub gap: Option<f64>,
    /// Angular tolerance `2 / sqrt(N)`.
    pub tolerance: f64,
    /// Whether every contact direction lies within `tolerance` of `+-nu`.
    pub at_plus_minus_nu: bool,
}

/// Brute-force supporting plane with normal `nu`: maximizes `nu . grad u(x)`
/// over the grid. Ties are broken by grid index.
pub fn supporting_plane_probe(u: &HomogeneousFunction, nu: [f64; 3], grid: S2Grid) -> Result<ContactReport> {
    if u.dim() != 3 {
        return Err(Error::RequiresDimension3(u.dim()));
    }
    let nu_v = Vector3::from(nu);
    if nu_v.norm() == 0.0 {
        return Err(Error::Invalid("probe direction must be nonzero".into()));
    }
    let nu_v = nu_v.normalize();
    let images: Vec<Vector3<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            u.derivatives(x.as_slice())
                .map(|d| Vector3::new(d.gradient[0], d.gradient[1], d.gradient[2]))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = images.iter().map(|g| nu_v.dot(g)).collect();
    let (best_idx, best) = values.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
    );
    let tie = 1e-12 * (1.0 + best.abs());
    let local_max: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.neighbors(i).iter().all(|&nb| values[nb] <= values[i] + tie))
        .collect();
    let mut contact_set = Vec::new();
    let mut runner_up: Option<f64> = None;
    for &i in &local_max {
        if values[i] >= best - tie {
            contact_set.push(ContactPoint {
                index: i,
                direction: grid.point(i).into(),
                image: images[i].into(),
                value: values[i],
            });
        } else {
            runner_up = Some(runner_up.map_or(values[i], |r: f64| r.max(values[i])));
        }
    }
    if contact_set.is_empty() {
        contact_set.push(ContactPoint {
            index: best_idx,
            direction: grid.point(best_idx).into(),
            image: images[best_idx].into(),
            value: best,
        });
    }
    let tolerance = 2.0 / (grid.n_theta1 as f64).sqrt();
    let at_plus_minus_nu = contact_set.iter().all(|c| {
        let d = Vector3::from(c.direction);
        geodesic(&d, &nu_v).min(geodesic(&d, &-nu_v)) <= tolerance
    });
    Ok(ContactReport {
        profile: u.name().to_string(),
        nu: nu_v.into(),
        grid,
        contact_value: best,
        contact_set,
        gap: runner_up.map(|r| best - r),
        tolerance,
        at_plus_minus_nu,
    })
}

/// Coefficient of `theta1^i theta2^j` in a polynomial in the local angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingPolynomial {
    /// Vanishing order `k >= 3`.
    pub order: usize,
    /// Coefficients of `P` (degree `k`) in `(theta - p)`, as fitted on the
    /// smallest annulus.
    pub coefficients: Vec<Monomial>,
    pub annuli: Vec<f64>,
    /// RMS of `g - P` on each annulus.
    pub remainder_norms: Vec<f64>,
    /// RMS residual of the full least-squares fit on each annulus.
    pub fit_residuals: Vec<f64>,
    /// Coefficients of the flat Laplacian of `P`.
    pub laplacian: Vec<Monomial>,
    /// Euclidean norm of the coefficients of `Delta P`.
    pub harmonicity_defect: f64,
}

/// Default annulus radii for the fit.
pub const DEFAULT_ANNULI: [f64; 3] = [0.1, 0.05, 0.025];

fn monomials(degree: usize) -> impl Iterator<Item = (u32, u32)> {
    (0..=degree as u32).rev().map(move |i| (i, degree as u32 - i))
}

fn laplacian_of(coeffs: &[Monomial]) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = Vec::new();
    let mut add = |i: u32, j: u32, c: f64| match out.iter_mut().find(|m| m.i == i && m.j == j) {
        Some(m) => m.coefficient += c,
        None => out.push(Monomial { i, j, coefficient: c }),
    };
    for m in coeffs {
        if m.i >= 2 {
            add(m.i - 2, m.j, m.coefficient * (m.i * (m.i - 1)) as f64);
        }
        if m.j >= 2 {
            add(m.i, m.j - 2, m.coefficient * (m.j * (m.j - 1)) as f64);
        }
    }
    out
}

/// Lowest-order homogeneous Taylor polynomial of the spherical profile of `u`
/// at angles `p`, after subtracting the linear function `grad u(p) . x`.
///
/// Homogeneous polynomials of degrees `3..=k_max + 2` are fitted jointly on
/// each annulus; the two extra degrees absorb the remainder. The order is the
/// first degree `<= k_max` whose contribution on the smallest annulus is not
/// negligible; `g` decaying faster than `rho^(k_max + 3/4)` vanishes beyond
/// `k_max`.
pub fn leading_polynomial(u: &HomogeneousFunction, p: [f64; 2], k_max: usize) -> Result<LeadingPolynomial> {
    leading_polynomial_with(u, p, k_max, &DEFAULT_ANNULI)
}

pub fn leading_polynomial_with(
    u: &HomogeneousFunction,
    p: [f64; 2],
    k_max: usize,
    annuli: &[f64],
) -> Result<LeadingPolynomial> {
    if k_max < 3 {
        return Err(Error::Invalid("k_max must be at least 3".into()));
    }
    if annuli.len() < 2 {
        return Err(Error::Invalid("need at least two annuli".into()));
    }
    let x0 = spherical_point(p);
    let grad = u.derivatives(x0.as_slice())?.gradient;
    let ell = Vector3::new(grad[0], grad[1], grad[2]);
    if !ell.iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid("profile is not differentiable at the base point".into()));
    }
    let g = |theta: [f64; 2]| -> Result<f64> { Ok(u.spherical_value(theta)? - ell.dot(&spherical_point(theta))) };

    // Vanishing to order 2 at p.
    let jet = u.spherical_jet(p, 0.0)?;
    let [t1, t2] = Jet2::<2>::seed(&p);
    let c2 = t2.cos();
    let lin = (c2 * t1.cos()).scale(ell.x) + (c2 * t1.sin()).scale(ell.y) + t2.sin().scale(ell.z);
    let scale = 1.0 + jet.v.abs() + ell.norm();
    let second = ((jet.h[0][0] - lin.h[0][0]).powi(2)
        + 2.0 * (jet.h[0][1] - lin.h[0][1]).powi(2)
        + (jet.h[1][1] - lin.h[1][1]).powi(2))
    .sqrt();
    if !second.is_finite() {
        return Err(Error::Invalid(
            "profile is not twice differentiable at the base point".into(),
        ));
    }
    if second > 1e-8 * scale {
        return Err(Error::NoVanishing(second));
    }

    let degrees: Vec<usize> = (3..=k_max + 2).collect();
    let columns: Vec<(usize, u32, u32)> = degrees
        .iter()
        .flat_map(|&d| monomials(d).map(move |(i, j)| (d, i, j)))
        .collect();
    let mut fits: Vec<Vec<f64>> = Vec::new();
    let mut fit_residuals = Vec::new();
    let mut sample_rms = Vec::new();
    for &rho in annuli {
        let mut rows: Vec<([f64; 2], f64)> = Vec::new();
        for ring in 0..5 {
            let r = rho * (0.5 + 0.125 * ring as f64);
            for k in 0..32 {
                let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5 * ring as f64 / 5.0) / 32.0;
                let s = [r * phi.cos() / rho, r * phi.sin() / rho];
                rows.push((s, g([p[0] + rho * s[0], p[1] + rho * s[1]])?));
            }
        }
        // Columns are scaled monomials in s = (theta - p) / rho.
        let a = DMatrix::from_fn(rows.len(), columns.len(), |r, c| {
            let (_, i, j) = columns[c];
            rows[r].0[0].powi(i as i32) * rows[r].0[1].powi(j as i32)
        });
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        sample_rms.push(b.norm() / (rows.len() as f64).sqrt());
        let svd = a.clone().svd(true, true);
        let sol = svd
            .solve(&b, 1e-12)
            .map_err(|e| Error::Invalid(format!("least squares failed: {e}")))?;
        fit_residuals.push((a * &sol - b).norm() / (rows.len() as f64).sqrt());
        fits.push(sol.iter().copied().collect());
    }

    // Observed vanishing order from the decay of g across the two smallest annuli.
    let n = annuli.len();
    let (rms_c, rms_f) = (sample_rms[n - 2], sample_rms[n - 1]);
    if rms_f.is_nan() || rms_f <= 0.0 {
        return Err(Error::VanishesBeyondOrder(k_max));
    }
    let observed = (rms_c / rms_f).ln() / (annuli[n - 2] / annuli[n - 1]).ln();
    if observed > k_max as f64 + 0.75 {
        return Err(Error::VanishesBeyondOrder(k_max));
    }

    // Block sizes as contributions on the annulus (scaled coordinates).
    let block_norm = |fit: &[f64], d: usize| -> f64 {
        columns
            .iter()
            .zip(fit)
            .filter(|(col, _)| col.0 == d)
            .map(|(_, c)| c * c)
            .sum::<f64>()
            .sqrt()
    };
    let finest_scaled = fits.last().expect("annuli checked");
    let largest = degrees
        .iter()
        .map(|&d| block_norm(finest_scaled, d))
        .fold(0.0, f64::max);
    let order = degrees
        .iter()
        .copied()
        .filter(|&d| d <= k_max)
        .find(|&d| block_norm(finest_scaled, d) > 1e-3 * largest)
        .ok_or(Error::VanishesBeyondOrder(k_max))?;

    // Back to unscaled coefficients.
    let fits: Vec<Vec<f64>> = fits
        .iter()
        .zip(annuli)
        .map(|(fit, rho)| {
            columns
                .iter()
                .zip(fit)
                .map(|(&(d, _, _), &c)| c / rho.powi(d as i32))
                .collect()
        })
        .collect();
    let finest = fits.last().expect("annuli checked");

    // The leading block must be stable under shrinking the annulus.
    let coarse = &fits[fits.len() - 2];
    let leading_norm = block_norm(finest, order);
    let drift = columns
        .iter()
        .enumerate()
        .filter(|(_, col)| col.0 == order)
        .map(|(c, _)| (finest[c] - coarse[c]).powi(2))
        .sum::<f64>()
        .sqrt();
    if drift > 0.05 * leading_norm {
        let ratios = fit_residuals.windows(2).map(|w| w[1] / w[0]).collect();
        return Err(Error::FitAmbiguous(ratios));
    }

    let coefficients: Vec<Monomial> = columns
        .iter()
        .zip(finest)
        .filter(|(col, _)| col.0 == order)
        .map(|(&(_, i, j), &c)| Monomial { i, j, coefficient: c })
        .collect();
    let mut remainder_norms = Vec::with_capacity(annuli.len());
    for &rho in annuli {
        let mut sum = 0.0;
        let mut count = 0;
        for ring in 0..5 {
            let r = rho * (0.5 + 0.125 * ring as f64);
            for k in 0..32 {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / 32.0;
                let d = [r * phi.cos(), r * phi.sin()];
                let pv: f64 = coefficients
                    .iter()
                    .map(|m| m.coefficient * d[0].powi(m.i as i32) * d[1].powi(m.j as i32))
                    .sum();
                sum += (g([p[0] + d[0], p[1] + d[1]])? - pv).powi(2);
                count += 1;
            }
        }
        remainder_norms.push((sum / count as f64).sqrt());
    }
    let laplacian = laplacian_of(&coefficients);
    let harmonicity_defect = laplacian.iter().map(|m| m.coefficient.powi(2)).sum::<f64>().sqrt();
    Ok(LeadingPolynomial {
        order,
        coefficients,
        annuli: annuli.to_vec(),
        remainder_norms,
        fit_residuals,
        laplacian,
        harmonicity_defect,
    })
}

/// One row of a surface dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub direction: [f64; 3],
    pub image: [f64; 3],
    pub normal: Option<[f64; 3]>,
    pub curvatures: Option<[f64; 2]>,
    pub class: HessianClass,
}

/// Samples the gradient surface over the grid; singular directions carry no
/// normal or curvatures.
pub fn surface_dump(u: &HomogeneousFunction, grid: S2Grid, tau_zero: f64) -> Result<Vec<SurfaceRow>> {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            let d = u.derivatives(x.as_slice())?;
            let class = classify_hessian(&d.hessian, &DVector::from_column_slice(x.as_slice()), tau_zero).class;
            let image = [d.gradient[0], d.gradient[1], d.gradient[2]];
            let (normal, curvatures) = match surface_sample(u, x.as_slice(), tau_zero) {
                Ok(s) => (Some(s.normal), Some(s.curvatures)),
                Err(Error::SingularPoint { .. }) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(SurfaceRow {
                direction: x.into(),
                image,
                normal,
                curvatures,
                class,
            })
        })
        .collect()
}

/// CSV with header `x1,x2,x3,g1,g2,g3,n1,n2,n3,kappa1,kappa2,class`.
pub fn surface_csv(rows: &[SurfaceRow]) -> String {
    let mut out = String::from("x1,x2,x3,g1,g2,g3,n1,n2,n3,kappa1,kappa2,class\n");
    for r in rows {
        let mut fields: Vec<String> = r.direction.iter().chain(&r.image).map(|v| v.to_string()).collect();
        match r.normal {
            Some(n) => fields.extend(n.iter().map(|v| v.to_string())),
            None => fields.extend(std::iter::repeat_n(String::new(), 3)),
        }
        match r.curvatures {
            Some(k) => fields.extend(k.iter().map(|v| v.to_string())),
            None => fields.extend(std::iter::repeat_n(String::new(), 2)),
        }
        fields.push(r.class.as_str().to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
