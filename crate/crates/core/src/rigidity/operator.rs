use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use super::discrete::{check_grid, extended, Circulant, DiscretizedProfile, Scheme};
use crate::coefficients::{SphericalCoefficients, SphericalOperator};
use crate::error::{Error, Result};
use crate::grid::S2Grid;

/// The spherical operator `A : D^2 g + B . D g + C g` assembled as a dense
/// matrix on the nodes of an `N x N/2` grid.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: S2Grid,
    pub scheme: Scheme,
    pub coefficients: Vec<SphericalCoefficients>,
    /// `cos(theta2) dtheta1 dtheta2` quadrature weights.
    pub weights: DVector<f64>,
    pub matrix: DMatrix<f64>,
}

impl DiscreteOperator {
    pub fn assemble(op: &SphericalOperator<'_>, grid: S2Grid, scheme: Scheme) -> Result<Self> {
        check_grid(&grid)?;
        let coefficients = (0..grid.len())
            .into_par_iter()
            .map(|idx| op.coefficients_at(grid.theta(idx)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_coefficients(grid, scheme, coefficients)
    }

    pub fn from_coefficients(grid: S2Grid, scheme: Scheme, coefficients: Vec<SphericalCoefficients>) -> Result<Self> {
        let n = check_grid(&grid)?;
        if coefficients.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: coefficients.len(),
            });
        }
        let c = Circulant::new(scheme, n);
        let len = grid.len();
        let rows: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|p| {
                let (i, j) = grid.split(p);
                let k = &coefficients[p];
                let (a11, a12, a22) = (k.a[(0, 0)], 0.5 * (k.a[(0, 1)] + k.a[(1, 0)]), k.a[(1, 1)]);
                let mut row = vec![0.0; len];
                for l in 0..n {
                    let w = (i + n - l) % n;
                    row[grid.index(l, j)] += a11 * c.c2[w] + k.b[0] * c.c1[w];
                }
                for m in 0..n {
                    let w2 = (j + n - m) % n;
                    let (im, jm) = extended(n, i, m);
                    row[grid.index(im, jm)] += a22 * c.c2[w2] + k.b[1] * c.c1[w2];
                    let outer = 2.0 * a12 * c.c1[w2];
                    if outer != 0.0 {
                        for l in 0..n {
                            let w1 = c.c1[(im + n - l) % n];
                            if w1 != 0.0 {
                                row[grid.index(l, jm)] += outer * w1;
                            }
                        }
                    }
                }
                row[p] += k.c;
                row
            })
            .collect();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let matrix = DMatrix::from_row_slice(len, len, &flat);
        let weights = DVector::from_vec(grid.area_weights());
        Ok(DiscreteOperator {
            grid,
            scheme,
            coefficients,
            weights,
            matrix,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, g: &DVector<f64>) -> DVector<f64> {
        &self.matrix * g
    }

    fn check(&self, g: &DiscretizedProfile) -> Result<DVector<f64>> {
        if g.grid != self.grid {
            return Err(Error::Invalid("profile and operator grids differ".into()));
        }
        if g.scheme != self.scheme {
            return Err(Error::Invalid("profile and operator schemes differ".into()));
        }
        Ok(DVector::from_column_slice(&g.values))
    }

    /// `R[g]` and its exact gradient `2 L^T W L g` with respect to the nodal values.
    pub fn residual(&self, g: &DiscretizedProfile) -> Result<Residual> {
        let v = self.check(g)?;
        Ok(self.residual_of(&v))
    }

    pub(crate) fn residual_of(&self, v: &DVector<f64>) -> Residual {
        let r = self.apply(v);
        let wr = r.component_mul(&self.weights);
        let value = r.dot(&wr);
        let gradient = self.matrix.tr_mul(&wr) * 2.0;
        Residual { value, gradient }
    }

    pub(crate) fn value_of(&self, v: &DVector<f64>) -> f64 {
        let r = self.apply(v);
        r.component_mul(&self.weights).dot(&r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub gradient: DVector<f64>,
}

/// `R[g] = sum_nodes w (A : D^2 g + B . D g + C g)^2` with its gradient.
pub fn residual_functional(op: &SphericalOperator<'_>, g: &DiscretizedProfile) -> Result<Residual> {
    DiscreteOperator::assemble(op, g.grid, g.scheme)?.residual(g)
}

/// Weighted `L^2` norm of the nodal values.
pub fn profile_norm(g: &DiscretizedProfile) -> f64 {
    weighted_norm(&g.grid, &g.values)
}

pub(crate) fn weighted_norm(grid: &S2Grid, values: &[f64]) -> f64 {
    grid.area_weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Weighted least-squares projection onto the restrictions of `x1, x2, x3`.
pub(crate) fn linear_projection(grid: &S2Grid, values: &[f64]) -> Vector3<f64> {
    let weights = grid.area_weights();
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (idx, (&w, &v)) in weights.iter().zip(values).enumerate() {
        let x = grid.point(idx);
        gram += x * x.transpose() * w;
        rhs += x * (w * v);
    }
    gram.cholesky().map(|c| c.solve(&rhs)).unwrap_or_else(Vector3::zeros)
}

/// Distance of `g` from the linear functions `l(x) = c . x` on the sphere,
/// in the weighted `L^2` norm. Constants are not in the subtracted span.
pub fn nonlinearity_norm(g: &DiscretizedProfile) -> f64 {
    let c = linear_projection(&g.grid, &g.values);
    let rest: Vec<f64> = g
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| v - c.dot(&g.grid.point(idx)))
        .collect();
    weighted_norm(&g.grid, &rest)
}

/// Weighted `L^2` norm of the projection of `g` onto the constants; reported
/// next to [`nonlinearity_norm`], which does not remove constants.
pub fn constant_component(g: &DiscretizedProfile) -> f64 {
    let weights = g.grid.area_weights();
    let area: f64 = weights.iter().sum();
    let mean = weights.iter().zip(&g.values).map(|(w, v)| w * v).sum::<f64>() / area;
    mean.abs() * area.sqrt()
}
