use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::HomogeneousFunction;
use crate::error::{Error, Result};
use crate::grid::S2Grid;

/// Differentiation scheme on the equiangular grid.
///
/// Both schemes act on the doubly periodic extension of the profile: a
/// meridian through `theta1` continues over the pole into the meridian through
/// `theta1 + pi`, so `theta2` becomes a periodic variable of period `2 pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Fourth-order central differences.
    FourthOrder,
    /// Trigonometric (Fourier) differentiation.
    #[default]
    Spectral,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourth-order" | "fourth_order" | "fd4" => Ok(Scheme::FourthOrder),
            "spectral" => Ok(Scheme::Spectral),
            other => Err(Error::Invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Circulant first- and second-derivative weights: `f'_j = sum_l c1[(j - l) mod n] f_l`.
#[derive(Debug, Clone)]
pub(crate) struct Circulant {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl Circulant {
    pub fn new(scheme: Scheme, n: usize) -> Self {
        let h = 2.0 * PI / n as f64;
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        match scheme {
            Scheme::Spectral => {
                c2[0] = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
                for k in 1..n {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let half = 0.5 * k as f64 * h;
                    c1[k] = 0.5 * sign / half.tan();
                    c2[k] = -sign / (2.0 * half.sin().powi(2));
                }
            }
            Scheme::FourthOrder => {
                c1[1] = -8.0 / (12.0 * h);
                c1[2] = 1.0 / (12.0 * h);
                c1[n - 1] = 8.0 / (12.0 * h);
                c1[n - 2] = -1.0 / (12.0 * h);
                let h2 = 12.0 * h * h;
                c2[0] = -30.0 / h2;
                c2[1] = 16.0 / h2;
                c2[n - 1] = 16.0 / h2;
                c2[2] = -1.0 / h2;
                c2[n - 2] = -1.0 / h2;
            }
        }
        Circulant { c1, c2 }
    }
}

/// Profile values at the nodes of an `N x N/2` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedProfile {
    pub grid: S2Grid,
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

/// Nodal derivatives `(g1, g2, g11, g12, g22)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalDerivatives {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g22: Vec<f64>,
}

pub(crate) fn check_grid(grid: &S2Grid) -> Result<usize> {
    let n = grid.n_theta1;
    if n < 8 || !n.is_multiple_of(2) || grid.n_theta2 * 2 != n {
        return Err(Error::Invalid(format!(
            "discretization needs an N x N/2 grid with even N >= 8, got {} x {}",
            grid.n_theta1, grid.n_theta2
        )));
    }
    Ok(n)
}

/// Node of the periodic extension: extended latitude index `m` in `0..n`
/// on meridian `i` maps to a grid node `(i', j')`.
#[inline]
pub(crate) fn extended(n: usize, i: usize, m: usize) -> (usize, usize) {
    let half = n / 2;
    if m < half {
        (i, m)
    } else {
        ((i + half) % n, n - 1 - m)
    }
}

impl DiscretizedProfile {
    pub fn new(grid: S2Grid, values: Vec<f64>, scheme: Scheme) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(DiscretizedProfile { grid, values, scheme })
    }

    /// Samples the spherical profile of `u` at the nodes.
    pub fn sample(u: &HomogeneousFunction, grid: S2Grid, scheme: Scheme) -> Result<Self> {
        check_grid(&grid)?;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| u.spherical_value(grid.theta(idx)))
            .collect::<Result<_>>()?;
        Ok(DiscretizedProfile { grid, values, scheme })
    }

    /// Samples a function of the unit vector.
    pub fn from_fn(grid: S2Grid, scheme: Scheme, f: impl Fn([f64; 3]) -> f64 + Sync) -> Result<Self> {
        check_grid(&grid)?;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.point(idx).into()))
            .collect();
        Ok(DiscretizedProfile { grid, values, scheme })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Derivatives at every node. The mixed derivative is `D2` applied to
    /// `D1 g`; the `theta1`-derivative is even under the pole reflection.
    pub fn derivatives(&self) -> NodalDerivatives {
        let n = self.grid.n_theta1;
        let half = n / 2;
        let c = Circulant::new(self.scheme, n);
        let g = &self.values;
        let idx = |i: usize, j: usize| j * n + i;
        let along1 = |f: &[f64], w: &[f64], i: usize, j: usize| -> f64 {
            (0..n)
                .filter(|&k| w[(i + n - k) % n] != 0.0)
                .map(|k| w[(i + n - k) % n] * f[idx(k, j)])
                .sum()
        };
        let along2 = |f: &[f64], w: &[f64], i: usize, j: usize| -> f64 {
            (0..n)
                .filter(|&m| w[(j + n - m) % n] != 0.0)
                .map(|m| {
                    let (a, b) = extended(n, i, m);
                    w[(j + n - m) % n] * f[idx(a, b)]
                })
                .sum()
        };
        let nodes: Vec<(usize, usize)> = (0..half).flat_map(|j| (0..n).map(move |i| (i, j))).collect();
        let g1: Vec<f64> = nodes.par_iter().map(|&(i, j)| along1(g, &c.c1, i, j)).collect();
        let g11 = nodes.par_iter().map(|&(i, j)| along1(g, &c.c2, i, j)).collect();
        let g2 = nodes.par_iter().map(|&(i, j)| along2(g, &c.c1, i, j)).collect();
        let g22 = nodes.par_iter().map(|&(i, j)| along2(g, &c.c2, i, j)).collect();
        let g12 = nodes.par_iter().map(|&(i, j)| along2(&g1, &c.c1, i, j)).collect();
        NodalDerivatives { g1, g2, g11, g12, g22 }
    }
}
