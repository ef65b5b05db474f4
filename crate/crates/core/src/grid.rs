//! Sample grids on `S^2` and `S^3`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::calculus::spherical_point;

/// Equiangular `(theta1, theta2)` product grid with half-cell offsets, so no
/// node sits on a pole. Node `(i, j)` has index `j * n_theta1 + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct S2Grid {
    pub n_theta1: usize,
    pub n_theta2: usize,
}

impl Default for S2Grid {
    fn default() -> Self {
        S2Grid::new(128, 64)
    }
}

impl S2Grid {
    pub fn new(n_theta1: usize, n_theta2: usize) -> Self {
        assert!(n_theta1 >= 2 && n_theta2 >= 1, "grid too small");
        S2Grid { n_theta1, n_theta2 }
    }

    /// Resolution `n`: `n` longitudes by `n / 2` latitudes (equal spacing).
    pub fn with_resolution(n: usize) -> Self {
        S2Grid::new(n, (n / 2).max(1))
    }

    pub fn len(&self) -> usize {
        self.n_theta1 * self.n_theta2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_theta1(&self) -> f64 {
        2.0 * PI / self.n_theta1 as f64
    }

    pub fn h_theta2(&self) -> f64 {
        PI / self.n_theta2 as f64
    }

    pub fn theta1(&self, i: usize) -> f64 {
        -PI + (i as f64 + 0.5) * self.h_theta1()
    }

    pub fn theta2(&self, j: usize) -> f64 {
        -FRAC_PI_2 + (j as f64 + 0.5) * self.h_theta2()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_theta1 + i
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx % self.n_theta1, idx / self.n_theta1)
    }

    pub fn theta(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.split(idx);
        [self.theta1(i), self.theta2(j)]
    }

    pub fn point(&self, idx: usize) -> Vector3<f64> {
        spherical_point(self.theta(idx))
    }

    /// Largest angular spacing.
    pub fn cell_size(&self) -> f64 {
        self.h_theta1().max(self.h_theta2())
    }

    /// Grid neighbours: periodic in `theta1`; across a pole a node connects
    /// to the node half a turn away in the same row.
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let (i, j) = self.split(idx);
        let n1 = self.n_theta1;
        let mut out = vec![self.index((i + 1) % n1, j), self.index((i + n1 - 1) % n1, j)];
        let across = self.index((i + n1 / 2) % n1, j);
        if j + 1 < self.n_theta2 {
            out.push(self.index(i, j + 1));
        } else if across != idx {
            out.push(across);
        }
        if j > 0 {
            out.push(self.index(i, j - 1));
        } else if across != idx && !out.contains(&across) {
            out.push(across);
        }
        out
    }

    /// Cosine-of-latitude quadrature weights `cos(theta2) dtheta1 dtheta2`.
    pub fn area_weights(&self) -> Vec<f64> {
        let cell = self.h_theta1() * self.h_theta2();
        (0..self.len()).map(|idx| self.theta(idx)[1].cos() * cell).collect()
    }
}

/// Hyperspherical product grid on `S^3` with half-cell offsets:
/// `x = (cos p1, sin p1 cos p2, sin p1 sin p2 cos phi, sin p1 sin p2 sin phi)`,
/// `p1, p2` in `(0, pi)` and `phi` in `(0, 2 pi)`, `n` cells each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct S3Grid {
    pub n: usize,
}

impl S3Grid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "grid too small");
        S3Grid { n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn angles(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let (a, rest) = (idx % n, idx / n);
        let (b, c) = (rest % n, rest / n);
        let nf = n as f64;
        [
            (a as f64 + 0.5) * PI / nf,
            (b as f64 + 0.5) * PI / nf,
            (c as f64 + 0.5) * 2.0 * PI / nf,
        ]
    }

    pub fn point(&self, idx: usize) -> DVector<f64> {
        let [p1, p2, phi] = self.angles(idx);
        let (s1, c1) = p1.sin_cos();
        let (s2, c2) = p2.sin_cos();
        let (s3, c3) = phi.sin_cos();
        DVector::from_vec(vec![c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "sphere", rename_all = "snake_case")]
pub enum SphereGrid {
    S2(S2Grid),
    S3(S3Grid),
}

impl SphereGrid {
    /// Grid of resolution `n` on the unit sphere of `R^dim`.
    pub fn for_dimension(dim: usize, n: usize) -> Option<SphereGrid> {
        match dim {
            3 => Some(SphereGrid::S2(S2Grid::with_resolution(n))),
            4 => Some(SphereGrid::S3(S3Grid::new(n))),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SphereGrid::S2(_) => 3,
            SphereGrid::S3(_) => 4,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SphereGrid::S2(g) => g.len(),
            SphereGrid::S3(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> DVector<f64> {
        match self {
            SphereGrid::S2(g) => {
                let p = g.point(idx);
                DVector::from_column_slice(p.as_slice())
            }
            SphereGrid::S3(g) => g.point(idx),
        }
    }

    /// Angular coordinates of a node.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        match self {
            SphereGrid::S2(g) => g.theta(idx).to_vec(),
            SphereGrid::S3(g) => g.angles(idx).to_vec(),
        }
    }

    pub fn coord_names(&self) -> &'static [&'static str] {
        match self {
            SphereGrid::S2(_) => &["theta1", "theta2"],
            SphereGrid::S3(_) => &["psi1", "psi2", "phi"],
        }
    }
}

/// Evenly strided subset of `0..len` with at most `cap` entries.
pub fn subsample(len: usize, cap: usize) -> Vec<usize> {
    if len <= cap {
        return (0..len).collect();
    }
    (0..cap).map(|k| k * len / cap).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s2_nodes_avoid_poles_and_are_unit() {
        let g = S2Grid::new(16, 8);
        for idx in 0..g.len() {
            let t = g.theta(idx);
            assert!(t[1].abs() < FRAC_PI_2);
            assert!((g.point(idx).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn s2_neighbors_are_symmetric() {
        let g = S2Grid::new(12, 6);
        for idx in 0..g.len() {
            for nb in g.neighbors(idx) {
                assert!(g.neighbors(nb).contains(&idx), "{idx} -> {nb}");
            }
        }
    }

    #[test]
    fn s3_points_are_unit() {
        let g = S3Grid::new(5);
        for idx in 0..g.len() {
            assert!((g.point(idx).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn area_weights_integrate_sphere() {
        let g = S2Grid::new(64, 32);
        let total: f64 = g.area_weights().iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-2);
    }

    #[test]
    fn subsample_caps_and_is_sorted() {
        let s = subsample(32768, 10_000);
        assert_eq!(s.len(), 10_000);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample(5, 10), vec![0, 1, 2, 3, 4]);
    }
}
