use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{spherical_angles, spherical_frame};
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};

/// Low-order trigonometric polynomial in `(theta1, theta2)`.
#[derive(Debug, Clone, PartialEq)]
struct TrigPoly {
    /// `(k, l, cc, cs, sc, ss)`: coefficients of `cos(k t1) cos(l t2)`, etc.
    terms: Vec<(f64, f64, [f64; 4])>,
}

impl TrigPoly {
    fn random(rng: &mut ChaCha8Rng, order: usize) -> Self {
        let mut terms = Vec::new();
        for k in 0..=order {
            for l in 0..=order {
                let c = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                terms.push((k as f64, l as f64, c));
            }
        }
        TrigPoly { terms }
    }

    fn eval(&self, t: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|&(k, l, c)| {
                let (s1, c1) = (k * t[0]).sin_cos();
                let (s2, c2) = (l * t[1]).sin_cos();
                c[0] * c1 * c2 + c[1] * c1 * s2 + c[2] * s1 * c2 + c[3] * s1 * s2
            })
            .sum()
    }
}

/// Seeded smooth uniformly elliptic field on `S^2`, extended 0-homogeneously.
///
/// In the orthonormal tangent frame `(e_theta1, e_theta2)` the tangential
/// block is `Rot(phi) diag(mu, 1/mu) Rot(phi)^T` with `mu = lambda^-s`,
/// `s = cos^2(theta2) p(theta) / max |p|` and `p`, `phi` random trigonometric
/// polynomials; the radial direction has weight 1. Hence
/// `lambda I <= a <= lambda^-1 I`, and `a = I` at the poles, where the frame
/// degenerates.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomEllipticField {
    pub seed: u64,
    pub lambda: f64,
    log_mu: TrigPoly,
    angle: TrigPoly,
    normalization: f64,
}

impl RandomEllipticField {
    pub fn new(seed: u64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Invalid(format!("ellipticity must lie in (0, 1], got {lambda}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log_mu = TrigPoly::random(&mut rng, 2);
        let angle = TrigPoly::random(&mut rng, 2);
        // Bound |p| on a fine sample, then pad so the bound is safe between samples.
        let mut max: f64 = 0.0;
        for a in 0..256 {
            for b in 0..128 {
                let t = [
                    -std::f64::consts::PI + 2.0 * std::f64::consts::PI * a as f64 / 256.0,
                    -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * b as f64 / 127.0,
                ];
                max = max.max(log_mu.eval(t).abs());
            }
        }
        Ok(RandomEllipticField {
            seed,
            lambda,
            log_mu,
            angle,
            normalization: 1.05 * max.max(1e-12),
        })
    }

    /// Tangential block in the frame `(e_theta1, e_theta2)`.
    pub fn tangential_block(&self, theta: [f64; 2]) -> Matrix2<f64> {
        let s = (theta[1].cos().powi(2) * self.log_mu.eval(theta) / self.normalization).clamp(-1.0, 1.0);
        let mu = self.lambda.powf(-s);
        let phi = std::f64::consts::PI * self.angle.eval(theta);
        let (sn, cs) = phi.sin_cos();
        let rot = Matrix2::new(cs, -sn, sn, cs);
        rot * Matrix2::new(mu, 0.0, 0.0, 1.0 / mu) * rot.transpose()
    }
}

impl CoefficientField for RandomEllipticField {
    fn dim(&self) -> usize {
        3
    }

    fn matrix_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != 3 {
            return Err(Error::Dimension {
                expected: 3,
                got: x.len(),
            });
        }
        let xv = Vector3::from_column_slice(x.as_slice());
        if xv.norm() == 0.0 {
            return Err(Error::Origin);
        }
        let theta = spherical_angles(&xv);
        let t = self.tangential_block(theta);
        let local = Matrix3::new(
            1.0,
            0.0,
            0.0, //
            0.0,
            t[(0, 0)],
            t[(0, 1)], //
            0.0,
            t[(1, 0)],
            t[(1, 1)],
        );
        let r = spherical_frame(theta);
        let a = r * local * r.transpose();
        Ok(DMatrix::from_column_slice(3, 3, a.as_slice()))
    }
}
