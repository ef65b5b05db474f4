//! Truncated multivariate Taylor jets.
//!
//! A jet carries the value of an expression together with all of its partial
//! derivatives up to a fixed order with respect to `N` seeded variables.
//! Arithmetic and the primitive functions propagate derivatives by the
//! product rule and the order-three chain rule, so derivatives are exact up to
//! floating point rounding.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar operations shared by plain `f64` and the jet types.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn asin(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    fn scale(self, c: f64) -> Self {
        self * Self::constant(c)
    }
}

impl Real for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn asin(self) -> Self {
        f64::asin(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// Derivatives `[f, f', f'', f''']` of a univariate primitive at a point.
type Univariate = [f64; 4];

fn sqrt_derivs(v: f64) -> Univariate {
    let s = v.sqrt();
    [s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v)]
}

fn sin_derivs(v: f64) -> Univariate {
    let (s, c) = v.sin_cos();
    [s, c, -s, -c]
}

fn cos_derivs(v: f64) -> Univariate {
    let (s, c) = v.sin_cos();
    [c, -s, -c, s]
}

fn exp_derivs(v: f64) -> Univariate {
    let e = v.exp();
    [e, e, e, e]
}

fn ln_derivs(v: f64) -> Univariate {
    [v.ln(), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)]
}

fn asin_derivs(v: f64) -> Univariate {
    let q = 1.0 - v * v;
    let sq = q.sqrt();
    [v.asin(), 1.0 / sq, v / (q * sq), (1.0 + 2.0 * v * v) / (q * q * sq)]
}

fn atan_derivs(v: f64) -> Univariate {
    let q = 1.0 + v * v;
    [v.atan(), 1.0 / q, -2.0 * v / (q * q), (6.0 * v * v - 2.0) / (q * q * q)]
}

fn recip_derivs(v: f64) -> Univariate {
    let r = 1.0 / v;
    [r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]
}

fn powi_derivs(v: f64, n: i32) -> Univariate {
    let nf = f64::from(n);
    [
        v.powi(n),
        nf * v.powi(n - 1),
        nf * (nf - 1.0) * v.powi(n - 2),
        nf * (nf - 1.0) * (nf - 2.0) * v.powi(n - 3),
    ]
}

fn powf_derivs(v: f64, p: f64) -> Univariate {
    [
        v.powf(p),
        p * v.powf(p - 1.0),
        p * (p - 1.0) * v.powf(p - 2.0),
        p * (p - 1.0) * (p - 2.0) * v.powf(p - 3.0),
    ]
}

macro_rules! impl_real_via_chain {
    ($ty:ident) => {
        impl<const N: usize> Real for $ty<N> {
            fn constant(c: f64) -> Self {
                $ty::constant(c)
            }
            fn value(&self) -> f64 {
                self.v
            }
            fn sqrt(self) -> Self {
                self.chain(sqrt_derivs(self.v))
            }
            fn sin(self) -> Self {
                self.chain(sin_derivs(self.v))
            }
            fn cos(self) -> Self {
                self.chain(cos_derivs(self.v))
            }
            fn exp(self) -> Self {
                self.chain(exp_derivs(self.v))
            }
            fn ln(self) -> Self {
                self.chain(ln_derivs(self.v))
            }
            fn asin(self) -> Self {
                self.chain(asin_derivs(self.v))
            }
            fn atan2(self, x: Self) -> Self {
                // Differentiate through atan of the better-conditioned ratio,
                // then pin the value to the four-quadrant angle.
                let angle = self.v.atan2(x.v);
                let mut out = if x.v.abs() >= self.v.abs() {
                    let q = self / x;
                    q.chain(atan_derivs(q.v))
                } else {
                    let q = x / self;
                    -q.chain(atan_derivs(q.v))
                };
                out.v = angle;
                out
            }
            fn powi(self, n: i32) -> Self {
                match n {
                    0 => Self::constant(1.0),
                    1 => self,
                    2 => self * self,
                    _ => self.chain(powi_derivs(self.v, n)),
                }
            }
            fn powf(self, p: f64) -> Self {
                if p == 1.0 {
                    self
                } else if p == 0.0 {
                    Self::constant(1.0)
                } else {
                    self.chain(powf_derivs(self.v, p))
                }
            }
            fn scale(self, c: f64) -> Self {
                self.scaled(c)
            }
        }

        impl<const N: usize> Neg for $ty<N> {
            type Output = Self;
            fn neg(self) -> Self {
                self.scaled(-1.0)
            }
        }

        impl<const N: usize> Sub for $ty<N> {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                self + rhs.scaled(-1.0)
            }
        }

        impl<const N: usize> Div for $ty<N> {
            type Output = Self;
            // a / b = a * (1/b), with 1/b through the chain rule.
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn div(self, rhs: Self) -> Self {
                self * rhs.chain(recip_derivs(rhs.v))
            }
        }
    };
}

/// Second-order jet in `N` variables: value, gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet2<N> {
    pub fn constant(c: f64) -> Self {
        Jet2 {
            v: c,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    /// The `i`-th coordinate function evaluated at `value`.
    pub fn variable(value: f64, i: usize) -> Self {
        let mut j = Self::constant(value);
        j.g[i] = 1.0;
        j
    }

    /// Seeds all `N` coordinates at `point`.
    pub fn seed(point: &[f64; N]) -> [Self; N] {
        std::array::from_fn(|i| Self::variable(point[i], i))
    }

    fn scaled(mut self, c: f64) -> Self {
        self.v *= c;
        for i in 0..N {
            self.g[i] *= c;
            for j in 0..N {
                self.h[i][j] *= c;
            }
        }
        self
    }

    fn chain(&self, d: Univariate) -> Self {
        let mut out = Self::constant(d[0]);
        for i in 0..N {
            out.g[i] = d[1] * self.g[i];
            for j in 0..N {
                out.h[i][j] = d[2] * self.g[i] * self.g[j] + d[1] * self.h[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet2<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
            for j in 0..N {
                self.h[i][j] += rhs.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for Jet2<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self, &rhs);
        let mut out = Self::constant(a.v * b.v);
        for i in 0..N {
            out.g[i] = a.g[i] * b.v + a.v * b.g[i];
            for j in 0..N {
                out.h[i][j] = a.h[i][j] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[i][j];
            }
        }
        out
    }
}

impl_real_via_chain!(Jet2);

/// Third-order jet in `N` variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
    pub t: [[[f64; N]; N]; N],
}

impl<const N: usize> Jet3<N> {
    pub fn constant(c: f64) -> Self {
        Jet3 {
            v: c,
            g: [0.0; N],
            h: [[0.0; N]; N],
            t: [[[0.0; N]; N]; N],
        }
    }

    pub fn variable(value: f64, i: usize) -> Self {
        let mut j = Self::constant(value);
        j.g[i] = 1.0;
        j
    }

    pub fn seed(point: &[f64; N]) -> [Self; N] {
        std::array::from_fn(|i| Self::variable(point[i], i))
    }

    fn scaled(mut self, c: f64) -> Self {
        self.v *= c;
        for i in 0..N {
            self.g[i] *= c;
            for j in 0..N {
                self.h[i][j] *= c;
                for k in 0..N {
                    self.t[i][j][k] *= c;
                }
            }
        }
        self
    }

    fn chain(&self, d: Univariate) -> Self {
        let a = self;
        let mut out = Self::constant(d[0]);
        for i in 0..N {
            out.g[i] = d[1] * a.g[i];
            for j in 0..N {
                out.h[i][j] = d[2] * a.g[i] * a.g[j] + d[1] * a.h[i][j];
                for k in 0..N {
                    out.t[i][j][k] = d[3] * a.g[i] * a.g[j] * a.g[k]
                        + d[2] * (a.h[i][j] * a.g[k] + a.h[i][k] * a.g[j] + a.h[j][k] * a.g[i])
                        + d[1] * a.t[i][j][k];
                }
            }
        }
        out
    }

    /// Drops the third-order part.
    pub fn truncate(&self) -> Jet2<N> {
        Jet2 {
            v: self.v,
            g: self.g,
            h: self.h,
        }
    }
}

impl<const N: usize> Add for Jet3<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
            for j in 0..N {
                self.h[i][j] += rhs.h[i][j];
                for k in 0..N {
                    self.t[i][j][k] += rhs.t[i][j][k];
                }
            }
        }
        self
    }
}

impl<const N: usize> Mul for Jet3<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self, &rhs);
        let mut out = Self::constant(a.v * b.v);
        for i in 0..N {
            out.g[i] = a.g[i] * b.v + a.v * b.g[i];
            for j in 0..N {
                out.h[i][j] = a.h[i][j] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[i][j];
                for k in 0..N {
                    out.t[i][j][k] = a.t[i][j][k] * b.v
                        + a.h[i][j] * b.g[k]
                        + a.h[i][k] * b.g[j]
                        + a.h[j][k] * b.g[i]
                        + a.g[i] * b.h[j][k]
                        + a.g[j] * b.h[i][k]
                        + a.g[k] * b.h[i][j]
                        + a.v * b.t[i][j][k];
                }
            }
        }
        out
    }
}

impl_real_via_chain!(Jet3);
