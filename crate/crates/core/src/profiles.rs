//! Registry of bundled profiles, addressable by name.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{HomogeneousFunction, Profile};
use crate::error::{Error, Result};
use crate::expr::Expr;

fn x(i: usize) -> Expr {
    Expr::var(i)
}

const LO_CITATION: &str = "Lawson-Osserman minimal cone R^4 -> R^3, Acta Math. 139 (1977)";

/// `(x1^2 + x2^2 - x3^2 - x4^2) / |x|`, the saddle scalar of the cone.
pub fn lo_scalar_expr() -> Expr {
    (x(0).powi(2) + x(1).powi(2) - x(2).powi(2) - x(3).powi(2)) / Expr::norm(4)
}

/// Components of the Lawson-Osserman map.
pub fn lo_component_exprs() -> [Expr; 3] {
    let c = 5f64.sqrt() / 2.0;
    [
        c * lo_scalar_expr(),
        c * (2.0 * x(0) * x(2) + 2.0 * x(1) * x(3)) / Expr::norm(4),
        c * (2.0 * x(1) * x(2) - 2.0 * x(0) * x(3)) / Expr::norm(4),
    ]
}

/// All bundled profiles, in listing order.
pub fn bundled() -> Vec<Profile> {
    let r3 = || Expr::norm(3);
    let th1 = || Expr::var(0);
    let th2 = || Expr::var(1);
    vec![
        Profile::ambient("linear:x1", 3, "x1", x(0)).cite("linear function"),
        Profile::ambient("linear:x2", 3, "x2", x(1)).cite("linear function"),
        Profile::ambient("linear:x3", 3, "x3", x(2)).cite("linear function"),
        Profile::ambient(
            "linear:mix",
            3,
            "0.3 x1 - 1.2 x2 + 0.7 x3",
            0.3 * x(0) - 1.2 * x(1) + 0.7 * x(2),
        )
        .cite("linear function"),
        Profile::chart(
            "chart:x3",
            3,
            "h = 1 on x3 = +-1 (u = x3)",
            Expr::c(1.0),
            Some(Expr::c(-1.0)),
        )
        .cite("projective chart of a linear function"),
        Profile::chart("chart:x1sq", 3, "h = x1^2 on x3 = 1 (u = x1^2/x3)", x(0).powi(2), None)
            .cite("projective chart, upper half-space only"),
        Profile::chart("chart:x1x2", 3, "h = x1 x2 on x3 = 1 (u = x1 x2/x3)", x(0) * x(1), None)
            .cite("projective chart, upper half-space only"),
        Profile::ambient(
            "q2-over-r",
            3,
            "(x1^2 - x2^2)/|x|",
            (x(0).powi(2) - x(1).powi(2)) / r3(),
        )
        .cite("nonlinear order-one test profile; definite Hessian at +-e1"),
        Profile::ambient(
            "q-mixed",
            3,
            "(x1 x2 + 2 x2 x3 - x3^2)/|x|",
            (x(0) * x(1) + 2.0 * x(1) * x(2) - x(2).powi(2)) / r3(),
        )
        .cite("nonlinear order-one test profile"),
        Profile::ambient("cubic-over-r2", 3, "x1 x2 x3/|x|^2", x(0) * x(1) * x(2) / r3().powi(2))
            .cite("nonlinear order-one test profile"),
        Profile::ambient("exp-lon", 3, "|x| exp(x1/|x|)", r3() * (x(0) / r3()).exp())
            .cite("nonlinear order-one test profile"),
        Profile::spherical("sph:sin-lat", "g = sin(theta2) (u = x3)", th2().sin())
            .cite("spherical form of a linear function"),
        Profile::spherical(
            "sph:cos-lat-cos-lon",
            "g = cos(theta2) cos(theta1) (u = x1)",
            th2().cos() * th1().cos(),
        )
        .cite("spherical form of a linear function"),
        Profile::spherical(
            "sph:y20",
            "g = 3 sin(theta2)^2 - 1 (degree-2 harmonic, u = (2 x3^2 - x1^2 - x2^2)/|x|)",
            3.0 * th2().sin().powi(2) - 1.0,
        )
        .cite("spherical harmonic of degree 2"),
        Profile::spherical(
            "local:harmonic3",
            "g = theta1^3 - 3 theta1 theta2^2 (local germ near theta = 0)",
            th1().powi(3) - 3.0 * th1() * th2().powi(2),
        )
        .cite("harmonic cubic germ, leading-polynomial test"),
        Profile::ambient("lo-scalar", 4, "(x1^2 + x2^2 - x3^2 - x4^2)/|x|", lo_scalar_expr()).cite(LO_CITATION),
        Profile::ambient(
            "lo-f1",
            4,
            "(sqrt5/2)(x1^2 + x2^2 - x3^2 - x4^2)/|x|",
            lo_component_exprs()[0].clone(),
        )
        .cite(LO_CITATION),
        Profile::ambient(
            "lo-f2",
            4,
            "(sqrt5/2)(2 x1 x3 + 2 x2 x4)/|x|",
            lo_component_exprs()[1].clone(),
        )
        .cite(LO_CITATION),
        Profile::ambient(
            "lo-f3",
            4,
            "(sqrt5/2)(2 x2 x3 - 2 x1 x4)/|x|",
            lo_component_exprs()[2].clone(),
        )
        .cite(LO_CITATION),
        Profile::ambient("linear4:x1", 4, "x1", x(0)).cite("linear function"),
    ]
}

/// Looks a bundled profile up by name (homogeneity order 1).
pub fn lookup(name: &str) -> Result<HomogeneousFunction> {
    if let Some(seed) = name.strip_prefix("random:") {
        let seed = seed.parse().map_err(|_| Error::UnknownProfile(name.to_string()))?;
        return Ok(HomogeneousFunction::new(random_profile(seed)));
    }
    bundled()
        .into_iter()
        .find(|p| p.name == name)
        .map(HomogeneousFunction::new)
        .ok_or_else(|| Error::UnknownProfile(name.to_string()))
}

/// Bundled profiles of dimension `n` that are globally defined order-one
/// functions on `R^n \ {0}` (excludes single-chart and local germs).
pub fn global_order_one(n: usize) -> Vec<HomogeneousFunction> {
    bundled()
        .into_iter()
        .filter(|p| {
            p.dim == n && !p.name.starts_with("local:") && !matches!(p.name.as_str(), "chart:x1sq" | "chart:x1x2")
        })
        .map(HomogeneousFunction::new)
        .collect()
}

/// A random smooth order-one function on `R^3 \ {0}`:
/// `l(x) + Q(x)/|x| + C(x)/|x|^2 + s |x| sin(w . x/|x|)` with seeded
/// coefficients. Addressable as `random:<seed>`.
pub fn random_profile(seed: u64) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = || rng.random_range(-1.0..1.0);
    let r = || Expr::norm(3);
    let mut linear = Expr::c(0.0);
    for i in 0..3 {
        linear = linear + coef() * x(i);
    }
    let mut quad = Expr::c(0.0);
    for i in 0..3 {
        for j in i..3 {
            quad = quad + coef() * x(i) * x(j);
        }
    }
    let mut cubic = Expr::c(0.0);
    for (i, j, k) in [(0, 0, 1), (1, 2, 2), (0, 1, 2), (2, 2, 2), (0, 0, 0)] {
        cubic = cubic + coef() * x(i) * x(j) * x(k);
    }
    let w = [coef(), coef(), coef()];
    let s = 0.5 * coef();
    let phase = (w[0] * x(0) + w[1] * x(1) + w[2] * x(2)) / r();
    let expr = linear + quad / r() + cubic / r().powi(2) + s * r() * phase.sin();
    Profile::ambient(
        &format!("random:{seed}"),
        3,
        "l(x) + Q(x)/|x| + C(x)/|x|^2 + s |x| sin(w.x/|x|)",
        expr,
    )
    .cite("seeded random order-one profile")
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileListing {
    pub name: String,
    pub dim: usize,
    pub formula: String,
    pub citation: String,
}

/// Deterministic listing of the registry.
pub fn list_profiles() -> Vec<ProfileListing> {
    bundled()
        .into_iter()
        .map(|p| ProfileListing {
            name: p.name,
            dim: p.dim,
            formula: p.formula,
            citation: p.citation,
        })
        .collect()
}
