//! Numerical laboratory for homogeneous order-one solutions of
//! non-divergence elliptic equations.
//!
//! The crate covers the coordinate calculus of homogeneous functions
//! ([`calculus`]), construction and certification of elliptic coefficient
//! fields ([`coefficients`]), the geometry of the gradient surface
//! `grad u(S^2)` ([`surface`]), the Lawson-Osserman cone in `R^4`
//! ([`lawson_osserman`]) and the rigidity experiments in `R^3`
//! ([`rigidity`]).

pub mod calculus;
pub mod coefficients;
pub mod error;
pub mod expr;
pub mod grid;
pub mod jet;
pub mod lawson_osserman;
pub mod linalg;
pub mod profiles;
pub mod rigidity;
pub mod surface;

pub use calculus::{HessianClass, HessianSample, HomogeneousFunction, Profile, ProfileForm};
pub use error::{Error, Result};
