//! Rigidity experiments in `R^3`: discretized spherical profiles, the
//! residual functional of the spherical equation, nonlinearity norms,
//! residual minimization and ellipticity-obstruction studies.

mod discrete;
mod fields;
mod obstruction;
mod operator;
mod search;

pub use discrete::{DiscretizedProfile, NodalDerivatives, Scheme};
pub use fields::RandomEllipticField;
pub use obstruction::{obstruction_study, ObstructionCurve, ObstructionEntry};
pub use operator::{
    constant_component, nonlinearity_norm, profile_norm, residual_functional, DiscreteOperator, Residual,
};
pub use search::{minimize_residual, random_init, IterationRecord, Method, SearchOptions, SearchResult, SearchStatus};
