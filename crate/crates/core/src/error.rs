use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is at the origin")]
    Origin,
    #[error("chart pole: x_{coordinate} = 0 is not covered by the supplied chart(s)")]
    ChartPole { coordinate: usize },
    #[error("spherical chart used within {distance:.3e} rad of a pole (limit {limit:.3e})")]
    PoleProximity { distance: f64, limit: f64 },
    #[error("finite-difference step {step} is too large for |x| = {norm}")]
    StepTooLarge { step: f64, norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("operation requires homogeneity order 1, profile has order {0}")]
    NotOrderOne(f64),
    #[error("profile is only available in dimension 3 for this operation (got {0})")]
    RequiresDimension3(usize),
    #[error("singular point: Hessian Frobenius norm {norm:.3e} is below threshold {tau:.3e}")]
    SingularPoint { norm: f64, tau: f64 },
    #[error("degenerate coefficient: A22 = {0}")]
    DegenerateA22(f64),
    #[error("coefficient field undefined at this point: {0}")]
    FieldUndefined(String),
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("profile does not vanish to order >= 3 at the point (Hessian norm {0:.3e})")]
    NoVanishing(f64),
    #[error("leading-polynomial fit is ambiguous: remainder ratios {0:?} do not decay")]
    FitAmbiguous(Vec<f64>),
    #[error("profile vanishes beyond the maximum fitted order {0}")]
    VanishesBeyondOrder(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
