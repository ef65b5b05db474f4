use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::discrete::DiscretizedProfile;
use super::operator::{constant_component, nonlinearity_norm, DiscreteOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Shifted inverse iteration on the normal equations
    /// `(L^T W L + sigma M) y = M g`, renormalized each step.
    #[default]
    InverseIteration,
    /// Projected gradient descent on `||g||_M = 1` with Armijo backtracking.
    GradientDescent,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-iteration" | "inverse_iteration" => Ok(Method::InverseIteration),
            "gradient-descent" | "gradient_descent" => Ok(Method::GradientDescent),
            other => Err(Error::Invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub method: Method,
    pub max_iterations: usize,
    /// Stop once `R[g] < tolerance`.
    pub tolerance: f64,
    /// Shift `sigma` of the inverse iteration.
    pub shift: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            method: Method::InverseIteration,
            max_iterations: 10_000,
            tolerance: 1e-10,
            shift: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub nonlinearity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Converged,
    /// Iteration stalled at rounding level before reaching the tolerance.
    Stalled,
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub method: Method,
    pub status: SearchStatus,
    pub iterations: usize,
    pub residual: f64,
    pub nonlinearity: f64,
    /// Size of the constant part of `g*` (`u = c r` is not linear).
    pub constant_component: f64,
    /// `||g*||` in the weighted norm (1 by normalization).
    pub norm: f64,
    pub history: Vec<IterationRecord>,
    #[serde(skip)]
    pub profile: Option<DiscretizedProfile>,
}

fn m_norm(v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    v.component_mul(w).dot(v).sqrt()
}

/// Random nodal values in `[-1, 1)` (seeded).
pub fn random_init(op: &DiscreteOperator, seed: u64) -> DiscretizedProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..op.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    DiscretizedProfile {
        grid: op.grid,
        values,
        scheme: op.scheme,
    }
}

/// Minimizes `R[g]` over `||g||_M = 1`, starting from `init`. Failure to
/// reach the tolerance is reported in the status, not raised.
pub fn minimize_residual(
    op: &DiscreteOperator,
    init: &DiscretizedProfile,
    options: &SearchOptions,
) -> Result<SearchResult> {
    if init.grid != op.grid || init.scheme != op.scheme {
        return Err(Error::Invalid("initial profile does not match the operator".into()));
    }
    let w = &op.weights;
    let mut g = DVector::from_column_slice(&init.values);
    let norm = m_norm(&g, w);
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::Invalid("initial profile has zero norm".into()));
    }
    g /= norm;
    let record = |iteration: usize, g: &DVector<f64>, residual: f64| IterationRecord {
        iteration,
        residual,
        nonlinearity: nonlinearity_norm(&DiscretizedProfile {
            grid: op.grid,
            values: g.as_slice().to_vec(),
            scheme: op.scheme,
        }),
    };
    let mut r = op.value_of(&g);
    let mut history = vec![record(0, &g, r)];
    let mut status = SearchStatus::NonConvergence;
    if r < options.tolerance {
        status = SearchStatus::Converged;
    } else {
        match options.method {
            Method::InverseIteration => {
                // Normal matrix, with the weights folded in symmetrically.
                let wl = DVector::from_iterator(w.len(), w.iter().map(|v| v.sqrt()));
                let mut scaled = op.matrix.clone();
                for (mut row, s) in scaled.row_iter_mut().zip(wl.iter()) {
                    row *= *s;
                }
                let mut k = scaled.tr_mul(&scaled);
                for (i, wi) in w.iter().enumerate() {
                    k[(i, i)] += options.shift * wi;
                }
                let chol = k
                    .cholesky()
                    .ok_or_else(|| Error::Invalid("normal matrix is not numerically positive definite".into()))?;
                for it in 1..=options.max_iterations {
                    let mut y = chol.solve(&g.component_mul(w));
                    y /= m_norm(&y, w);
                    let r_new = op.value_of(&y);
                    if r_new > r {
                        status = SearchStatus::Stalled;
                        break;
                    }
                    let change = r - r_new;
                    g = y;
                    r = r_new;
                    history.push(record(it, &g, r));
                    if r < options.tolerance {
                        status = SearchStatus::Converged;
                        break;
                    }
                    if change <= 1e-14 * r {
                        status = SearchStatus::Stalled;
                        break;
                    }
                }
            }
            Method::GradientDescent => {
                let mut step = 1.0;
                for it in 1..=options.max_iterations {
                    let grad = op.residual_of(&g).gradient;
                    // Riemannian gradient for the metric M on the unit sphere ||g||_M = 1.
                    let mut dir = grad.component_div(w);
                    let radial = dir.component_mul(w).dot(&g);
                    dir -= &g * radial;
                    let slope = dir.component_mul(w).dot(&dir);
                    if slope == 0.0 {
                        status = SearchStatus::Stalled;
                        break;
                    }
                    let mut accepted = None;
                    for _ in 0..60 {
                        let mut trial = &g - &dir * step;
                        trial /= m_norm(&trial, w);
                        let r_trial = op.value_of(&trial);
                        if r_trial <= r - 1e-4 * step * slope {
                            accepted = Some((trial, r_trial));
                            break;
                        }
                        step *= 0.5;
                    }
                    let Some((trial, r_trial)) = accepted else {
                        status = SearchStatus::Stalled;
                        break;
                    };
                    g = trial;
                    r = r_trial;
                    step *= 2.0;
                    history.push(record(it, &g, r));
                    if r < options.tolerance {
                        status = SearchStatus::Converged;
                        break;
                    }
                }
            }
        }
    }
    let last = *history.last().expect("history has the initial record");
    let profile = DiscretizedProfile {
        grid: op.grid,
        values: g.as_slice().to_vec(),
        scheme: op.scheme,
    };
    Ok(SearchResult {
        method: options.method,
        status,
        iterations: last.iteration,
        residual: last.residual,
        nonlinearity: last.nonlinearity,
        constant_component: constant_component(&profile),
        norm: m_norm(&g, w),
        history,
        profile: Some(profile),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{reduce_to_sphere, IdentityField};
    use crate::grid::S2Grid;
    use crate::rigidity::Scheme;

    fn identity_operator(n: usize) -> DiscreteOperator {
        let id = IdentityField { dim: 3 };
        let op = reduce_to_sphere(&id).unwrap().with_pole_margin(0.0);
        DiscreteOperator::assemble(&op, S2Grid::with_resolution(n), Scheme::Spectral).unwrap()
    }

    #[test]
    fn linear_init_stops_immediately() {
        let op = identity_operator(16);
        let init = DiscretizedProfile::from_fn(op.grid, op.scheme, |x| x[0] + x[2]).unwrap();
        let res = minimize_residual(&op, &init, &SearchOptions::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.status, SearchStatus::Converged);
    }

    #[test]
    fn inverse_iteration_finds_linear_kernel() {
        let op = identity_operator(16);
        let res = minimize_residual(&op, &random_init(&op, 1), &SearchOptions::default()).unwrap();
        assert!(res.nonlinearity < 1e-6, "{:?}", res.history.last());
        assert!(res.history.windows(2).all(|w| w[1].residual <= w[0].residual));
    }

    #[test]
    fn gradient_descent_is_monotone() {
        let op = identity_operator(8);
        let opts = SearchOptions {
            method: Method::GradientDescent,
            max_iterations: 200,
            ..SearchOptions::default()
        };
        let res = minimize_residual(&op, &random_init(&op, 2), &opts).unwrap();
        assert!(res.history.windows(2).all(|w| w[1].residual <= w[0].residual));
        assert!(res.residual < res.history[0].residual);
    }
}
