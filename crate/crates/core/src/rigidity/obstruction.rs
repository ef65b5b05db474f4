use serde::{Deserialize, Serialize};

use crate::calculus::HomogeneousFunction;
use crate::coefficients::synthesize_field;
use crate::error::{Error, Result};
use crate::grid::SphereGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionEntry {
    pub n: usize,
    pub points: usize,
    /// Certificate over the synthesized points; `None` if none succeeded.
    pub lambda: Option<f64>,
    pub infeasible_count: usize,
    pub condition_exceeded_count: usize,
    /// Tangential eigenvalues at the first infeasible point, if any.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionCurve {
    pub profile: String,
    pub dim: usize,
    pub kappa_max: f64,
    pub entries: Vec<ObstructionEntry>,
}

impl ObstructionCurve {
    /// CSV with header `N,lambda,infeasible_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,lambda,infeasible_count\n");
        for e in &self.entries {
            let lambda = e.lambda.map(|l| l.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", e.n, lambda, e.infeasible_count));
        }
        out
    }
}

/// Runs coefficient synthesis at each resolution (sorted ascending).
pub fn obstruction_study(u: &HomogeneousFunction, resolutions: &[usize], kappa_max: f64) -> Result<ObstructionCurve> {
    let mut ns = resolutions.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut entries = Vec::with_capacity(ns.len());
    for n in ns {
        let grid = SphereGrid::for_dimension(u.dim(), n)
            .ok_or_else(|| Error::Invalid(format!("no sphere grid in dimension {}", u.dim())))?;
        let report = synthesize_field(u, &grid, kappa_max, None)?;
        let witness = report.infeasible.first().map(|&idx| {
            let x = grid.point(idx);
            let d = u.derivatives(x.as_slice()).expect("evaluated during synthesis");
            crate::calculus::classify_hessian(&d.hessian, &x, report.tau_zero).tangential_eigenvalues
        });
        entries.push(ObstructionEntry {
            n,
            points: grid.len(),
            lambda: report.lambda,
            infeasible_count: report.infeasible.len(),
            condition_exceeded_count: report.condition_exceeded.len(),
            witness,
        });
    }
    Ok(ObstructionCurve {
        profile: u.name().to_string(),
        dim: u.dim(),
        kappa_max,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::DEFAULT_KAPPA_MAX;
    use crate::profiles;

    #[test]
    fn linear_profile_has_unit_certificate() {
        let u = profiles::lookup("linear:x1").unwrap();
        let c = obstruction_study(&u, &[32, 16], DEFAULT_KAPPA_MAX).unwrap();
        assert_eq!(c.entries.iter().map(|e| e.n).collect::<Vec<_>>(), vec![16, 32]);
        for e in &c.entries {
            assert_eq!(e.lambda, Some(1.0));
            assert_eq!(e.infeasible_count, 0);
        }
        assert!(c.to_csv().starts_with("N,lambda,infeasible_count\n16,1,0\n"));
    }
}
