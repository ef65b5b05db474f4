use std::io::Write;
use std::path::Path;

use nalgebra::{DVector, Matrix2};
use serde::Serialize;
use serde_json::{json, Value};

use rigidity_core::calculus::{default_tau_zero, hessian_sample};
use rigidity_core::coefficients::{
    divergence_coefficients, reduce_to_chart, reduce_to_sphere, synthesize_field, CoefficientField, IdentityField,
    SynthesizedField, DEFAULT_KAPPA_MAX,
};
use rigidity_core::grid::{S2Grid, SphereGrid};
use rigidity_core::lawson_osserman::{self, DEFAULT_GRID, DEFAULT_SAMPLE_CAP};
use rigidity_core::profiles;
use rigidity_core::rigidity::{
    minimize_residual, obstruction_study, random_init, DiscreteOperator, Method, RandomEllipticField, Scheme,
    SearchOptions,
};
use rigidity_core::surface::{
    hessian_scale, leading_polynomial, saddle_scan, singular_set_scan, supporting_plane_probe, surface_csv,
    surface_dump, surface_sample, DEFAULT_REFINEMENTS,
};
use rigidity_core::{HessianClass, HomogeneousFunction};

use crate::config::{arity, positive, positive_count, FileConfig, Resolved};
use crate::{
    CliError, HessianArgs, ObstructionArgs, Outcome, ReduceArgs, ScanArgs, SearchArgs, SurfaceArgs, SynthesizeArgs,
    VerifyLoArgs,
};

pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn profile(r: &mut Resolved, flag: Option<String>, file: &FileConfig) -> Result<HomogeneousFunction, CliError> {
    let name = r.require("profile", flag, file.profile.clone())?;
    Ok(profiles::lookup(&name)?)
}

fn sphere_grid(u: &HomogeneousFunction, n: usize) -> Result<SphereGrid, CliError> {
    SphereGrid::for_dimension(u.dim(), n)
        .ok_or_else(|| CliError::Config(format!("no sphere grid for dimension {}", u.dim())))
}

fn matrix2(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// The tau used by scans when none is given: scaled by the largest Hessian on `grid`.
fn tau_or_default(tau: Option<f64>, u: &HomogeneousFunction, grid: &SphereGrid) -> Result<f64, CliError> {
    match tau {
        Some(t) => positive("tau", t),
        None => Ok(default_tau_zero(hessian_scale(u, grid)?)),
    }
}

pub fn list_profiles(as_json: bool) -> Result<String, CliError> {
    let listing = profiles::list_profiles();
    if as_json {
        let mut text = serde_json::to_string_pretty(&listing).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        return Ok(text);
    }
    let mut out = String::from("name\tdim\tformula\treference\n");
    for p in listing {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", p.name, p.dim, p.formula, p.citation));
    }
    Ok(out)
}

pub fn hessian(a: HessianArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let u = profile(r, a.profile, file)?;
    let point = r.require("point", a.point, file.point.clone())?;
    if point.len() != u.dim() {
        return Err(CliError::Config(format!(
            "point has {} components, profile `{}` lives in R^{}",
            point.len(),
            u.name(),
            u.dim()
        )));
    }
    let tau = r.pick("tau", a.tau, file.tau, 1e-8);
    let sample = hessian_sample(&u, &DVector::from_vec(point), positive("tau", tau)?)?;
    Outcome::ok(&sample)
}

#[derive(Serialize)]
struct SurfaceResult {
    nodes: usize,
    tau_zero: f64,
    counts: std::collections::BTreeMap<&'static str, usize>,
    sample: Option<rigidity_core::surface::SurfaceSample>,
    csv: Option<String>,
}

pub fn surface(a: SurfaceArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let u = profile(r, a.profile, file)?;
    if u.dim() != 3 {
        return Err(CliError::Config("surface needs a profile on R^3".into()));
    }
    let n = positive_count("grid", r.pick("grid", a.grid, file.grid, 64))?;
    let grid = S2Grid::with_resolution(n);
    let tau_flag = r.pick_opt("tau", a.tau, file.tau);
    let tau = tau_or_default(tau_flag, &u, &SphereGrid::S2(grid))?;
    let rows = surface_dump(&u, grid, tau)?;
    let mut counts = std::collections::BTreeMap::new();
    for class in [
        HessianClass::Zero,
        HessianClass::Saddle,
        HessianClass::SemidefiniteNonzero,
        HessianClass::Definite,
    ] {
        counts.insert(class.as_str(), rows.iter().filter(|row| row.class == class).count());
    }
    let sample = match r.pick_opt("point", a.point, file.point.clone()) {
        Some(p) => Some(surface_sample(&u, &arity::<3>("point", &p)?, tau)?),
        None => None,
    };
    let csv = r.pick_opt("csv", a.csv, file.csv.clone());
    if let Some(path) = &csv {
        write_file(path, &surface_csv(&rows))?;
    }
    Outcome::ok(&SurfaceResult {
        nodes: rows.len(),
        tau_zero: tau,
        counts,
        sample,
        csv: csv.map(|p| p.display().to_string()),
    })
}

pub fn scan(a: ScanArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let u = profile(r, a.profile, file)?;
    let n = positive_count("grid", r.pick("grid", a.grid, file.grid, 64))?;
    let grid = sphere_grid(&u, n)?;
    let tau = r
        .pick_opt("tau", a.tau, file.tau)
        .map(|t| positive("tau", t))
        .transpose()?;
    let mut out = serde_json::Map::new();
    out.insert("saddle".into(), json!(saddle_scan(&u, &grid, tau)?));
    if let SphereGrid::S2(base) = grid {
        let refinements = r.pick("refinements", a.refinements, file.refinements, DEFAULT_REFINEMENTS);
        out.insert(
            "singular_set".into(),
            json!(singular_set_scan(&u, base, tau, refinements)?),
        );
        if let Some(nu) = r.pick_opt("nu", a.nu, file.nu.clone()) {
            out.insert(
                "probe".into(),
                json!(supporting_plane_probe(&u, arity::<3>("nu", &nu)?, base)?),
            );
        }
        if let Some(p) = r.pick_opt("leading", a.leading, file.leading.clone()) {
            let k_max = r.pick("k-max", a.k_max, file.k_max, 4);
            // Fit failures are findings about the profile, not input errors.
            let fit = match leading_polynomial(&u, arity::<2>("leading", &p)?, k_max) {
                Ok(lp) => json!(lp),
                Err(e) => json!({ "error": e.to_string() }),
            };
            out.insert("leading_polynomial".into(), fit);
        }
    }
    Outcome::ok(&Value::Object(out))
}

pub fn verify_lo(a: VerifyLoArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let n = positive_count("grid", r.pick("grid", a.grid, file.grid, DEFAULT_GRID))?;
    let cap = positive_count("cap", r.pick("cap", a.cap, file.cap, DEFAULT_SAMPLE_CAP))?;
    let tolerance = positive("tolerance", r.pick("tolerance", a.tolerance, file.tolerance, 1e-6))?;
    let report = lawson_osserman::verify_lo(n, cap)?;
    let passed = report.residual_max < tolerance;
    Outcome::checked(&report, passed)
}

pub fn synthesize(a: SynthesizeArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let u = profile(r, a.profile, file)?;
    let n = positive_count("grid", r.pick("grid", a.grid, file.grid, 32))?;
    let kappa_max = positive(
        "kappa-max",
        r.pick("kappa-max", a.kappa_max, file.kappa_max, DEFAULT_KAPPA_MAX),
    )?;
    let tau = r
        .pick_opt("tau", a.tau, file.tau)
        .map(|t| positive("tau", t))
        .transpose()?;
    let grid = sphere_grid(&u, n)?;
    let report = synthesize_field(&u, &grid, kappa_max, tau)?;
    if let Some(path) = r.pick_opt("csv", a.csv, file.csv.clone()) {
        write_file(&path, &report.feasibility_csv())?;
    }
    if let Some(path) = r.pick_opt("field-json", a.field_json, file.field_json.clone()) {
        let text = serde_json::to_string(&report.sampled_field()).map_err(|e| CliError::Io(e.to_string()))?;
        write_file(&path, &text)?;
    }
    let mut value = json!(report);
    value["nodes"] = json!(report.points.len());
    value["feasible"] = json!(report.feasible_count());
    Outcome::ok(&value)
}

fn coefficient_field(
    spec: &str,
    u: Option<&HomogeneousFunction>,
    kappa_max: f64,
    tau: Option<f64>,
    lambda: f64,
) -> Result<Box<dyn CoefficientField>, CliError> {
    if spec == "identity" {
        return Ok(Box::new(IdentityField { dim: 3 }));
    }
    if spec == "synthesized" {
        let u = u.ok_or_else(|| CliError::Config("field `synthesized` needs a profile".into()))?;
        let tau_zero = tau_or_default(tau, u, &sphere_grid(u, 32)?)?;
        return Ok(Box::new(SynthesizedField {
            u: u.clone(),
            kappa_max,
            tau_zero,
        }));
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed = seed
            .parse()
            .map_err(|_| CliError::Config(format!("bad field seed in `{spec}`")))?;
        return Ok(Box::new(RandomEllipticField::new(seed, lambda)?));
    }
    Err(CliError::Config(format!("unknown field `{spec}`")))
}

pub fn reduce(a: ReduceArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let u = match r.pick_opt("profile", a.profile, file.profile.clone()) {
        Some(name) => Some(profiles::lookup(&name)?),
        None => None,
    };
    let default_field = if u.is_some() { "synthesized" } else { "identity" };
    let spec = r.pick("field", a.field, file.field.clone(), default_field.to_string());
    let kappa_max = positive(
        "kappa-max",
        r.pick("kappa-max", a.kappa_max, file.kappa_max, DEFAULT_KAPPA_MAX),
    )?;
    let tau = r.pick_opt("tau", a.tau, file.tau);
    let lambda = positive("lambda", r.pick("lambda", a.lambda, file.lambda, 0.5))?;
    let chart = arity::<2>("chart", &r.pick("chart", a.chart, file.chart.clone(), vec![0.0, 0.0]))?;
    let theta = arity::<2>("theta", &r.pick("theta", a.theta, file.theta.clone(), vec![0.0, 0.0]))?;
    let field = coefficient_field(&spec, u.as_ref(), kappa_max, tau, lambda)?;

    let reduced = reduce_to_chart(field.as_ref())?;
    let m = reduced.matrix_at(chart)?;
    let divergence = divergence_coefficients(&m).ok().map(|b| matrix2(&b));
    let sphere = reduce_to_sphere(field.as_ref())?;
    let k = sphere.coefficients_at(theta)?;
    let residual = match &u {
        Some(u) => Some(sphere.residual(u, theta)?),
        None => None,
    };
    Outcome::ok(&json!({
        "chart": {
            "point": chart,
            "matrix": matrix2(&m),
            "ellipticity": reduced.ellipticity_at(chart)?,
            "divergence_form": divergence,
        },
        "sphere": {
            "theta": theta,
            "a": matrix2(&k.a),
            "b": [k.b[0], k.b[1]],
            "c": k.c,
            "profile_residual": residual,
        },
    }))
}

#[derive(Serialize)]
struct SearchRun {
    seed: u64,
    #[serde(flatten)]
    result: rigidity_core::rigidity::SearchResult,
}

pub fn search(a: SearchArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let spec = r.pick("field", a.field, file.field.clone(), "identity".to_string());
    let n = positive_count("grid", r.pick("grid", a.grid, file.grid, 32))?;
    let seeds = r.pick("seeds", a.seeds, file.seeds.clone(), vec![1]);
    let lambda = positive("lambda", r.pick("lambda", a.lambda, file.lambda, 0.5))?;
    let method: Method = r
        .pick("method", a.method, file.method.clone(), "inverse-iteration".to_string())
        .parse()?;
    let scheme: Scheme = r
        .pick("scheme", a.scheme, file.scheme.clone(), "spectral".to_string())
        .parse()?;
    let defaults = SearchOptions::default();
    let options = SearchOptions {
        method,
        max_iterations: positive_count(
            "max-iterations",
            r.pick(
                "max-iterations",
                a.max_iterations,
                file.max_iterations,
                defaults.max_iterations,
            ),
        )?,
        tolerance: positive(
            "tolerance",
            r.pick("tolerance", a.tolerance, file.tolerance, defaults.tolerance),
        )?,
        shift: positive("shift", r.pick("shift", a.shift, file.shift, defaults.shift))?,
    };
    let max_nonlinearity = r
        .pick_opt("max-nonlinearity", a.max_nonlinearity, file.max_nonlinearity)
        .map(|v| positive("max-nonlinearity", v))
        .transpose()?;
    if spec == "synthesized" {
        return Err(CliError::Config(
            "search takes `identity` or `random:<seed>` fields".into(),
        ));
    }
    let field = coefficient_field(&spec, None, DEFAULT_KAPPA_MAX, None, lambda)?;
    // The double-Fourier discretization never evaluates at the poles.
    let op = reduce_to_sphere(field.as_ref())?.with_pole_margin(0.0);
    let disc = DiscreteOperator::assemble(&op, S2Grid::with_resolution(n), scheme)?;
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let result = minimize_residual(&disc, &random_init(&disc, seed), &options)?;
        runs.push(SearchRun { seed, result });
    }
    if let Some(path) = r.pick_opt("csv", a.csv, file.csv.clone()) {
        let mut text = String::from("seed,iteration,residual,nonlinearity\n");
        for run in &runs {
            for h in &run.result.history {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    run.seed, h.iteration, h.residual, h.nonlinearity
                ));
            }
        }
        write_file(&path, &text)?;
    }
    let passed = max_nonlinearity.is_none_or(|limit| runs.iter().all(|run| run.result.nonlinearity <= limit));
    Outcome::checked(&json!({ "nodes": disc.len(), "runs": runs }), passed)
}

pub fn obstruction(a: ObstructionArgs, file: &FileConfig, r: &mut Resolved) -> Result<Outcome, CliError> {
    let u = profile(r, a.profile, file)?;
    let grids = r.pick("grids", a.grids, file.grids.clone(), vec![16, 32, 64, 128]);
    if grids.is_empty() || grids.contains(&0) {
        return Err(CliError::Config(
            "`grids` must be a non-empty list of positive resolutions".into(),
        ));
    }
    let kappa_max = positive(
        "kappa-max",
        r.pick("kappa-max", a.kappa_max, file.kappa_max, DEFAULT_KAPPA_MAX),
    )?;
    let curve = obstruction_study(&u, &grids, kappa_max)?;
    if let Some(path) = r.pick_opt("csv", a.csv, file.csv.clone()) {
        write_file(&path, &curve.to_csv())?;
    }
    Outcome::ok(&curve)
}
