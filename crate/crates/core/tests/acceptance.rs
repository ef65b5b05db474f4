//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as part of `cargo test` (custom harness).

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidity_core::calculus::{
    fd_derivatives, hessian_chart, hessian_sample, hessian_spherical, spherical_angles, FdDerivative,
    DEFAULT_POLE_MARGIN,
};
use rigidity_core::coefficients::{
    default_bumps, divergence_coefficients, reduce_to_chart, reduce_to_sphere, weak_residual, CoefficientField,
    IdentityField, Quadrature, SynthesizedField, DEFAULT_KAPPA_MAX,
};
use rigidity_core::lawson_osserman::verify_lo;
use rigidity_core::profiles;
use rigidity_core::rigidity::{
    minimize_residual, obstruction_study, random_init, DiscreteOperator, RandomEllipticField, Scheme, SearchOptions,
};
use rigidity_core::surface::surface_sample;
use rigidity_core::HomogeneousFunction;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn lawson_osserman() -> Outcome {
    let start = Instant::now();
    let r = verify_lo(32, 10_000).expect("verify-lo");
    let elapsed = start.elapsed();
    outcome(
        r.residual_max < 1e-6 && r.grid.points >= 10_000 && elapsed < Duration::from_secs(30),
        format!(
            "residual_max = {:.3e} on {} points, lambda = {:.5}, {:.2?}",
            r.residual_max, r.grid.points, r.lambda_certificate, elapsed
        ),
    )
}

fn counterexample_coefficients() -> Outcome {
    let u = profiles::lookup("lo-scalar").unwrap();
    let curve = obstruction_study(&u, &[16, 32, 64], DEFAULT_KAPPA_MAX).expect("obstruction study");
    let lambdas: Vec<f64> = curve.entries.iter().filter_map(|e| e.lambda).collect();
    let infeasible: usize = curve
        .entries
        .iter()
        .map(|e| e.infeasible_count + e.condition_exceeded_count)
        .sum();
    let max = lambdas.iter().copied().fold(f64::MIN, f64::max);
    let min = lambdas.iter().copied().fold(f64::MAX, f64::min);
    let stable = lambdas.len() == 3 && (max - min) <= 0.05 * min;
    outcome(
        infeasible == 0 && stable,
        format!(
            "lambda_N = {lambdas:.5?} (N = 16, 32, 64), infeasible = {infeasible}, limit 1/sqrt6 = {:.5}",
            1.0 / 6f64.sqrt()
        ),
    )
}

fn r3_obstruction() -> Outcome {
    let u = profiles::lookup("q2-over-r").unwrap();
    let curve = obstruction_study(&u, &[16, 32, 64, 128], DEFAULT_KAPPA_MAX).expect("obstruction study");
    let every = curve.entries.iter().all(|e| e.infeasible_count > 0);
    let mut witness_ok = true;
    for x in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]] {
        let h = u.derivatives(&x).unwrap().hessian;
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -3.0, -1.0]));
        witness_ok &= (h - expected).norm() < 1e-12;
    }
    let counts: Vec<usize> = curve.entries.iter().map(|e| e.infeasible_count).collect();
    outcome(
        every && witness_ok,
        format!("infeasible counts {counts:?} at N = 16..128, witness diag(0,-3,-1) at +-e1: {witness_ok}"),
    )
}

fn calculus_cross_validation() -> Outcome {
    let start = Instant::now();
    let names = [
        "linear:x1",
        "linear:mix",
        "q2-over-r",
        "q-mixed",
        "cubic-over-r2",
        "exp-lon",
        "sph:y20",
        "random:1",
        "random:2",
        "random:3",
    ];
    let (h, h2) = (1e-2, 5e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut analytic_max: f64 = 0.0;
    let mut fd_bound_ok = true;
    let mut ratios = Vec::new();
    for name in names {
        let u = profiles::lookup(name).unwrap();
        let (mut sum_h, mut sum_h2) = (0.0, 0.0);
        for _ in 0..100 {
            let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let x = Vector3::new(p[0], p[1], 1.0);
            let chart = hessian_chart(&u, p).unwrap();
            // D^2u is homogeneous of degree -1.
            let sph = hessian_spherical(&u, spherical_angles(&x), DEFAULT_POLE_MARGIN).unwrap() / x.norm();
            analytic_max = analytic_max.max((chart - sph).norm());
            let exact = DMatrix::from_column_slice(3, 3, chart.as_slice());
            let fd = |step| match fd_derivatives(&u, x.as_slice(), 2, step).unwrap() {
                FdDerivative::Hessian(m) => (m - &exact).norm(),
                FdDerivative::Gradient(_) => unreachable!(),
            };
            let (e1, e2) = (fd(h), fd(h2));
            fd_bound_ok &= e1 <= 100.0 * h * h && e2 <= 100.0 * h2 * h2;
            sum_h += e1;
            sum_h2 += e2;
        }
        // Linear profiles have no truncation error; only rounding remains.
        if sum_h > 1e-8 {
            ratios.push(sum_h / sum_h2);
        }
    }
    let elapsed = start.elapsed();
    let ratio_ok = !ratios.is_empty() && ratios.iter().all(|r| (3.5..=4.5).contains(r));
    outcome(
        analytic_max < 1e-8 && fd_bound_ok && ratio_ok && elapsed < Duration::from_secs(10),
        format!(
            "analytic pair max {analytic_max:.2e}, FD halving ratios {:.3?}, {:.2?}",
            ratios, elapsed
        ),
    )
}

fn euler_and_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut euler, mut kernel) = (0.0f64, 0.0f64);
    let mut count = 0;
    for n in [3, 4] {
        for u in profiles::global_order_one(n) {
            for _ in 0..200 {
                let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                if n == 3 && x[2].abs() < 0.05 {
                    x[2] = 0.5;
                }
                let d = match u.derivatives(&x) {
                    Ok(d) => d,
                    Err(_) => continue,
                };
                let xv = DVector::from_vec(x.clone());
                euler = euler.max((xv.dot(&d.gradient) - d.value).abs());
                kernel = kernel.max((&d.hessian * &xv).norm());
                count += 1;
            }
        }
    }
    outcome(
        euler < 1e-10 && kernel < 1e-8,
        format!("max |x.grad u - u| = {euler:.2e}, max |D2u x| = {kernel:.2e} over {count} samples"),
    )
}

fn curvature_law() -> Outcome {
    let u = profiles::lookup("q2-over-r").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_k, mut worst_n) = (0.0f64, 0.0f64);
    let mut samples = 0;
    while samples < 1000 {
        let x = random_direction(&mut rng);
        let s = match surface_sample(&u, x.as_slice(), 1e-8) {
            Ok(s) => s,
            Err(_) => continue,
        };
        // Independent oracle: tangential eigenvalues from the tangent-basis projection.
        let oracle = hessian_sample(&u, &DVector::from_column_slice(x.as_slice()), 1e-8).unwrap();
        let (l1, l2) = (oracle.tangential_eigenvalues[0], oracle.tangential_eigenvalues[1]);
        if l1.abs() < 1e-6 || l2.abs() < 1e-6 {
            continue;
        }
        let mut expected = [-1.0 / l1, -1.0 / l2];
        expected.sort_by(|a, b| b.total_cmp(a));
        for (k, e) in s.curvatures.iter().zip(expected) {
            worst_k = worst_k.max((k - e).abs() / e.abs());
        }
        worst_n = worst_n.max(s.normal_angle());
        samples += 1;
    }
    outcome(
        worst_k < 1e-6 && worst_n < 1e-6,
        format!("{samples} samples: curvature rel err {worst_k:.2e}, normal angle {worst_n:.2e} rad"),
    )
}

fn rigidity_search() -> Outcome {
    let grid = rigidity_core::grid::S2Grid::with_resolution(64);
    let mut lines = Vec::new();
    let mut pass = true;
    let identity = IdentityField { dim: 3 };
    let fields: Vec<(String, Box<dyn CoefficientField>)> =
        std::iter::once(("a=I".to_string(), Box::new(identity) as Box<dyn CoefficientField>))
            .chain((1..=5).map(|seed| {
                (
                    format!("random seed {seed}"),
                    Box::new(RandomEllipticField::new(seed, 0.5).unwrap()) as Box<dyn CoefficientField>,
                )
            }))
            .collect();
    for (k, (label, field)) in fields.iter().enumerate() {
        let start = Instant::now();
        let op = reduce_to_sphere(field.as_ref()).unwrap().with_pole_margin(0.0);
        let disc = DiscreteOperator::assemble(&op, grid, Scheme::Spectral).unwrap();
        let res = minimize_residual(&disc, &random_init(&disc, 100 + k as u64), &SearchOptions::default()).unwrap();
        let elapsed = start.elapsed();
        let ratio = res.nonlinearity / res.norm;
        let limit = if k == 0 { 1e-3 } else { 1e-2 };
        pass &= ratio < limit && elapsed < Duration::from_secs(120);
        lines.push(format!(
            "{label}: nonlinearity/|g| = {ratio:.2e} ({} it, {:.1?})",
            res.iterations, elapsed
        ));
    }
    outcome(pass, lines.join("; "))
}

fn divergence_form() -> Outcome {
    // Identity case: h = x1^3 - 3 x1 x2^2 is harmonic, so w = h_1 solves div(grad w) = 0.
    let identity = weak_residual(
        |_| divergence_coefficients(&Matrix2::identity()),
        |y| Ok(Vector2::new(6.0 * y[0], -6.0 * y[1])),
        &default_bumps(),
        Quadrature::default(),
    )
    .unwrap();
    // Pipeline: synthesize coefficients for q2-over-r, reduce to the chart,
    // pass to divergence form and test w = h_1.
    let u = profiles::lookup("q2-over-r").unwrap();
    let field = SynthesizedField {
        u: u.clone(),
        kappa_max: DEFAULT_KAPPA_MAX,
        tau_zero: 1e-8,
    };
    let reduced = reduce_to_chart(&field).unwrap();
    let pipeline = weak_residual(
        |y| divergence_coefficients(&reduced.matrix_at(y)?),
        |y| {
            let h = u.chart_jet(y)?;
            Ok(Vector2::new(h.h[0][0], h.h[0][1]))
        },
        &default_bumps(),
        Quadrature::default(),
    )
    .unwrap();
    outcome(
        identity < 1e-8 && pipeline < 1e-4,
        format!("identity {identity:.2e}, synthesized pipeline {pipeline:.2e} over 9 bumps"),
    )
}

fn trace_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let u: HomogeneousFunction = profiles::lookup(&format!("random:{}", 1000 + seed)).unwrap();
        let field = RandomEllipticField::new(seed, 0.5).unwrap();
        let reduced = reduce_to_chart(&field).unwrap();
        for _ in 0..100 {
            let p = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let x = DVector::from_vec(vec![p[0], p[1], 1.0]);
            let lhs = field
                .matrix_at(&x)
                .unwrap()
                .component_mul(&u.derivatives(x.as_slice()).unwrap().hessian)
                .sum();
            let h = u.chart_jet(p).unwrap();
            let rhs = reduced
                .apply(p, &Matrix2::new(h.h[0][0], h.h[0][1], h.h[1][0], h.h[1][1]))
                .unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    outcome(
        worst < 1e-8,
        format!("max |a:D2u - A:D2h| = {worst:.2e} on 10 profiles x 100 points"),
    )
}

fn main() {
    // Honour the test harness's --list so `cargo test -- --list` works.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("1 Lawson-Osserman residual", lawson_osserman),
        ("2 counterexample coefficients", counterexample_coefficients),
        ("3 R^3 obstruction", r3_obstruction),
        ("4 calculus cross-validation", calculus_cross_validation),
        ("5 Euler/kernel identities", euler_and_kernel),
        ("6 curvature law", curvature_law),
        ("7 rigidity search", rigidity_search),
        ("8 divergence-form check", divergence_form),
        ("9 trace identity", trace_identity),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let o = run();
        println!(
            "[{}] criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failures += 1;
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
