use std::process::{Command, Output};

use serde_json::Value;

fn rigidity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigidity"))
        .args(args)
        .env_remove("RIGIDITY_THREADS")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn matrix(v: &Value) -> Vec<f64> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn verify_lo_passes_at_grid_32() {
    let out = rigidity(&["verify-lo", "--grid", "32"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["command"], "verify-lo");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["grid"], 32);
    assert!(r["wall_time_s"].as_f64().unwrap() >= 0.0);
    let residual = r["result"]["residual_max"].as_f64().unwrap();
    assert!(residual < 1e-6, "{residual}");
    assert!(r["result"]["lambda_certificate"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_lo_reports_failed_check_with_exit_1() {
    let out = rigidity(&["verify-lo", "--grid", "8", "--tolerance", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["check_passed"], false);
}

#[test]
fn hessian_of_q2_at_e1() {
    let out = rigidity(&["hessian", "--profile", "q2-over-r", "--point", "1,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let h = matrix(&r["result"]["hessian"]);
    let expected = [0.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0, 0.0, -1.0];
    for (a, b) in h.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{h:?}");
    }
    assert_eq!(r["result"]["class"], "definite");
}

#[test]
fn negative_coordinates_parse() {
    let out = rigidity(&["hessian", "--profile", "q2-over-r", "--point", "-1,0,0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_or_unknown_profile_exits_2() {
    for args in [
        &["hessian", "--profile", "no-such-profile", "--point", "1,0,0"][..],
        &["hessian", "--point", "1,0,0"][..],
        &["obstruction", "--profile", "no-such-profile"][..],
    ] {
        let out = rigidity(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn invalid_values_exit_2() {
    for args in [
        &["verify-lo", "--grid", "0"][..],
        &["synthesize", "--profile", "q2-over-r", "--kappa-max", "-1"][..],
        &["hessian", "--profile", "q2-over-r", "--point", "1,0"][..],
        &["search", "--field", "random:x"][..],
        &["search", "--scheme", "sixth-order"][..],
    ] {
        assert_eq!(rigidity(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn list_profiles_is_stable() {
    let a = rigidity(&["list-profiles"]);
    let b = rigidity(&["list-profiles"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("lo-scalar\t4\t")));
    assert!(text.lines().any(|l| l.starts_with("q2-over-r\t3\t(x1^2 - x2^2)/|x|\t")));
    let json = rigidity(&["list-profiles", "--json"]);
    let listing: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(listing.as_array().unwrap().len(), text.lines().count() - 1);
}

#[test]
fn reruns_agree_apart_from_wall_time() {
    let args = ["search", "--field", "random:2", "--grid", "16", "--seeds", "3,4"];
    let mut a = report(&rigidity(&args));
    let mut b = report(&rigidity(&args));
    for r in [&mut a, &mut b] {
        r.as_object_mut().unwrap().remove("wall_time_s");
    }
    assert_eq!(a, b);
    assert_eq!(a["result"]["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["synthesize", "--profile", "q-mixed", "--grid", "24"];
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_rigidity"))
            .args(args)
            .env("RIGIDITY_THREADS", threads)
            .output()
            .unwrap();
        let mut r = report(&out);
        r.as_object_mut().unwrap().remove("wall_time_s");
        r
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let csv = dir.path().join("curve.csv");
    std::fs::write(
        &config,
        format!(
            "profile = \"q2-over-r\"\ngrids = [32, 16]\nkappa-max = 1e6\ncsv = {:?}\n",
            csv
        ),
    )
    .unwrap();
    let out = rigidity(&["obstruction", "--config", config.to_str().unwrap(), "--grids", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["config"]["grids"], serde_json::json!([16]));
    assert_eq!(r["config"]["profile"], "q2-over-r");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "N,lambda,infeasible_count");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("16,"));
    assert!(lines[1].ends_with(",32"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "grid = 8\nresolution = 16\n").unwrap();
    let out = rigidity(&["verify-lo", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolution"));
}

#[test]
fn report_goes_to_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = rigidity(&["verify-lo", "--grid", "8", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r["result"]["grid"]["points"], 512);
}

#[test]
fn scan_and_surface_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("surface.csv");
    let out = rigidity(&[
        "surface",
        "--profile",
        "q2-over-r",
        "--grid",
        "16",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["nodes"], 128);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "x1,x2,x3,g1,g2,g3,n1,n2,n3,kappa1,kappa2,class"
    );
    assert_eq!(text.lines().count(), 129);

    let out = rigidity(&[
        "scan",
        "--profile",
        "q2-over-r",
        "--grid",
        "32",
        "--leading",
        "0.7853981633974483,0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["singular_set"]["classification"], "finite");
    assert_eq!(r["result"]["leading_polynomial"]["order"], 3);
    assert!(r["result"]["saddle"]["counts"]["definite"].as_u64().unwrap() > 0);
}

#[test]
fn synthesize_writes_feasibility_map() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("map.csv");
    let field = dir.path().join("field.json");
    let out = rigidity(&[
        "synthesize",
        "--profile",
        "lo-scalar",
        "--grid",
        "8",
        "--csv",
        csv.to_str().unwrap(),
        "--field-json",
        field.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["feasible"], r["result"]["nodes"]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "psi1,psi2,phi,lambda_pointwise,status");
    let f: Value = serde_json::from_str(&std::fs::read_to_string(field).unwrap()).unwrap();
    assert_eq!(f["dim"], 4);
    assert_eq!(f["grid"]["sphere"], "s3");
}
