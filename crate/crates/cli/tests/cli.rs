use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use swlab::profiles::{boundary_to_csv, halfspace_from_csv, BoundaryProfile, RadialGrid};
use tempfile::TempDir;

const BASE: &[&str] = &["params.n=3", "params.p=2", "params.gamma=2"];
/// Small grid on which the solver converges to 1e-6 in well under a second.
const SMALL: &[&str] = &[
    "grid.r_min=1e-2",
    "grid.r_max=1e3",
    "grid.nodes_per_decade=16",
    "solver.tol_res=1e-6",
];

fn swlab<S: AsRef<std::ffi::OsStr>>(cmd: &str, out: &Path, args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swlab"))
        .arg(cmd)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn args(parts: &[&[&str]]) -> Vec<String> {
    parts.concat().into_iter().map(String::from).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_params_admissible_exits_zero() {
    let dir = TempDir::new().unwrap();
    let o = swlab("check-params", dir.path(), BASE);
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(&dir.path().join("check_params.json"));
    assert_eq!(j["pass"], true);
    assert_eq!(j["params"]["q"].as_f64().unwrap(), 3.0);
}

#[test]
fn check_params_names_the_failing_condition() {
    let dir = TempDir::new().unwrap();
    let o = swlab("check-params", dir.path(), &args(&[BASE, &["params.alpha=1.5", "params.beta=-1.5"]]));
    assert_eq!(o.status.code(), Some(1));
    let j = read_json(&dir.path().join("check_params.json"));
    let failing: Vec<&str> = j["report"]["lines"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|l| l["pass"] == false)
        .map(|l| l["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["alpha < (n-1)/p'"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha < (n-1)/p'"));
}

#[test]
fn missing_key_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let o = swlab("check-params", dir.path(), &["params.n=3", "params.p=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.gamma"));
}

#[test]
fn unknown_key_and_bad_value_are_rejected() {
    let dir = TempDir::new().unwrap();
    assert_eq!(swlab("check-params", dir.path(), &args(&[BASE, &["params.nn=3"]])).status.code(), Some(2));
    assert_eq!(swlab("check-params", dir.path(), &args(&[BASE, &["params.p=two"]])).status.code(), Some(2));
}

#[test]
fn out_of_range_exponent_is_a_failing_line_with_null_slack() {
    let dir = TempDir::new().unwrap();
    // 1/q' = 1 - (n-1)/(n p) - (alpha+beta+2-gamma)/n drops to zero
    let o = swlab("check-params", dir.path(), &["params.n=3", "params.p=2", "params.gamma=2", "params.alpha=2"]);
    assert_eq!(o.status.code(), Some(1));
    let j = read_json(&dir.path().join("check_params.json"));
    let line = &j["report"]["lines"][0];
    assert_eq!(line["name"], "derived_exponents");
    assert!(line["slack"].is_null());
    assert!(j["params"].is_null());
}

#[test]
fn file_is_overridden_by_flags_and_pairs() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# base\nparams.n = 3\nparams.p=2\nparams.gamma=2.5\nio.seed=5\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_swlab"))
        .args(["check-params", "--config"])
        .arg(&cfg)
        .args(["--seed", "9", "--out"])
        .arg(dir.path())
        .arg("params.gamma=2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(&dir.path().join("check_params.json"));
    assert_eq!(j["config"]["params.gamma"], "2");
    assert_eq!(j["config"]["io.seed"], "9");
    assert_eq!(j["config"]["params.n"], "3");
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    swlab("check-params", dir.path(), BASE);
    let text = std::fs::read_to_string(dir.path().join("check_params.json")).unwrap();
    assert!(text.contains("\"q\": 3.0000000000000000e0"));
    assert!(text.contains("\"qprime\": 1.4999999999999998e0"));
}

#[test]
fn solve_is_deterministic_across_runs_and_worker_counts() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let run = |dir: &Path, workers: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_swlab"))
            .args(["solve", "--workers", workers, "--seed", "3", "--out"])
            .arg(dir)
            .args(BASE)
            .args(SMALL)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(a.path(), "1");
    run(b.path(), "4");
    for f in ["solve.json", "f_star.csv", "g_star.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let j = read_json(&a.path().join("solve.json"));
    assert_eq!(j["converged"], true);
    assert!(j["c_est"].as_f64().unwrap() > 0.0);
}

#[test]
fn rerunning_from_the_embedded_config_reproduces_the_report() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let o = swlab("solve", a.path(), &args(&[BASE, SMALL]));
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(&a.path().join("solve.json"));
    let text: String = j["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k}={}\n", v.as_str().unwrap()))
        .collect();
    let cfg = b.path().join("embedded.cfg");
    std::fs::write(&cfg, text).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_swlab"))
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(b.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(a.path().join("solve.json")).unwrap(),
        std::fs::read(b.path().join("solve.json")).unwrap()
    );
}

#[test]
fn unconverged_solve_writes_its_report_and_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = swlab("solve", dir.path(), &args(&[BASE, SMALL, &["solver.max_iters=2"]]));
    assert_eq!(o.status.code(), Some(1));
    let j = read_json(&dir.path().join("solve.json"));
    assert_eq!(j["converged"], false);
    assert_eq!(j["iterations"], 2);
    assert!(dir.path().join("f_star.csv").exists());
}

#[test]
fn unbalanced_single_weighted_system_is_a_precondition_error() {
    let dir = TempDir::new().unwrap();
    let o = swlab(
        "solve",
        dir.path(),
        &args(&[BASE, SMALL, &["solver.mode=system", "params.kind=single", "params.p0=1", "params.q0=1"]]),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition"));
}

#[test]
fn verify_with_skipped_hypothesis_exits_zero() {
    let dir = TempDir::new().unwrap();
    let o = swlab("verify", dir.path(), &args(&[BASE, SMALL, &["verify.suite=asymptotics,hardy"]]));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("verify.json"));
    let status: Vec<(&str, &str)> = j["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["check"].as_str().unwrap(), r["status"].as_str().unwrap()))
        .collect();
    assert_eq!(
        status,
        [
            ("solve", "Pass"),
            ("asymptotics_boundary", "Skipped"),
            ("asymptotics_interior", "Skipped"),
            ("hardy", "Pass")
        ]
    );
    // skipped records carry no numbers
    assert!(j["records"][1]["rel_gap"].is_null());
}

#[test]
fn verify_reports_failures_with_exit_one() {
    let dir = TempDir::new().unwrap();
    // far too coarse for the kernel mass to hold to 1e-4
    let o = swlab(
        "verify",
        dir.path(),
        &args(&[BASE, &["verify.suite=mass", "grid.r_min=1e-1", "grid.r_max=1e1", "grid.nodes_per_decade=4"]]),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass"));
}

#[test]
fn verify_rejects_unknown_checks() {
    let dir = TempDir::new().unwrap();
    let o = swlab("verify", dir.path(), &args(&[BASE, &["verify.suite=scaling,bogus"]]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hardy_products_are_independent_of_radius() {
    let dir = TempDir::new().unwrap();
    let o = swlab("hardy", dir.path(), &args(&[BASE, &["params.alpha=0.2", "params.gamma=2.2"]]));
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(&dir.path().join("hardy.json"));
    assert_eq!(j["products"].as_array().unwrap().len(), 4);
    assert_eq!(j["record"]["pass"], true);
}

#[test]
fn apply_round_trip_reports_adjoint_gap() {
    let dir = TempDir::new().unwrap();
    let grid = RadialGrid::per_decade(1e-2, 1e3, 16).unwrap();
    let f = BoundaryProfile::from_fn(&grid, 3, |r| if r <= 100.0 { 1.0 } else { 0.0 }).unwrap();
    let input = dir.path().join("f.csv");
    std::fs::write(&input, boundary_to_csv(&f)).unwrap();
    let io = format!("io.input={}", input.display());
    let o = swlab("apply", dir.path(), &args(&[BASE, SMALL, &[&io]]));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("apply.json"));
    assert_eq!(j["direction"], "V");
    assert!(j["adjoint_gap"].as_f64().unwrap() < 1e-10);
    // a wide indicator sits on the 2 pi plateau near the origin
    let inner = j["innermost_value"].as_f64().unwrap();
    assert!((inner / (2.0 * std::f64::consts::PI) - 1.0).abs() < 0.05, "{inner}");

    // feed the image back; the direction follows from the file header
    let image = dir.path().join("image.csv");
    let g = halfspace_from_csv(&std::fs::read_to_string(&image).unwrap()).unwrap();
    assert_eq!(g.n(), 3);
    let back = dir.path().join("g.csv");
    std::fs::rename(&image, &back).unwrap();
    let io = format!("io.input={}", back.display());
    let o = swlab("apply", dir.path(), &args(&[BASE, SMALL, &[&io]]));
    assert_eq!(o.status.code(), Some(0));
    let j = read_json(&dir.path().join("apply.json"));
    assert_eq!(j["direction"], "W");
    assert!(j["adjoint_gap"].as_f64().unwrap() < 1e-10);
}

#[test]
fn apply_on_a_foreign_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let grid = RadialGrid::per_decade(1e-1, 1e1, 8).unwrap();
    let f = BoundaryProfile::from_fn(&grid, 3, |r| (-r).exp()).unwrap();
    let input = dir.path().join("f.csv");
    std::fs::write(&input, boundary_to_csv(&f)).unwrap();
    let io = format!("io.input={}", input.display());
    let o = swlab("apply", dir.path(), &args(&[BASE, SMALL, &[&io]]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_command_line_exits_two() {
    let o = Command::new(env!("CARGO_BIN_EXE_swlab")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
