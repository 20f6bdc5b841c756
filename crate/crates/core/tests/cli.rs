use std::path::Path;
use std::process::{Command, Output};
use warpcheck::cli::report::RunReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_warpcheck"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn read_report(path: &Path) -> RunReport {
    RunReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = run(&["verify", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn short_flags_are_not_accepted() {
    assert_eq!(run(&["verify", "-s", "axioms"]).status.code(), Some(2));
}

#[test]
fn missing_spec_is_a_usage_error() {
    let out = run(&["verify", "--spec", "/no/such/spec.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such file"));
}

#[test]
fn contactization_alpha_two_records_expected_contact_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = run(&["verify", "--suite", "contactization", "--alpha", "2", "--samples", "10", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_report(&path);
    let c = r.check("contactization/worked-example/alpha=2/contact_metric").unwrap();
    assert_eq!(format!("{:?}", c.expectation), "Fail");
    assert!(!c.passed());
    assert!(r.check("contactization/worked-example/alpha=1/contact_metric").is_none());
}

#[test]
fn user_spec_runs_axioms() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    let spec = fixture("sasakian-r3");
    let out = run(&["verify", "--suite", "axioms", "--spec", &spec, "--samples", "10", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = read_report(&path);
    assert_eq!(r.specs.len(), 1);
    assert!(r.check("axioms/sasakian-r3/k_contact").unwrap().passed());
    assert!(r.check("axioms/sasakian-r3/negative/k_contact").is_some());
    assert!(r.errata.is_empty());
}

#[test]
fn tolerance_override_can_force_a_hard_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = run(&[
        "verify", "--suite", "geodesic", "--tol", "geodesic/sphere/speed_drift=1e-30", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = read_report(&path);
    assert_eq!(r.check("geodesic/sphere/speed_drift").unwrap().tolerance, 1e-30);
    assert_eq!(r.summary.hard_failures, 1);
    assert_eq!(r.tolerance_overrides.len(), 1);
}

#[test]
fn malformed_tolerance_is_a_usage_error() {
    assert_eq!(run(&["verify", "--tol", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--tol", "a=-1"]).status.code(), Some(2));
}

#[test]
fn christoffel_prints_sphere_symbols() {
    let out = run(&["christoffel", "sphere", "--point", "1.0,0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // Γ^θ_φφ = −sin θ cos θ
    let expect = -(1.0f64).sin() * (1.0f64).cos();
    let line = text.lines().find(|l| l.starts_with("Gamma^th_{ph ph}")).unwrap();
    let v: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((v - expect).abs() < 1e-12);
}

#[test]
fn christoffel_on_contactization_has_reeb_column() {
    let out = run(&["christoffel", "worked-example", "--point", "0.1,0.2,-0.3,0.4,1", "--contactization"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("worked-example-contactization"));
    assert!(text.lines().any(|l| l.contains("_{y1 t}")));
}

#[test]
fn christoffel_rejects_wrong_point_dimension() {
    assert_eq!(run(&["christoffel", "sphere", "--point", "1,2,3"]).status.code(), Some(2));
}

#[test]
fn geodesic_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let svg = dir.path().join("g.svg");
    let out = run(&[
        "geodesic", &fixture("sphere"), "--p0", "1.5707963267948966,0", "--v0", "0,1", "--t", "1", "--step", "0.01",
        "--csv", csv.to_str().unwrap(), "--plot", svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,th,ph,v_th,v_ph,speed2");
    assert_eq!(lines.count(), 101);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn geodesic_rejects_point_outside_chart() {
    let out = run(&["geodesic", "sphere", "--p0", "0,0", "--v0", "0,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_diff_detects_changes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &Path, seed: &str| {
        vec![
            "verify".to_string(), "--suite".into(), "axioms".into(), "--samples".into(), "5".into(), "--seed".into(),
            seed.into(), "--out".into(), p.display().to_string(),
        ]
    };
    assert!(bin().args(args(&a, "1")).status().unwrap().success());
    assert!(bin().args(args(&b, "1")).status().unwrap().success());
    let same = run(&["report", "--diff", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(same.status.success());
    assert!(String::from_utf8_lossy(&same.stdout).contains("identical"));

    let mut r = read_report(&b);
    r.checks.retain(|c| c.name != "axioms/sasakian-r3/k_contact");
    std::fs::write(&b, r.to_json()).unwrap();
    let changed = run(&["report", "--diff", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(changed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&changed.stdout).contains("- axioms/sasakian-r3/k_contact"));
}

#[test]
fn report_diff_needs_two_files() {
    assert_eq!(run(&["report", "--diff", "a.json"]).status.code(), Some(2));
}
