use std::path::{Path, PathBuf};
use std::process::Command;

use linmed_cli::config::read_grid_csv;
use linmed_core::models::{counterexample_prior, CounterexampleParams, GridDensity, Prior};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linmed"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/configs").join(name)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn summary(dir: &Path, stem: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(format!("{stem}.json"))).unwrap()).unwrap()
}

#[test]
fn matched_median_linearity_passes() {
    let out = tempfile::tempdir().unwrap();
    let st = bin().arg(fixture("check_median_matched.json")).arg("--out").arg(out.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let s = summary(out.path(), "check_median_matched");
    assert_eq!(s["schema"], 1);
    assert_eq!(s["results"]["verdict"], true);
    assert!(out.path().join("check_median_matched.csv").exists());
    assert!(out.path().join("check_median_matched.timings.json").exists());
}

#[test]
fn fp_roots_for_p4_is_sqrt6() {
    let out = tempfile::tempdir().unwrap();
    let st = bin().arg(fixture("fp_roots.json")).arg("--out").arg(out.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let s = summary(out.path(), "fp_roots");
    let p4 = s["results"]["roots"].as_array().unwrap().iter().find(|e| e["p"] == 4.0).unwrap().clone();
    let roots = p4["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0].as_f64().unwrap() - 6f64.sqrt()).abs() < 1e-10);
}

#[test]
fn failed_assertion_exits_one_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad_slope.json",
        r#"{"command": "check-median-linearity", "output": "bad_slope",
            "prior": {"kind": "matched-gaussian", "a": 0.5}, "a": 0.3,
            "y_grid": {"min": -2, "max": 2, "count": 9}}"#,
    );
    let st = bin().arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(1));
    let s = summary(dir.path(), "bad_slope");
    assert_eq!(s["passed"], false);
    assert_eq!(s["failed_checks"][0], "verdict");
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "u.json",
        r#"{"command": "dawson-check", "w_grid": {"min": 0, "max": 1, "count": 3}, "extra": 1}"#,
    );
    let bad_grid = write_config(
        dir.path(),
        "g.json",
        r#"{"command": "dawson-check", "w_grid": {"min": 0, "max": 1, "count": 1}}"#,
    );
    let bad_prior = write_config(
        dir.path(),
        "p.json",
        r#"{"command": "check-median-linearity", "prior": {"kind": "matched-gaussian", "a": 1.5}, "a": 0.5,
            "y_grid": {"min": -1, "max": 1, "count": 3}}"#,
    );
    for cfg in [unknown, bad_grid, bad_prior, dir.path().join("missing.json")] {
        let st = bin().arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
        assert_eq!(st.code(), Some(2), "{}", cfg.display());
    }
    let st = bin().status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn monte_carlo_without_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.json",
        r#"{"command": "risk-scan", "output": "mc", "prior": {"kind": "gaussian", "mean": 0, "variance": 1},
            "ps": [1.0], "a_grid": {"min": 0, "max": 1, "count": 3}, "method": "monte-carlo", "samples": 1000}"#,
    );
    let st = bin().arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().arg(&cfg).arg("--out").arg(dir.path()).args(["--seed", "9", "--jobs", "2"]).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert_eq!(summary(dir.path(), "mc")["seed"], 9);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin().arg(fixture("dawson.json")).env(linmed_cli::OUT_DIR_ENV, dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(dir.path().join("dawson.csv").exists());
    let flag = tempfile::tempdir().unwrap();
    let st = bin()
        .arg(fixture("dawson.json"))
        .arg("--out")
        .arg(flag.path())
        .env(linmed_cli::OUT_DIR_ENV, dir.path().join("unused"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(flag.path().join("dawson.csv").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.json",
        r#"{"command": "risk-scan", "output": "r", "seed": 5, "prior": {"kind": "two-point", "x1": -1, "x2": 1, "weight": 0.5},
            "ps": [1.5], "a_grid": {"min": -0.5, "max": 1.5, "count": 9}, "method": "both", "samples": 200000}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let st = bin().arg(&cfg).arg("--out").arg(out).args(["--jobs", jobs]).status().unwrap();
        assert_eq!(st.code(), Some(0));
    }
    for f in ["r.csv", "r.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn poisson_demo_matches_reference_table() {
    let out = tempfile::tempdir().unwrap();
    let st = bin().arg(fixture("poisson_gamma.json")).arg("--out").arg(out.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let (ys, med) = read_grid_csv(&out.path().join("poisson_gamma.csv"), "y", "median").unwrap();
    assert_eq!(ys.len(), 21);
    assert!((med[0] - 0.346573590279973).abs() < 1e-6);
    assert!((med[10] - 5.33426120191816).abs() < 1e-6);
    assert!((med[20] - 10.3338118531553).abs() < 1e-6);
}

#[test]
fn density_csv_round_trips_as_grid_prior() {
    let out = tempfile::tempdir().unwrap();
    let st = bin().arg(fixture("counterexample_density.json")).arg("--out").arg(out.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let csv = out.path().join("counterexample_density.csv");
    let thetas = [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2];
    for (i, theta) in thetas.iter().enumerate() {
        let (x, f) = read_grid_csv(&csv, "x", &format!("density_{i}")).unwrap();
        let reread = GridDensity::new(x, f).unwrap();
        let params = CounterexampleParams { a: 0.5, rho: 1.0, theta: *theta, omega: 3f64.sqrt() };
        let Prior::Grid(orig) = counterexample_prior(params).unwrap() else { unreachable!() };
        let tv = orig.tv_distance(&reread);
        assert!(tv <= 1e-8, "theta={theta}: {tv:e}");
    }

    // The same file through the grid-csv prior kind.
    let cfg = write_config(
        out.path(),
        "rt.json",
        &format!(
            r#"{{"command": "check-lp-linearity", "output": "rt", "a": 0.5, "p": 4.0,
                "prior": {{"kind": "grid-csv", "path": "{}", "column": "density_1"}},
                "y_grid": {{"min": -2, "max": 2, "count": 5}}}}"#,
            csv.file_name().unwrap().to_string_lossy()
        ),
    );
    let st = bin().arg(&cfg).arg("--out").arg(out.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
}

#[test]
fn every_fixture_config_parses() {
    for e in std::fs::read_dir(fixture("")).unwrap() {
        let p = e.unwrap().path();
        linmed_cli::ExperimentConfig::from_path(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
    }
}
