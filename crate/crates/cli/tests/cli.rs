use parabolic_cli::{parse_scenario, run_command, strip_timing, write_csv, Command, Scenario};
use serde_json::{json, Value};
use std::path::Path;
use std::process::Command as Process;

const MINIMAL: &str = r#"{"A": [[-2]], "grid": {"m": 16, "N": 4096}, "rhs": [[1, [1]]]}"#;

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_parabolic"))
}

fn write(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn minimal_config_fills_defaults() {
    let sc = parse_scenario(MINIMAL).unwrap();
    assert_eq!(sc.dim(), 1);
    assert_eq!(sc.grid.m, 16);
    assert_eq!(sc.grid.n, 4096);
    assert_eq!(sc.rhs[0].frequency, 1.0);
    assert_eq!(sc.options.contour_nodes, 256);
    assert_eq!(sc.options.oversample, 8);
    assert_eq!(sc.options.eps_tail, 1e-12);
    assert_eq!(sc.options.band_range, None);
    assert_eq!(sc.seed, 0);
    let v = serde_json::to_value(&sc).unwrap();
    for key in ["generator", "grid", "rhs", "nonlinearity", "options", "seed"] {
        assert!(v.get(key).is_some(), "default for {key} not spelled out");
    }
    assert_eq!(v["generator"], json!([[[-2.0, 0.0]]]));
}

#[test]
fn missing_generator_is_named() {
    let err = parse_scenario(r#"{"grid": {"m": 16, "N": 4096}, "rhs": []}"#).unwrap_err();
    assert_eq!(err.kind(), "ScenarioError");
    assert!(err.to_string().contains("generator"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn schema_errors_carry_field_path() {
    let err = parse_scenario(r#"{"A": [[-1]], "options": {"picard": {"betta": 1}}}"#).unwrap_err();
    assert!(err.to_string().starts_with("options.picard"), "{err}");
    let err = parse_scenario(r#"{"A": [[-1]], "grid": {"m": "x"}}"#).unwrap_err();
    assert!(err.to_string().starts_with("grid.m"), "{err}");
    let err = parse_scenario(r#"{"A": [[-1, 0]]}"#).unwrap_err();
    assert!(err.to_string().starts_with("generator[0]"), "{err}");
    let err = parse_scenario(r#"{"A": [[-1]], "rhs": [[1, [1, 2]]]}"#).unwrap_err();
    assert!(err.to_string().starts_with("rhs[0]"), "{err}");
}

#[test]
fn round_trip_is_identity() {
    let text = r#"{
        "generator": [[-1, [0.5, 0.25]], [0, 1.5]],
        "grid": {"m": 8, "N": 2048},
        "rhs": [{"frequency": 0.125, "coefficient": [1, [0, -1]]}, [-1, [0.3, 0.1]]],
        "nonlinearity": [{"order": 1, "coefficients": [0.1, 0, 0, 0.1]}],
        "options": {"band_range": [-1, 1], "picard": {"solver": "band", "beta": 0.5}},
        "seed": 99
    }"#;
    let sc = parse_scenario(text).unwrap();
    let once = serde_json::to_string(&sc).unwrap();
    let again: Scenario = parse_scenario(&once).unwrap();
    assert_eq!(sc, again);
    assert_eq!(once, serde_json::to_string(&again).unwrap());
    assert_eq!(sc.rhs[1].frequency, -1.0);
    assert_eq!(sc.options.picard.maxit, 200);
}

#[test]
fn check_on_saddle() {
    let sc = parse_scenario(r#"{"A": [[-1, 0], [0, 1]]}"#).unwrap();
    let out = run_command(Command::Check, &sc).unwrap();
    let r = &out.report["results"];
    assert!((r["gap"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["M"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((r["growth_bound"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let margin = 1.0 - (-1f64).exp();
    assert!((r["hyperbolic_margin"].as_f64().unwrap() - margin).abs() < 1e-12);
    assert!((margin - 0.6321).abs() < 1e-4);
    assert!(out.certificates_ok());
    assert_eq!(out.report["schema_version"], json!(1));
}

#[test]
fn solve_green_csv_sup_norm() {
    let sc = parse_scenario(MINIMAL).unwrap();
    let out = run_command(Command::SolveGreen, &sc).unwrap();
    assert!(out.certificates_ok());
    let mut buf = Vec::new();
    write_csv(out.solution.as_ref().unwrap(), &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t", "re_x1", "im_x1", "norm"]
    );
    let mut max: f64 = 0.0;
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        max = max.max(rec[3].parse::<f64>().unwrap());
        rows += 1;
    }
    assert_eq!(rows, 4096);
    assert!((max - 1.0 / 5f64.sqrt()).abs() < 1e-10, "{max}");
}

#[test]
fn certify_unit_resolvent_bound() {
    let sc = parse_scenario(r#"{"A": [[-1]]}"#).unwrap();
    let out = run_command(Command::Certify, &sc).unwrap();
    let r = &out.report["results"];
    let m = r["M"].as_f64().unwrap();
    assert!((m - 1.0).abs() < 1e-6);
    let kernel = 2.0 / std::f64::consts::PI * (10f64).sqrt();
    let band = r["estresn_bound"].as_f64().unwrap();
    let inverse = r["invest11_bound"].as_f64().unwrap();
    assert!((band - kernel).abs() < 1e-5 && (band - 2.0132).abs() < 1e-4);
    assert!((inverse - 9.0 * kernel).abs() < 1e-4);
    assert!((inverse - 18.1166).abs() / 18.1166 < 2e-4);
    assert!(out.certificates_ok());
    for c in out.report["certificates"].as_array().unwrap() {
        for key in ["name", "computed", "bound", "ok"] {
            assert!(c.get(key).is_some());
        }
    }
}

#[test]
fn reports_are_deterministic_without_timing() {
    let sc = parse_scenario(r#"{"A": [[-1, 0.5], [0, 2]], "rhs": [[0.5, [1, 1]]], "seed": 5}"#).unwrap();
    let a = run_command(Command::SolveBand, &sc).unwrap();
    let b = run_command(Command::SolveBand, &sc).unwrap();
    assert_eq!(
        serde_json::to_string(&strip_timing(&a.report)).unwrap(),
        serde_json::to_string(&strip_timing(&b.report)).unwrap()
    );
    assert!(a.report.get("timing").is_some());
}

#[test]
fn band_limited_mode() {
    let sc =
        parse_scenario(r#"{"A": [[0, 1], [-1, 0]], "rhs": [[2, [1, 0]]], "options": {"band_range": [1.75, 2.25]}}"#)
            .unwrap();
    let out = run_command(Command::SolveBand, &sc).unwrap();
    assert_eq!(out.report["results"]["mode"], json!("band_limited"));
    assert!(out.certificates_ok());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.json",
        &serde_json::from_str::<Value>(MINIMAL).unwrap(),
    );
    let out_dir = dir.path().join("out");
    let st = bin()
        .args(["solve-green", "--csv", "--seed", "3", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&st.stdout).unwrap();
    assert_eq!(report["inputs"]["seed"], json!(3));
    assert!(out_dir.join("report.json").exists() && out_dir.join("solution.csv").exists());

    let missing = write(dir.path(), "missing.json", &json!({"grid": {"m": 16, "N": 4096}}));
    let st = bin().args(["check", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&st.stdout).unwrap();
    assert_eq!(err["error"]["kind"], json!("ScenarioError"));

    let st = bin()
        .args(["check", "--config"])
        .arg(dir.path().join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));

    let zero = write(dir.path(), "zero.json", &json!({"A": [[0]], "rhs": [[1, [1]]]}));
    let st = bin().args(["solve-green", "--config"]).arg(&zero).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&st.stdout).unwrap();
    assert_eq!(err["error"]["kind"], json!("NotHyperbolicError"));

    // --out pointing at a file cannot be created: internal failure
    let st = bin()
        .args(["check", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&good)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(1));

    let st = bin()
        .args(["check", "--config"])
        .arg(&good)
        .env("DICHOTOMY_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin()
        .args(["check", "--config"])
        .arg(&good)
        .env("DICHOTOMY_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
}

#[test]
fn bundled_scenarios_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for (file, command) in [
        ("saddle.json", Command::Check),
        ("saddle.json", Command::SolveBand),
        ("harmonic.json", Command::SolveGreen),
        ("quadratic.json", Command::Nonlinear),
        ("quadratic.json", Command::Spectrum),
        ("quadratic.json", Command::AsNorm),
    ] {
        let sc = parabolic_cli::read_scenario(&dir.join(file)).unwrap();
        let out = run_command(command, &sc).unwrap();
        assert!(out.certificates_ok(), "{file} {}", command.name());
    }
}
