use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoposterior"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(artifact: &Path) -> Value {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&fs::read_to_string(PathBuf::from(name)).unwrap()).unwrap()
}

/// A small Gaussian dataset written by `gen`.
fn small_data(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.json");
    fs::write(&spec, r#"{"n_per_class": 150, "seed": 11}"#).unwrap();
    let data = dir.join("data.csv");
    ok(&["gen", "--spec", s(&spec), "--out", s(&data)]);
    data
}

#[test]
fn gen_is_reproducible_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["gen", "--seed", "9", "--out", s(&a)]);
    ok(&["gen", "--seed", "9", "--out", s(&b)]);
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert_eq!(String::from_utf8_lossy(&text).lines().count(), 2001);
    let m = manifest(&a);
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seed"], 9);
}

#[test]
fn bad_covariance_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"cov": [[1.0, 2.0], [2.0, 1.0]]}"#).unwrap();
    let out = run(&["gen", "--spec", s(&spec), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cov"));
}

#[test]
fn parse_and_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = run(&["posterior", "--data", s(&missing), "--point", "0,0"]);
    assert_eq!(out.status.code(), Some(2));

    let data = small_data(dir.path());
    let out = run(&["posterior", "--data", s(&data), "--point", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["posterior", "--data", s(&data), "--point", "0,0", "--classifier", "knn"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["isocurves", "--data", s(&data), "--levels", "0.5,1.2", "--out", s(&dir.path().join("c.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_budget_exhaustion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let out = run(&[
        "posterior", "--data", s(&data), "--point", "1,0", "--classifier", "svm", "--svm-max-iter", "1",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn symmetric_midpoint_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sym.csv");
    let mut csv = String::from("x1,label\n");
    for x in [-3.0, -2.0, -1.0, 0.5, 1.5] {
        csv.push_str(&format!("{x},-1\n{},+1\n", -x));
    }
    fs::write(&data, csv).unwrap();
    for classifier in ["logreg", "svm"] {
        let out = ok(&["posterior", "--data", s(&data), "--point", "0", "--classifier", classifier]);
        let v: Value = serde_json::from_str(&out).unwrap();
        let p = v["probability"].as_f64().unwrap();
        assert!((p - 0.5).abs() < 1e-3, "{classifier}: {p}");
        assert_eq!(v["status"], "converged");
    }
}

#[test]
fn crossing_surfaces_are_reported_as_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("cross.csv");
    fs::write(
        &data,
        "x1,x2,label\n1,0,+1\n1,-2,+1\n1.5,0,+1\n1.5,1.5,+1\n1,-1.5,+1\n1.5,1,+1\n\
         0,-0.5,-1\n1,0.5,-1\n-1,-0.5,-1\n0.5,1.5,-1\n1.5,1,-1\n0,1,-1\n",
    )
    .unwrap();
    let out_path = dir.path().join("est.json");
    let out = ok(&["posterior", "--data", s(&data), "--point", "0.164,-1.897", "--out", s(&out_path)]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "degenerate");
    assert!(v["all_roots"].as_array().unwrap().len() >= 2);
    assert_eq!(manifest(&out_path)["command"], "posterior");
}

#[test]
fn svm_filtering_flag_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    for flag in ["true", "false"] {
        let out = dir.path().join(format!("v_{flag}.json"));
        ok(&[
            "validate", "--data", s(&data), "--classifier", "svm", "--grid", "5x5",
            "--filter-support-vectors", flag, "--out", s(&out),
        ]);
        let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(report["filter_support_vectors"], flag == "true");
        assert_eq!(report["n_points"], 25);
        assert_eq!(
            manifest(&out)["config"]["model"]["filter_support_vectors"],
            flag == "true"
        );
    }
}

#[test]
fn balanced_half_level_is_the_original_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let curves = dir.path().join("half.csv");
    ok(&["isocurves", "--data", s(&data), "--levels", "0.5", "--grid", "81x81", "--out", s(&curves)]);
    let svg = fs::read_to_string(curves.with_extension("svg")).unwrap();
    assert_eq!(svg.matches(r#"<g class="isocurve""#).count(), 1);

    let model_path = dir.path().join("model.json");
    ok(&["fit", "--data", s(&data), "--out", s(&model_path)]);
    let model: Value = serde_json::from_str(&fs::read_to_string(&model_path).unwrap()).unwrap();
    let w: Vec<f64> = serde_json::from_value(model["weights"].clone()).unwrap();
    let b = model["intercept"].as_f64().unwrap();
    let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
    let text = fs::read_to_string(&curves).unwrap();
    let mut n = 0;
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let dist = (w[0] * f[3] + w[1] * f[4] + b).abs() / norm;
        assert!(dist < 1e-3, "vertex {line} is {dist} off the boundary");
        n += 1;
    }
    assert!(n > 10);
}

#[test]
fn curves_feed_back_into_validate() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let curves = dir.path().join("c.csv");
    ok(&["isocurves", "--data", s(&data), "--levels", "0.2:0.8:0.3", "--grid", "61x61", "--out", s(&curves)]);
    let m = manifest(&curves);
    assert_eq!(m["command"], "isocurves");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    let out = ok(&[
        "validate", "--data", s(&data), "--grid", "3x3", "--curves", s(&curves), "--per-level", "2",
    ]);
    let report: Value = serde_json::from_str(&out).unwrap();
    let c = &report["curves"];
    assert_eq!(c["n_vertices"], 6);
    assert!(c["max_deviation"].as_f64().unwrap() <= 0.02, "{c}");
}

#[test]
fn calibrate_rejects_trees_and_orders_logreg_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_data(dir.path());
    let out = dir.path().join("cal.csv");
    let r = run(&["calibrate", "--data", s(&data), "--classifier", "tree", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));

    ok(&["calibrate", "--data", s(&data), "--grid", "81x81", "--out", s(&out)]);
    let rows: Vec<(f64, f64)> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 19);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    let mid = rows.iter().find(|r| (r.1 - 0.5).abs() < 1e-9).unwrap();
    assert!(mid.0.abs() < 1e-6, "score at level 0.5 is {}", mid.0);
    assert_eq!(manifest(&out)["config"]["resolution"], 0.05);
}
