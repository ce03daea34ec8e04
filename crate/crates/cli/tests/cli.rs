use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn inhomog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inhomog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn dim_json_report() {
    let v: Value = serde_json::from_str(&stdout(&inhomog(&["dim", "sierpinski"]))).unwrap();
    assert_eq!(v["construction"], "sierpinski");
    assert_eq!(v["k_min"], 4);
    assert_eq!(v["k_max"], 10);
    assert_eq!(v["scales"].as_array().unwrap().len(), 7);
    assert!(v["gap"].as_f64().unwrap() < 0.05);
    assert!(v["version"].is_string());
}

#[test]
fn dim_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    let o = inhomog(&["dim", "comb:3", "--k", "4..8", "--format", "csv", "-o", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta,count,method"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 3);
    assert!(rows.iter().all(|r| r.split(',').count() == 3));
}

#[test]
fn bernoulli_uses_strip_formula() {
    let v: Value =
        serde_json::from_str(&stdout(&inhomog(&["dim", "bernoulli:sqrt2", "--k", "4..9"]))).unwrap();
    assert_eq!(v["method"], "strip-formula");
    assert_eq!(v["params"]["source"], "garsia-sqrt2");
}

#[test]
fn generate_orbital_csv() {
    let text = stdout(&inhomog(&["generate", "comb:2", "--depth", "2"]));
    assert_eq!(text.lines().count(), 1 + 1 + 2 + 4);
}

#[test]
fn generate_kleinian_csv() {
    let text = stdout(&inhomog(&["generate", "kleinian-ce:3:2"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,label"));
    assert_eq!(lines.count(), 7 * 2);
}

#[test]
fn generate_rejects_empty_condensation() {
    let o = inhomog(&["generate", "sierpinski"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn render_png_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("fig.png");
    let o = inhomog(&["render", "bernoulli:sqrt2", "-o", png.to_str().unwrap(), "--width", "128", "--height", "96"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = image::open(&png).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (128, 96));
    assert!(img.pixels().any(|p| p.0 != [255, 255, 255]));

    let svg = dir.path().join("fig.svg");
    let o = inhomog(&["render", "kleinian-ce:4:3", "-o", svg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.matches("<circle").count() > 1);
}

#[test]
fn render_rejects_unknown_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.gif");
    let o = inhomog(&["render", "sierpinski", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn poincare_cyclic_report() {
    let v: Value = serde_json::from_str(&stdout(&inhomog(&[
        "poincare", "cyclic:2", "--s", "1", "--depth", "200",
    ])))
    .unwrap();
    let value = v["series"][0]["value"].as_f64().unwrap();
    let closed = 1.0 + 2.0 * (1..=200).map(|m| 0.5f64.powi(m)).sum::<f64>();
    assert!((value - closed).abs() < 1e-10);
    assert!(v["exponent"]["exponent"].as_f64().unwrap() <= 0.05);
}

#[test]
fn poincare_reports_unusable_depth() {
    let v: Value = serde_json::from_str(&stdout(&inhomog(&["poincare", "cyclic:2", "--depth", "1"]))).unwrap();
    assert!(v["exponent"].is_null());
    assert!(v["exponent_error"].is_string());
}

#[test]
fn verify_exit_status() {
    let o = inhomog(&["verify"]);
    let text = stdout(&o);
    assert!(text.contains("XFAIL"));
    assert!(text.lines().last().unwrap().contains("0 failed,"));
}

#[test]
fn bad_arguments() {
    assert_eq!(inhomog(&["dim", "koch"]).status.code(), Some(2));
    assert_eq!(inhomog(&["dim", "comb:1"]).status.code(), Some(2));
    assert!(!inhomog(&["dim", "sierpinski", "--k", "9..3"]).status.success());
    assert_eq!(
        Command::new(env!("CARGO_BIN_EXE_inhomog"))
            .args(["dim", "sierpinski"])
            .env("INHOMOG_THREADS", "0")
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn ifs_file_construction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("carpet.json");
    fs::write(
        &path,
        r#"{"maps": [
            {"kind": "similarity", "scale": 0.5, "t": [0, 0]},
            {"kind": "similarity", "scale": 0.5, "t": [0.5, 0.5]}
        ],
        "condensation": [{"kind": "point", "p": [1, 0]}]}"#,
    )
    .unwrap();
    let arg = format!("ifs:{}", path.display());
    let v: Value = serde_json::from_str(&stdout(&inhomog(&["dim", &arg]))).unwrap();
    let slope = v["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
}
