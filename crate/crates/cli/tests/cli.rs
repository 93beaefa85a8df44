use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skrp_cli::config::{load, RunConfig, SweepConfig};
use skrp_cli::report::{read_report, HEADER_PREFIX};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn skrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skrp")).args(args).output().expect("spawn skrp")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if name.starts_with("sweep_") {
            load::<SweepConfig>(&path).unwrap();
        } else {
            load::<RunConfig>(&path).unwrap();
        }
    }
}

#[test]
fn sphere_config_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let cfg = configs().join("sphere_k4.json");
    let o = skrp(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().starts_with(HEADER_PREFIX));
    let report = read_report(&out).unwrap();
    assert_eq!(report["summary"]["pass"], true);
    let k = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "curvature_K").unwrap();
    assert!(k["residual"].as_f64().unwrap() <= 1e-5);

    let o = skrp(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("curvature_K"));
}

#[test]
fn impossible_tolerance_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "tight.json",
        r#"{"model": {"sphere": {"k": 4.0, "phi0": 1.0}}, "points": 20,
            "plan": [{"check": "curvature_K", "tolerance": 1e-12}]}"#,
    );
    let out = dir.path().join("r.json");
    let o = skrp(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report = read_report(&out).unwrap();
    assert_eq!(report["summary"]["failed"], 1);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_model.json", r#"{"model": {"torus": {"k": 1.0}}}"#),
        ("unknown_field.json", r#"{"model": {"sphere": {"k": 1.0, "phi0": 1.0}}, "colour": 3}"#),
        ("bad_check.json", r#"{"model": {"sphere": {"k": 1.0, "phi0": 1.0}}, "plan": [{"check": "duality"}]}"#),
        ("no_profile.json", r#"{"model": {"shell": {"a": 1.0, "epsilon": 1, "c": 0.0}}}"#),
        ("bad_sphere.json", r#"{"model": {"sphere": {"k": -1.0, "phi0": 1.0}}}"#),
        ("not_json.json", "model = sphere"),
    ];
    for (name, text) in cases {
        let cfg = write(dir.path(), name, text);
        let o = skrp(&["verify", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = skrp(&["verify", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = skrp(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_after_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("product_s2.json");
    let body = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_skrp"))
            .args(["verify", "--config", cfg.to_str().unwrap(), "--points", "15", "--out", out.to_str().unwrap()])
            .env("SKRP_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let text = std::fs::read_to_string(out).unwrap();
        text.split_once('\n').unwrap().1.to_string()
    };
    let a = body("a.json", "1");
    let b = body("b.json", "2");
    assert_eq!(a, b);
    let o = skrp(&["--sequential", "verify", "--config", cfg.to_str().unwrap(), "--points", "15"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.split_once('\n').unwrap().1, a);
}

#[test]
fn seed_flag_changes_samples_and_is_echoed() {
    let cfg = configs().join("product_s2.json");
    let run = |seed: &str| {
        let o = skrp(&["verify", "--config", cfg.to_str().unwrap(), "--points", "3", "--seed", seed]);
        let text = String::from_utf8(o.stdout).unwrap();
        serde_json::from_str::<serde_json::Value>(text.split_once('\n').unwrap().1).unwrap()
    };
    let (a, b) = (run("1"), run("2"));
    assert_eq!(a["config"]["seed"], 1);
    assert_ne!(a["samples"], b["samples"]);
}

#[test]
fn bc1_sweep_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bc1.csv");
    let cfg = configs().join("sweep_bc1.json");
    let o = skrp(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["k", "beta", "f", "sign", "factor_residual"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 9 * 601);
    for row in &rows {
        let f: f64 = row[2].parse().unwrap();
        let sign: i32 = row[3].parse().unwrap();
        assert_eq!(sign, if f > 0.0 { 1 } else if f < 0.0 { -1 } else { 0 });
    }
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, header) in [
        ("e1.json", r#"{"sweep": {"bc1": {"k": {"from": 3, "to": 2}, "beta": {"start": 0, "stop": 1, "count": 5}}}}"#, "k,beta"),
        (
            "e2.json",
            r#"{"sweep": {"type_a": {"k": {"start": 1, "stop": 2, "count": 0}, "eta": {"start": -1, "stop": 0, "count": 3}}}}"#,
            "m,alpha",
        ),
    ] {
        let cfg = write(dir.path(), name, text);
        let out = dir.path().join(format!("{name}.csv"));
        let o = skrp(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let csv = std::fs::read_to_string(out).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with(header));
    }
}

#[test]
fn build_writes_metadata_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("meta.json");
    let cfg = configs().join("shell_type_c.json");
    let o = skrp(&["build", "--config", cfg.to_str().unwrap(), "--points", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = read_report(&out).unwrap();
    assert_eq!(meta["model"]["model"], "shell");
    assert_eq!(meta["grid_rows"], 7);
    let mut r = csv::Reader::from_path(dir.path().join("meta.csv")).unwrap();
    assert_eq!(r.headers().unwrap().len(), 4 + 1 + 10);
    assert_eq!(r.records().count(), 7);
}

#[test]
fn classify_prints_the_tag() {
    let cfg = configs().join("shell_type_c.json");
    let o = skrp(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tag"]["tag"], "C1");
}
