use std::path::PathBuf;
use std::process::{Command, Output};

fn finsler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(args)
        .env_remove("FINSLER_FIXTURES")
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("finsler-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn list_metrics_names_the_zoo() {
    let out = finsler(&["list-metrics", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in finsler::fixtures::FIXTURE_NAMES {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn classify_euclidean_is_riemannian() {
    let out = finsler(&["classify", "--spec", "euclidean-n2", "--count", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], finsler::report::SCHEMA_VERSION);
    let riem = v["predicates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "riemannian")
        .unwrap();
    assert_eq!(riem["verdict"], "holds");
    assert_eq!(v["points"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_randers_reports_vertical_scalar_ratio() {
    let out = finsler(&["verify", "--spec", "randers-n3", "--count", "3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    for p in v["identities"]["points"].as_array().unwrap() {
        let id = p["identities"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["name"] == "c-reducible-curvature")
            .unwrap();
        let ratio = id["params"]["sc_v_over_c_sq"][0].as_f64().unwrap();
        assert!((ratio + 0.25).abs() < 1e-7, "{ratio}");
    }
}

#[test]
fn dimension_mismatch_exits_two_with_position() {
    let dir = scratch("mismatch");
    let path = dir.join("bad.metric");
    std::fs::write(&path, "dim 2\nL = sqrt(y1^2 + y3^2)\n").unwrap();
    let out = finsler(&["classify", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dimension mismatch at 2:17"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn non_homogeneous_metric_is_input_error() {
    let dir = scratch("nonhom");
    let path = dir.join("square.metric");
    std::fs::write(&path, "dim 2\nL = y1^2 + y2^2\n").unwrap();
    assert_eq!(
        finsler(&["tensors", "--spec", path.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn indefinite_metric_is_numerical_error() {
    let dir = scratch("indef");
    let path = dir.join("lorentz.metric");
    std::fs::write(&path, "dim 2\nriemannian\na11 = -1\na22 = 1\n").unwrap();
    assert_eq!(
        finsler(&["classify", "--spec", path.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn unknown_fixture_and_bad_flags_exit_two() {
    assert_eq!(
        finsler(&["classify", "--spec", "no-such-metric"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        finsler(&["classify", "--spec", "randers-n3", "--tol", "oops"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        finsler(&["classify", "--spec", "randers-n3", "--count", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(finsler(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = scratch("config");
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        "spec = \"sphere-n2\"\ncount = 2\nseed = 9\nformat = \"text\"\n[tol]\nh-isotropic = 1e-9\n",
    )
    .unwrap();
    let text = finsler(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(text.status.code(), Some(0));
    assert!(String::from_utf8(text.stdout)
        .unwrap()
        .starts_with("metric: sphere-n2  points: 2"));

    let out = finsler(&[
        "classify",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--count",
        "3",
    ]);
    let v = json(&out);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert_eq!(
        v["aggregate"]["tolerances"]["overrides"]["h-isotropic"],
        1e-9
    );
}

#[test]
fn out_flag_writes_file() {
    let dir = scratch("out");
    let path = dir.join("tensors.json");
    let out = finsler(&[
        "tensors",
        "--spec",
        "sphere-n2",
        "--count",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["kind"], "tensors");
    let r = v["points"][0]["tensors"]["R_low"][0][1][0][1]
        .as_f64()
        .unwrap();
    let x1 = v["points"][0]["point"]["x"][0].as_f64().unwrap();
    assert!((r - x1.sin().powi(2)).abs() < 1e-12);
}

#[test]
fn fixture_directory_shadows_builtins() {
    let dir = scratch("fixtures");
    std::fs::write(
        dir.join("sphere-n2.metric"),
        "dim 2\nname \"sphere-n2\"\nL = sqrt(y1^2 + y2^2)\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("extra-flat.metric"),
        "dim 2\nL = sqrt(y1^2 + 4 * y2^2)\n",
    )
    .unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_finsler"))
            .args(args)
            .env("FINSLER_FIXTURES", &dir)
            .output()
            .unwrap()
    };

    let list = String::from_utf8(run(&["list-metrics", "--format", "text"]).stdout).unwrap();
    assert!(list.contains("extra-flat"));
    let v: serde_json::Value =
        serde_json::from_slice(&run(&["classify", "--spec", "sphere-n2", "--count", "2"]).stdout)
            .unwrap();
    let loc = v["predicates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "locally-minkowskian")
        .unwrap();
    assert_eq!(loc["verdict"], "holds");
}

#[test]
fn seeds_change_points_but_not_bytes_per_seed() {
    let a = finsler(&[
        "classify",
        "--spec",
        "randers-curved-n3",
        "--seed",
        "7",
        "--count",
        "3",
    ])
    .stdout;
    let b = finsler(&[
        "classify",
        "--spec",
        "randers-curved-n3",
        "--seed",
        "7",
        "--count",
        "3",
    ])
    .stdout;
    let c = finsler(&[
        "classify",
        "--spec",
        "randers-curved-n3",
        "--seed",
        "8",
        "--count",
        "3",
    ])
    .stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}
