use std::process::{Command, Output};

use origami_entropy_cli::commands;
use origami_entropy_cli::{RunConfig, VerifyOptions};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_origami-entropy");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&all)).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

#[test]
fn info_reports_strata() {
    let l = stdout(&["info", "--surface", "L"]);
    assert!(
        l.contains("genus=2 k=2 n=1 sigma=1.7320508075688772"),
        "{l}"
    );
    let ew = stdout(&["info", "--surface", "EW"]);
    assert!(ew.contains("genus=3 k=1 n=4"), "{ew}");
    let o3 = json(&["info", "--surface", "O", "--k", "3"]);
    assert_eq!(o3["genus"], 3);
    assert_eq!(o3["vertex_classes"].as_array().unwrap().len(), 2);
    assert_eq!(o3["cone_angles_over_pi"], serde_json::json!([6, 6]));
}

#[test]
fn info_on_surface_outside_the_hypothesis() {
    let out = stdout(&["info", "--squares", "4", "--h", "(1,2,3,4)", "--v", "(1,2)"]);
    assert!(out.contains("stratum: none"), "{out}");
}

#[test]
fn headline_enclosure() {
    let r = json(&[
        "entropy",
        "--surface",
        "L",
        "--s",
        "0",
        "--u",
        "0",
        "--base",
        "equilateral",
        "--N",
        "100",
    ]);
    let (lo, hi) = (f(&r["h_lo"]), f(&r["h_hi"]));
    assert!(lo <= 4.349345046141503 && 4.349345046141502 <= hi);
    assert!(r["digits"].as_u64().unwrap() >= 12);
    assert!(f(&r["width"]) <= 1e-10);
    assert_eq!(r["N"], 100);
}

#[test]
fn identity_base_has_larger_entropy() {
    let eq = json(&["entropy", "--N", "100"]);
    let id = json(&["entropy", "--base", "identity", "--N", "100"]);
    assert!(f(&id["h_lo"]) > f(&eq["h_hi"]));
}

#[test]
fn wollmilchsau_width_goal() {
    let r = json(&[
        "entropy",
        "--surface",
        "EW",
        "--base",
        "equilateral",
        "--width",
        "1e-8",
    ]);
    assert!(f(&r["h_hi"]) - f(&r["h_lo"]) <= 1e-8);
    assert_eq!(f(&r["target"]), 1.0);
}

#[test]
fn json_config_round_trips() {
    let r = json(&[
        "scan",
        "--s-range",
        "-0.1:0.1:3",
        "--u",
        "0.02",
        "--base",
        "1,0.5,0,1",
        "--width",
        "1e-9",
    ]);
    let cfg: RunConfig = serde_json::from_value(r["config"].clone()).unwrap();
    let again = serde_json::to_value(&cfg).unwrap();
    assert_eq!(again, r["config"]);
    assert_eq!(cfg.width, 1e-9);
    assert_eq!(r["cells"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join(format!("origami-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.conf");
    std::fs::write(
        &path,
        "# defaults\nsurface = EW\nwidth = 1e-8\nformat = json\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let from_file: Value = serde_json::from_str(&stdout(&["entropy", "--config", p])).unwrap();
    assert_eq!(f(&from_file["target"]), 1.0);
    let overridden = stdout(&[
        "entropy",
        "--config",
        p,
        "--surface",
        "L",
        "--format",
        "plain",
    ]);
    assert!(
        overridden.starts_with("h_lo=4.349345046141"),
        "{overridden}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn single_cell_scan_matches_entropy() {
    let e = json(&["entropy", "--s", "0.2", "--u", "-0.05"]);
    let csv = stdout(&["scan", "--s", "0.2", "--u", "-0.05", "--format", "csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "s,u,h_mid,h_width");
    let mid: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(mid, 0.5 * (f(&e["h_lo"]) + f(&e["h_hi"])));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["info", "--surface", "O:1"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--s-range", "1:0:3"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--s-range", "0:1:0"]).status.code(), Some(2));
    assert_eq!(
        run(&["entropy", "--base", "2,0,0,1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "entropy",
            "--squares",
            "4",
            "--h",
            "(1,2,3,4)",
            "--v",
            "(1,2)"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["entropy", "--surface", "L", "--squares", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["entropy", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["entropy", "--width", "1e-20"]).status.code(), Some(3));
}

#[test]
fn parse_errors_carry_columns() {
    let out = run(&["info", "--squares", "3", "--h", "(1,2,2)", "--v", "(1,3)"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("column"), "{err}");
}

#[test]
fn hessian_and_minimize() {
    let h = json(&[
        "hessian",
        "--target",
        "f",
        "--chart",
        "length-angle",
        "--t",
        "4.34934504614150290303",
    ]);
    let det = f(&h["determinant"]);
    assert!((det / 0.0825337 - 1.0).abs() < 0.05, "{det}");
    let g = json(&["hessian"]);
    assert!(f(&g["gradient_norm"]) <= 1e-6);
    let m = json(&["minimize", "--s", "0.3", "--u", "0.05"]);
    assert!(f(&m["s"]).abs() < 1e-4 && f(&m["u"]).abs() < 1e-4);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = run(&["verify", "--seed", "7"]);
    let b = run(&["verify", "--seed", "7"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(
        text.lines().filter(|l| l.starts_with("PASS")).count(),
        6,
        "{text}"
    );
}

#[test]
fn corrupted_k_fails_verification() {
    let cfg = RunConfig::default();
    let opts = VerifyOptions {
        k_override: Some(3),
        ..VerifyOptions::default()
    };
    let out = commands::verify(&cfg, &opts).unwrap();
    assert_eq!(out.exit_code, 3);
    assert!(
        out.body
            .lines()
            .any(|l| l.starts_with("FAIL multiplicities")),
        "{}",
        out.body
    );
    assert!(out.body.contains("expected 4"));
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("origami-scan-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let out = run(&[
        "scan",
        "--s-range",
        "-0.2:0.2:3",
        "--format",
        "csv",
        "--out",
        p,
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    std::fs::remove_file(&path).ok();
}
