use std::path::{Path, PathBuf};
use std::process::Command;

use degen::discretize::read_field_csv;
use degen::runner::{parse_config, parse_config_str, run_case, write_outputs, RunError, RunOptions};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

const MINIMAL: &str = r#"{
  "case": "bvp",
  "operator": { "kind": "heston", "sigma": 0.5, "rho": -0.3, "kappa": 2.0, "theta": 0.3, "r": 0.05 },
  "domain": { "kind": "truncated_slab", "bounds": [[-1.0, 1.0], [0.0, 1.0]],
              "dirichlet": { "left": true, "right": true, "bottom": false, "top": true } },
  "grid": { "n": [17, 9] },
  "data": { "f": { "kind": "constant", "value": 1.0 }, "g": { "kind": "constant", "value": 0.0 } }
}"#;

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out_dir: dir.to_path_buf(),
        ..RunOptions::default()
    }
}

#[test]
fn defaults_are_applied_and_echoed() {
    let cfg = parse_config_str(MINIMAL, Path::new(".")).unwrap();
    assert_eq!(cfg.solver.omega, 1.5);
    assert_eq!(cfg.solver.tol, 1e-10);
    let dir = tempfile::tempdir().unwrap();
    let out = run_case(&cfg, &opts(dir.path())).unwrap();
    assert_eq!(out.report["config"]["solver"]["omega"], 1.5);
    assert_eq!(out.report["config"]["solver"]["tol"], 1e-10);
    assert!(out.report["results"]["apriori_bound"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn unknown_keys_are_rejected() {
    let text = MINIMAL.replace(r#""grid""#, r#""solver": { "foo": 1 }, "grid""#);
    let err = parse_config_str(&text, Path::new(".")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let msg = err.to_string();
    assert!(msg.contains("solver") && msg.contains("foo"), "{msg}");
}

#[test]
fn incompatible_obstacle_lists_every_violation() {
    let text = MINIMAL
        .replace(r#""case": "bvp""#, r#""case": "obstacle""#)
        .replace(
            r#""g": { "kind": "constant", "value": 0.0 }"#,
            r#""g": { "kind": "constant", "value": 0.0 }, "psi": { "kind": "constant", "value": 0.5 }"#,
        )
        .replace(r#""grid": { "n": [17, 9] }"#, r#""grid": { "n": [17, 2] }"#);
    match parse_config_str(&text, Path::new(".")) {
        Err(RunError::Validation(v)) => {
            assert!(v.iter().any(|m| m.contains("grid")), "{v:?}");
        }
        other => panic!("expected validation error, got {other:?}"),
    }
    let text = text.replace(r#""n": [17, 2]"#, r#""n": [17, 9]"#);
    let err = parse_config_str(&text, Path::new(".")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("ψ ≤ g"), "{err}");
}

#[test]
fn direct_runs_are_byte_identical() {
    let cfg = parse_config(&configs().join("heston_bvp.json")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_case(&cfg, &opts(a.path())).unwrap();
    run_case(&cfg, &opts(b.path())).unwrap();
    for name in ["solution.csv", "residual.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn obstacle_case_writes_solution_mask_and_residual() {
    let cfg = parse_config(&configs().join("perpetual_put.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_case(&cfg, &opts(dir.path())).unwrap();
    for name in ["solution.csv", "mask.csv", "residual.csv", "report.json"] {
        assert!(out.artifacts.contains(&dir.path().join(name)), "{name}");
    }
    let sol = read_field_csv(std::fs::File::open(dir.path().join("solution.csv")).unwrap()).unwrap();
    assert_eq!(sol.len(), 65 * 33);
    assert!(out.report["results"]["coincidence_nodes"].as_u64().unwrap() > 0);
}

#[test]
fn empty_field_list_still_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&[], &serde_json::json!({"b": 1, "a": 2}), dir.path()).unwrap();
    assert_eq!(written, vec![dir.path().join("report.json")]);
    let text = std::fs::read_to_string(&written[0]).unwrap();
    assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
}

#[test]
fn every_example_config_runs() {
    for name in [
        "heston_bvp",
        "perpetual_put",
        "perron_bvp",
        "perron_put",
        "transform_check",
        "verify",
        "tabulated_bvp",
    ] {
        let cfg = parse_config(&configs().join(format!("{name}.json"))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let run = RunOptions {
            acceptance: true,
            ..opts(dir.path())
        };
        if let Err(e) = run_case(&cfg, &run) {
            panic!("{name}: {e}");
        }
    }
}

#[test]
fn iteration_cap_is_a_solver_error() {
    let text = MINIMAL.replace(r#""grid""#, r#""solver": { "method": "sor", "max_iter": 2 }, "grid""#);
    let cfg = parse_config_str(&text, Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_case(&cfg, &opts(dir.path())).unwrap_err().exit_code(), 4);
}

fn degen(args: &[&str]) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_degen")).args(args).status().unwrap().code()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = |n: &str| configs().join(n).to_str().unwrap().to_string();
    assert_eq!(degen(&["--config", &cfg("heston_bvp.json"), "--out", out]), Some(0));
    assert_eq!(degen(&["--config", "/nonexistent/config.json", "--out", out]), Some(1));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"case\": ").unwrap();
    assert_eq!(degen(&["--config", bad.to_str().unwrap(), "--out", out]), Some(2));
    assert_eq!(degen(&["--config", &cfg("incompatible_obstacle.json"), "--out", out]), Some(3));
    assert_eq!(degen(&["--config", &cfg("verify_fault.json"), "--out", out]), Some(5));
}

#[test]
fn seed_changes_only_randomized_cases() {
    let cfg = parse_config(&configs().join("verify.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = run_case(&cfg, &RunOptions { seed: 1, ..opts(dir.path()) }).unwrap();
    let b = run_case(&cfg, &RunOptions { seed: 2, ..opts(dir.path()) }).unwrap();
    assert_eq!(a.report["results"]["mms"], b.report["results"]["mms"]);
    assert_eq!(a.report["seed"], 1);
}
