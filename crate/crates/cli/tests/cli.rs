use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn fracsemi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsemi"))
        .args(args)
        .env_remove("FRACSEMI_THREADS")
        .output()
        .unwrap()
}

fn run(command: &str, config: &Path, out: &Path) -> Output {
    fracsemi(&[
        command,
        "--config",
        config.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ])
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn header(path: PathBuf) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

const CONSTANT: &str = r#"{
    "grid": {"dim": 1, "length": 20, "points": 256},
    "mu": 0.5,
    "potential": {"family": "constant", "value": 1}
}"#;

#[test]
fn decay_on_constant_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", CONSTANT);
    let out = dir.path().join("out");
    let o = run("decay", &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&out);
    assert_eq!(r["verdict"], "decay");
    assert_eq!(r["command"], "decay");
    assert!((r["omega_2"].as_f64().unwrap() - 1.0).abs() < 0.02);
    assert!((r["a_star"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(header(out.join("omega_vs_p.csv")), "p,omega");
    assert_eq!(header(out.join("criterion_vs_r.csv")), "r,inf_value");
    assert_eq!(
        header(out.join("norm_trace.csv")),
        "t,l1,l2,linf,boundary_mass"
    );

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"]["mu"], 0.5);
    assert_eq!(manifest["tolerances"]["decay_threshold"], 1e-4);
    assert!(manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f == "report.json"));
}

#[test]
fn reports_are_deterministic_up_to_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", CONSTANT);
    let strip = |out: &Path| {
        std::fs::read_to_string(out.join("report.json"))
            .unwrap()
            .lines()
            .filter(|l| !l.contains("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("decay", &cfg, &a).status.code(), Some(0));
    assert_eq!(run("decay", &cfg, &b).status.code(), Some(0));
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn invalid_mu_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &CONSTANT.replace("0.5", "1.5"));
    let o = run("decay", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`mu`") && err.contains("(0, 1]"), "{err}");
}

#[test]
fn parse_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "typo.json",
        &CONSTANT.replace("\"mu\"", "\"mew\""),
    );
    let o = run("decay", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mew"));

    let cfg = write_config(dir.path(), "grid.json", &CONSTANT.replace("256", "300"));
    let o = run("decay", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.points"));
}

#[test]
fn unmet_expectation_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONSTANT.replace("\"mu\": 0.5,", "\"mu\": 0.5, \"expect\": \"no_decay\",");
    let cfg = write_config(dir.path(), "e.json", &body);
    let out = dir.path().join("out");
    assert_eq!(run("decay", &cfg, &out).status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["verdict"], "decay");
    assert!(r["hints"]
        .as_array()
        .unwrap()
        .iter()
        .any(|h| h.as_str().unwrap().contains("no_decay")));
}

#[test]
fn run_uses_the_config_command() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"command": "kernel", "grid": {"dim": 1, "length": 40, "points": 512}, "mu": 0.5,
                  "kernel_checks": "diagnostic", "t_grid": [0.1, 0.2]}"#;
    let cfg = write_config(dir.path(), "k.json", body);
    let out = dir.path().join("out");
    let o = run("run", &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&out);
    assert_eq!(r["command"], "kernel");
    assert!((r["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(header(out.join("kernel_profile.csv")), "z,k,H,I,k_over_H");
    assert_eq!(header(out.join("smoothing.csv")), "t,norm_1_to_inf");

    let cfg = write_config(dir.path(), "none.json", CONSTANT);
    assert_eq!(
        run("run", &cfg, &dir.path().join("none")).status.code(),
        Some(1)
    );
}

#[test]
fn strict_kernel_checks_reject_coarse_grids() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"grid": {"dim": 1, "length": 20, "points": 64}, "mu": 0.5}"#;
    let cfg = write_config(dir.path(), "k.json", body);
    let o = run("kernel", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diagnostic"));
}

#[test]
fn evolve_writes_trace_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"grid": {"dim": 1, "length": 20, "points": 128}, "mu": 0.75,
                  "potential": {"family": "well", "height": 1.5, "radius": 3},
                  "initial": {"kind": "gaussian", "width": 1}, "t_grid": [0.5, 1.0]}"#;
    let cfg = write_config(dir.path(), "e.json", body);
    let out = dir.path().join("out");
    let o = run("evolve", &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&out);
    assert_eq!(r["contraction_ok"], true);
    assert_eq!(r["positivity_ok"], true);
    assert_eq!(r["trace"].as_array().unwrap().len(), 3);
    assert_eq!(header(out.join("final_field.csv")), "x,u");
}

#[test]
fn audit_of_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"grid": {"dim": 2, "length": 16, "points": 256},
                  "potential": {"family": "counterexample", "n_max": 3},
                  "radii": [1.0, 2.0], "m_ladder": [1, 2, 4]}"#;
    let cfg = write_config(dir.path(), "a.json", body);
    let out = dir.path().join("out");
    let o = run("audit", &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&out);
    assert_eq!(r["counterexample"]["cube_masses_ok"], true);
    assert_eq!(
        header(out.join("m_ladder.csv")),
        "M,defect,delta_p1,delta_p2,delta_pinf"
    );
    assert_eq!(header(out.join("ring_criterion.csv")), "ring,M,inf_value");
    assert_eq!(header(out.join("cube_integrals.csv")), "cube,ring,integral");
}

#[test]
fn verify_suite_subset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", r#"{"criteria": [6, 12], "seed": 11}"#);
    let out = dir.path().join("out");
    let o = run("verify-suite", &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["criteria"].as_array().unwrap().len(), 2);
    assert!(r["criteria"][0].get("elapsed_s").is_none());

    let cfg = write_config(dir.path(), "v13.json", r#"{"criteria": [13]}"#);
    assert_eq!(
        run("verify-suite", &cfg, &dir.path().join("o13"))
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", CONSTANT);
    let o = Command::new(env!("CARGO_BIN_EXE_fracsemi"))
        .args(["decay", "--config", cfg.to_str().unwrap(), "--output"])
        .arg(dir.path().join("out"))
        .env("FRACSEMI_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FRACSEMI_THREADS"));

    let o = Command::new(env!("CARGO_BIN_EXE_fracsemi"))
        .args(["decay", "--config", cfg.to_str().unwrap(), "--output"])
        .arg(dir.path().join("out2"))
        .env("FRACSEMI_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
