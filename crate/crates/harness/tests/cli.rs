use std::path::Path;
use std::process::Command;

fn run(dir: &Path, subcommand: &str, config: &str, extra: &[&str]) -> (i32, String) {
    let path = dir.join(format!("{subcommand}.conf"));
    std::fs::write(&path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mixed-eig"))
        .args([subcommand, "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

const BALL: &str = "lattice.h = 0.125\nshape.kind = ball\nshape.radius = 0.75\noperator.p = 2\noperator.s = 0.5\n";

#[test]
fn success_writes_csv_json_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(dir.path(), "eig", BALL, &["--plot", "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    for ext in ["csv", "json", "svg"] {
        assert!(dir.path().join(format!("out/eig.{ext}")).exists(), "{ext}");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/eig.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 3);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(dir.path(), "eig", &format!("{BALL}operator.q = 1\n"), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("operator.q"), "{err}");
    let (code, _) = run(dir.path(), "fk-polarization", BALL, &[]);
    assert_eq!(code, 1, "missing polarizer list");
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BALL.replace("operator.p = 2", "operator.p = 3") + "solver.max_iter = 2\n";
    let (code, err) = run(dir.path(), "eig", &cfg, &[]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn property_violation_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{BALL}validate.fault = polarize_mask\nvalidate.chain_cases = 2\nvalidate.set_cases = 50\nvalidate.oracle_cases = 1\n\
         validate.oracle_max_nodes = 30\nvalidate.gradient_cases = 2\n"
    );
    let (code, err) = run(dir.path(), "validate", &cfg, &[]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("set_identities"), "{err}");
}
