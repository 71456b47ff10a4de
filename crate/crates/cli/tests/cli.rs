use std::path::Path;
use std::process::{Command, Output};

fn sbc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbc"))
        .args(["--out", dir.to_str().unwrap()])
        .args(args)
        .env_remove("SBC_CONFIG")
        .env_remove("SBC_UNCOUPLED")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn one_error_line(o: &Output, class: &str) {
    assert!(!o.status.success());
    let e = stderr(o);
    assert_eq!(e.lines().count(), 1, "{e}");
    assert!(e.starts_with(&format!("sbc: error[{class}]: ")), "{e}");
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn constants_for_equal_masses() {
    let d = tempfile::tempdir().unwrap();
    let o = sbc(d.path(), &["constants"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bc"].as_f64().unwrap(), 3.0 / 32.0);
    assert!((v["block_coefficient"][0].as_f64().unwrap() - 11.81246).abs() < 1e-4);
    assert_eq!(v["dh_ratio"].as_f64().unwrap(), -1.0);
    assert!(d.path().join("constants.json").exists());
}

#[test]
fn malformed_config_is_one_line() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), r#"{"masses": [1, 1, 1, 1], "tolerance": 3}"#);
    one_error_line(&sbc(d.path(), &["--config", &c, "constants"]), "config");
    let c = write_config(d.path(), "{not json");
    one_error_line(&sbc(d.path(), &["--config", &c, "constants"]), "config");
    let c = write_config(d.path(), r#"{"masses": [1, 0, 1, 1]}"#);
    one_error_line(&sbc(d.path(), &["--config", &c, "constants"]), "domain");
    one_error_line(&sbc(d.path(), &["--config", "/nonexistent/x.json", "constants"]), "io");
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let o = sbc(d.path(), &["blockmap", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    one_error_line(&o, "usage");
    assert!(sbc(d.path(), &["--help"]).status.success());
}

#[test]
fn extended_precision_is_unsupported() {
    let d = tempfile::tempdir().unwrap();
    one_error_line(&sbc(d.path(), &["--extended-precision", "constants"]), "unsupported");
}

#[test]
fn normalform_low_degree() {
    let d = tempfile::tempdir().unwrap();
    let o = sbc(d.path(), &["normalform", "--max-degree", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("no resonant terms"), "{s}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("normalform.json")).unwrap()).unwrap();
    assert_eq!(v["max_degree"], 5);
    one_error_line(&sbc(d.path(), &["normalform", "--max-degree", "40"]), "domain");
}

#[test]
fn verify_list_and_fault() {
    let d = tempfile::tempdir().unwrap();
    let o = sbc(d.path(), &["verify", "--list"]);
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.lines().count() >= 10 && s.lines().all(|l| l.contains(": ")));
    let o = sbc(d.path(), &["verify", "--inject-fault", "rh"]);
    one_error_line(&o, "verify");
    assert!(stderr(&o).contains("rh_adjoint_kernel"));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], false);
    one_error_line(&sbc(d.path(), &["verify", "--inject-fault", "nonsense"]), "usage");
}

#[test]
fn verify_passes_and_is_seeded() {
    let d = tempfile::tempdir().unwrap();
    let a = sbc(d.path(), &["--seed", "3", "verify"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = sbc(d.path(), &["--seed", "3", "verify"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn blockmap_writes_outputs_and_checks_the_ratio() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), r#"{"offsets": {"min": 1e-3, "max": 3e-2, "count": 10}}"#);
    let o = sbc(d.path(), &["--config", &c, "--workers", "2", "blockmap", "--ratio-check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("best exponent 8/3") && s.contains("opposite signs"), "{s}");
    let csv = std::fs::read_to_string(d.path().join("blockmap.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,v,dh1,dh2,dx,dy,time_rescaled,time_physical");
    assert_eq!(csv.lines().count(), 11);
    assert!(std::fs::read_to_string(d.path().join("blockmap.svg")).unwrap().contains("<circle"));

    let f = tempfile::tempdir().unwrap();
    let csv_path = d.path().join("blockmap.csv");
    let o = sbc(f.path(), &["blockmap", "--fit-csv", csv_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["free_exponent"].as_f64().unwrap() - 8.0 / 3.0).abs() < 0.04);
}

#[test]
fn exponent_outside_band_fails() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), r#"{"offsets": {"min": 1e-3, "max": 3e-2, "count": 8}, "exponent_band": [2.0, 2.5]}"#);
    one_error_line(&sbc(d.path(), &["--config", &c, "blockmap"]), "acceptance");
}

#[test]
fn uncoupled_sweep_refuses_to_fit() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), r#"{"offsets": [0.002, 0.004, 0.008, 0.016, 0.03]}"#);
    let o = sbc(d.path(), &["--config", &c, "blockmap", "--uncoupled"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fit refused: fit error: the uncoupled field conserves h1 and h2"));
}

#[test]
fn env_vars_override_defaults() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), r#"{"offsets": [0.002, 0.004, 0.008, 0.016, 0.03]}"#);
    let o = Command::new(env!("CARGO_BIN_EXE_sbc"))
        .args(["blockmap"])
        .env("SBC_CONFIG", &c)
        .env("SBC_OUT", d.path())
        .env("SBC_UNCOUPLED", "true")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("uncoupled field"));
    assert!(d.path().join("blockmap.csv").exists());
    let o = Command::new(env!("CARGO_BIN_EXE_sbc")).args(["constants"]).env("SBC_OUT", d.path()).env("SBC_WORKERS", "zero").output().unwrap();
    one_error_line(&o, "usage");
}

#[test]
fn serial_outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = write_config(a.path(), r#"{"masses": [2, 1, 1, 3], "offsets": {"min": 1e-3, "max": 3e-2, "count": 8}}"#);
    for d in [&a, &b] {
        let o = sbc(d.path(), &["--config", &c, "--workers", "1", "blockmap"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["blockmap.csv", "blockmap.json", "blockmap.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_dumps_a_trajectory() {
    let d = tempfile::tempdir().unwrap();
    let o = sbc(d.path(), &["simulate", "--offset", "-0.01", "--samples", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "tau,z1,z2,x,h1,h2,y,time_physical");
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    // exit on the section (z1 + z2)/2 = delta
    assert!(((last[1] + last[2]) / 2.0 - 0.1).abs() < 1e-9);
    assert_eq!(csv.lines().count(), 51);
    one_error_line(&sbc(d.path(), &["simulate", "--offset", "0"]), "too_close");
}
