use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn kfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfield"))
        .args(args)
        .output()
        .expect("run kfield")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn kvf_wave() {
    let o = kfield(&["kvf", data("wave.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("X1[u] = pt/rho\n"));
    assert!(out.contains("X2[u] = -(px/tau)\n"));
    golden("kvf_wave.txt", &out);
}

#[test]
fn kvf_zero_hamiltonian() {
    let o = kfield(&["kvf", data("canonical.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 6);
    assert!(out.lines().all(|l| l.ends_with(" = 0")));
}

#[test]
fn kvf_with_gauge_file() {
    let o = kfield(&[
        "kvf",
        data("wave.toml").to_str().unwrap(),
        "--gauge",
        data("wave_gauge.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    golden("kvf_wave_gauge.txt", &stdout(&o));
}

#[test]
fn kvf_parse_error() {
    let o = kfield(&["kvf", data("bad_expression.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 4, column 19"), "{err}");
}

#[test]
fn check_canonical() {
    let o = kfield(&["check", data("canonical.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    golden("check_canonical.txt", &stdout(&o));
}

#[test]
fn check_contactified_wave() {
    let o = kfield(&["check", "--contactify", data("wave.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("(corank, rank, intersection) = (2, 2, 0)"));
    golden("check_contactified_wave.txt", &out);
}

#[test]
fn check_contact_file() {
    for name in ["wave_contact.toml", "damped_contact.toml"] {
        let o = kfield(&["check", data(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
    }
}

#[test]
fn check_schema_error() {
    let o = kfield(&["check", data("one_block.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("momenta for k = 2"));
}

#[test]
fn check_tolerance_failure() {
    let o = kfield(&["check", "--tol", "1e-30", data("cubic_k3.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("hdw residual") && stdout(&o).contains("FAIL"));
}

#[test]
fn bridge_wave() {
    let o = kfield(&["bridge", data("wave.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("projected field residual: max"));
    golden("bridge_wave.txt", &out);
}

#[test]
fn bridge_negative_control() {
    let o = kfield(&["bridge", data("wave.toml").to_str().unwrap(), "--negative", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("damped lift: h_M = pt^2/(2*rho) - px^2/(2*tau) + 0.1*z1"));
    golden("bridge_negative.txt", &out);
}

#[test]
fn bridge_tolerance_plumbing() {
    let path = data("cubic_k3.toml");
    let path = path.to_str().unwrap();
    assert_eq!(kfield(&["bridge", path]).status.code(), Some(0));
    let o = kfield(&["bridge", path, "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(tol 1e-30)  FAIL"));
    assert_eq!(kfield(&["bridge", path, "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn bridge_rejects_contact_input() {
    let o = kfield(&["bridge", data("wave_contact.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_reproducible() {
    let a = scratch("report_a");
    let b = scratch("report_b");
    for dir in [&a, &b] {
        let o = kfield(&[
            "bridge",
            data("cubic_k3.toml").to_str().unwrap(),
            "--negative",
            "0.1",
            "--seed",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let ra = std::fs::read(a.join("bridge.toml")).unwrap();
    let rb = std::fs::read(b.join("bridge.toml")).unwrap();
    assert_eq!(ra, rb);
    let text = String::from_utf8(ra).unwrap();
    assert!(text.contains("seed = 7") && text.contains("[[proposition.probes]]"));
    assert_eq!(text.matches("[[proposition.probes]]").count(), 50);
}

#[test]
fn simulate_standing_wave() {
    let out = scratch("simulate");
    let o = kfield(&[
        "simulate",
        data("string.toml").to_str().unwrap(),
        "--reference",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Linf <= 1e-3"));
    let section = std::fs::read_to_string(out.join("section.csv")).unwrap();
    assert!(section.starts_with("t1,t2,u,pt,px\n"));
    assert_eq!(section.lines().count(), 1 + 401 * 201);
    let diagnostics = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diagnostics.starts_with("t,energy,hdw_residual_max\n"));
    assert_eq!(diagnostics.lines().count(), 1 + 401);
}

#[test]
fn simulate_convergence_table() {
    let out = scratch("convergence");
    let o = kfield(&[
        "simulate",
        data("string.toml").to_str().unwrap(),
        "--convergence",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].ends_with(",n/a"));
    for row in &rows[1..] {
        let order: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((1.7..=2.3).contains(&order), "{row}");
    }
}

#[test]
fn simulate_cfl_violation() {
    let out = scratch("cfl");
    let o = kfield(&["simulate", data("string_cfl.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("c*dt/dx = 1.200000"), "{}", stderr(&o));
    assert!(!out.join("section.csv").exists());
}

#[test]
fn missing_file_and_usage() {
    assert_eq!(kfield(&["kvf", "/nonexistent/system.toml"]).status.code(), Some(1));
    assert_eq!(kfield(&["frobnicate"]).status.code(), Some(2));
}
