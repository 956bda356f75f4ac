use std::path::Path;
use std::process::{Command, Output};

fn nsac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsac")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.ini");
    std::fs::write(&path, body.replace("OUT", &dir.join("out").display().to_string())).unwrap();
    path.display().to_string()
}

const SMALL: &str = "\
[domain]
nx_ratio = 4
lx = 1
ly = 1
bc = dirichlet_box

[interface]
kind = circle
cx = 0.5
cy = 0.5
r0 = 0.3
delta = 0.05

[sweep]
eps = 0.1
t_end = 0.004
save_every = 0.002

[solver]
dt_rule = factor:0.4
cg_tol = 1e-10
stabilization = 1

[output]
dir = OUT
";

#[test]
fn profile_table_to_stdout() {
    let out = nsac(&["profile"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho,theta0,dtheta0,eta"));
    assert_eq!(lines.count(), 4001);
    assert!(String::from_utf8(out.stderr).unwrap().contains("sigma = 0.6666"));
}

#[test]
fn converge_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = nsac(&["converge", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let errors = std::fs::read_to_string(tmp.path().join("out/errors.csv")).unwrap();
    assert!(errors.starts_with("eps,nx,h,dt,steps,err_v_LinfL2"));
    assert!(tmp.path().join("out/rates.csv").exists());
    assert!(tmp.path().join("out/eps_0.1/frames.csv").exists());
}

#[test]
fn simulate_and_sharp() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(nsac(&["simulate", "-c", &cfg]).status.code(), Some(0));
    assert!(tmp.path().join("out/eps_0.1/energy.csv").exists());
    assert!(!tmp.path().join("out/eps_0.1/frames.csv").exists());
    assert_eq!(nsac(&["sharp", "-c", &cfg]).status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("out/sharp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn spectrum_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("r0 = 0.3", "r0 = 0.25").replace("delta = 0.05", "delta = auto"));
    let out = nsac(&["spectrum", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/spectrum.csv")).unwrap();
    assert!(csv.starts_with("eps,lambda_min_L,lambda_min_L_minus_T,pass\n0.1,"));
    let zero = nsac(&["spectrum", "-c", &cfg, "--zero-field"]);
    assert!(String::from_utf8(zero.stdout).unwrap().contains("FAIL"));
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in [
        SMALL.replace("nx_ratio = 4", "nx_ratio = 2"),
        SMALL.replace("[solver]", "[unknown]"),
        SMALL.replace("delta = 0.05", "delta = 0.2"),
    ] {
        let cfg = write_config(tmp.path(), &bad);
        let out = nsac(&["converge", "-c", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(nsac(&["simulate", "-c", "/nonexistent/run.ini"]).status.code(), Some(2));
}

#[test]
fn aborted_runs_exit_with_3() {
    // the diffuse circle vanishes before t_end, so the final contour is missing
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &SMALL.replace("t_end = 0.004", "t_end = 0.044").replace("save_every = 0.002", "save_every = 0.011").replace("dt_rule = factor:0.4", "dt_rule = default"),
    );
    let out = nsac(&["converge", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let errors = std::fs::read_to_string(tmp.path().join("out/errors.csv")).unwrap();
    let mut lines = errors.lines();
    let header = lines.next().unwrap().split(',').count();
    let row = lines.next().unwrap();
    assert_eq!(row.split(',').count(), header);
    assert!(row.ends_with("aborted: contour extraction failed: no zero contour"));
}
