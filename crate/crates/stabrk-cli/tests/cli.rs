use std::path::Path;
use std::process::{Command, Output};

fn stabrk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabrk")).args(args).output().expect("spawn stabrk")
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout).lines().map(str::to_string).collect()
}

fn csv_field(line: &str, idx: usize) -> f64 {
    line.split(',').nth(idx).unwrap().parse().unwrap()
}

#[test]
fn integrate_adaptive_succeeds() {
    let out = stabrk(&[
        "integrate",
        "--problem",
        "robertson",
        "--method",
        "mrock2",
        "--control",
        "adaptive",
        "--t-end",
        "1",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "t,err,s,m,eta,dt,y0,y1,y2");
    assert!(lines.len() > 2);
}

#[test]
fn unknown_method_is_usage_error() {
    let out = stabrk(&["integrate", "--method", "euler", "--t-end", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = stabrk(&["integrate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixed_step_lands_on_t_end() {
    let out = stabrk(&[
        "integrate",
        "--problem",
        "robertson",
        "--method",
        "rock2",
        "--control",
        "fixed",
        "--tau",
        "0.3",
        "--t-end",
        "1",
    ]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let last_t = csv_field(lines.last().unwrap(), 0);
    assert_eq!(last_t, 1.0, "final row must land on t_end exactly");
}

#[test]
fn convergence_rows_and_eval_split() {
    let out = stabrk(&[
        "convergence",
        "--methods",
        "mrkc,rock2",
        "--taus",
        "0.25,0.125",
        "--t-end",
        "1",
        "--ref-tau",
        "1e-3",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "method,dt,error,evals_fS,evals_fF");
    assert_eq!(lines.len(), 5);
    // errors shrink with the step size
    assert!(csv_field(&lines[2], 2) < csv_field(&lines[1], 2));
    assert!(csv_field(&lines[4], 2) < csv_field(&lines[3], 2));
}

#[test]
fn convergence_empty_ladder_is_header_only() {
    let out = stabrk(&["convergence", "--taus", "", "--t-end", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout_lines(&out), vec!["method,dt,error,evals_fS,evals_fF"]);
}

#[test]
fn speedup_single_point() {
    let out = stabrk(&["speedup", "--c-f", "0.05", "--r-rho", "100"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "c_F,r_rho,S,S_bar");
    assert_eq!(lines.len(), 2);
    let s = csv_field(&lines[1], 2);
    let s_bar = csv_field(&lines[1], 3);
    assert!(s > 1.0 && s_bar >= s);
}

#[test]
fn stability_scan_stays_in_bounds() {
    let out = stabrk(&["stability-scan", "--kind", "theorem22", "--points", "50"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "lambda,z,inner,outer,in_bounds");
    assert!(lines.len() > 10);
    for line in &lines[1..] {
        assert_eq!(line.split(',').nth(4).unwrap(), "1");
    }
}

#[test]
fn mesh_export_is_parseable() {
    let out = stabrk(&["mesh-export", "--domain", "square", "--j", "2", "--levels", "1"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let n: usize = lines[0].strip_prefix("vertices ").unwrap().parse().unwrap();
    for line in &lines[1..=n] {
        let coords: Vec<f64> = line.split_whitespace().map(|v| v.parse().unwrap()).collect();
        assert_eq!(coords.len(), 2);
    }
    let tri_header = &lines[n + 1];
    let m: usize = tri_header.strip_prefix("triangles ").unwrap().parse().unwrap();
    assert!(m > 0);
}

#[test]
fn config_file_with_flag_override_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "c_f=0.05\nr_rho=1,10\n").unwrap();
    let out_path = dir.path().join("speedup.csv");
    let out = stabrk(&[
        "speedup",
        "--config",
        config.to_str().unwrap(),
        "--r-rho",
        "100",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    // r_rho flag overrides the two-point grid from the config file
    assert_eq!(rows.len(), 2);
    assert_eq!(csv_field(rows[1], 1), 100.0);

    let sidecar = std::fs::read_to_string(Path::new(&format!(
        "{}.config",
        out_path.to_str().unwrap()
    )))
    .unwrap();
    assert!(sidecar.contains("c_f=0.05"), "sidecar: {sidecar}");
    assert!(sidecar.contains("r_rho=100"), "sidecar: {sidecar}");
}

#[test]
fn bad_config_line_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "this is not key value\n").unwrap();
    let out = stabrk(&["speedup", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lshape_zero_forcing_has_zero_error() {
    let out = stabrk(&[
        "lshape",
        "--big-h",
        "0.2",
        "--small-h",
        "0.05",
        "--methods",
        "mrock2",
        "--tau",
        "0.01",
        "--t-end",
        "0.05",
        "--forcing",
        "zero",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "method,H,dt,err_exact,rho_S,rho_F,s,m,evals");
    assert_eq!(csv_field(&lines[1], 3), 0.0);
}

#[test]
fn heat_manufactured_error_is_small() {
    let out = stabrk(&[
        "heat",
        "--j-min",
        "3",
        "--j-max",
        "3",
        "--levels",
        "2",
        "--methods",
        "mrock2",
        "--t-end",
        "0.02",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 2);
    let err = csv_field(&lines[1], 3);
    assert!(err > 0.0 && err < 1e-2, "err = {err}");
}
