use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thinshell"))
}

#[test]
fn converge_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.json");
    fs::write(&cfg, r#"{"eps_list": [0.3, 0.15, 0.075], "t_final": 0.1, "stochastic": true, "paths": 3, "seed": 9}"#).unwrap();
    let mut reports = Vec::new();
    for w in ["1", "4"] {
        let out = dir.path().join(format!("w{w}"));
        let st = bin()
            .args(["converge", "--config", cfg.to_str().unwrap(), "--workers", w, "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(st.success());
        reports.push(fs::read(out.join("report.json")).unwrap());
        let csv = fs::read_to_string(out.join("errors.csv")).unwrap();
        assert!(csv.starts_with("eps,path_id,t,err_l2,err_dainv,energy_sphere,energy_mean,energy_fluct\n"));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn flags_override_config_and_bad_sweeps_fail() {
    let out = bin().args(["converge", "--eps-list", "0.2,0.3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["converge", "--eps-list", "0.3,0.2,0.1", "--t-final", "0.05", "--lmax", "4", "--nr", "5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"lmax\": 4") && text.contains("\"nr\": 5"));
}

#[test]
fn single_runs_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(bin().args(["sphere", "--t-final", "0.05", "--mode", "nse", "--out", d]).status().unwrap().success());
    assert!(bin().args(["shell", "--eps", "0.2", "--t-final", "0.05", "--out", d]).status().unwrap().success());
    let s = fs::read_to_string(dir.path().join("sphere.csv")).unwrap();
    let h = fs::read_to_string(dir.path().join("shell.csv")).unwrap();
    assert!(s.starts_with("t,norm_l2,norm_curl,"));
    assert!(h.starts_with("t,norm_l2,norm_curl,norm_alpha,"));
    assert!(s.lines().count() > 2 && h.lines().count() > 2);
}

#[test]
fn check_reports_and_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["check", "--select", "poincare", "--out", dir.path().to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("0 failed"));
    assert!(dir.path().join("check.json").exists());
    assert_eq!(bin().args(["check", "--select", "bogus"]).status().unwrap().code(), Some(2));
}
