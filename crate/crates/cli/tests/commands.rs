use std::process::Command;

use bates_cli::config::{Method, Settings};
use bates_cli::experiments;

fn bates() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bates"))
}

#[test]
fn degenerate_config_gives_monotone_slice() {
    let mut s = Settings::default();
    s.params.lambda = 0.0;
    s.params.sigma = 0.05;
    for method in [Method::Hocfd, Method::Fd2, Method::Fem] {
        s.method = method;
        let r = experiments::price(&s).unwrap();
        assert!(!r.slice.is_empty());
        assert!(r.slice.windows(2).all(|w| w[1].v <= w[0].v), "{method}");
    }
}

#[test]
fn price_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bates().args(["price", "--preset", "figure1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let surface = std::fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert!(surface.starts_with("x,y,u,S,v,V\n"));
    assert_eq!(surface.lines().count(), 1 + 41 * 41);
    let slice = std::fs::read_to_string(dir.path().join("slice.csv")).unwrap();
    assert!(slice.starts_with("S,V,intrinsic,lower_bound,upper_bound\n"));
    for line in slice.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(v[3] <= v[1] && v[1] <= v[4]);
    }
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "spatial_method = \"fem\"\njump_nodes = 32\ntime_levels = [4, 8]\ntime_reference_steps = 32\n").unwrap();
    let out = bates()
        .args(["converge-time", "--method", "fd2", "--scheme", "bdf2", "--levels", "8,16"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let ks: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(ks, ["0.125", "0.0625"]);
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "y_min = 0.0\n").unwrap();
    let out = bates().arg("price").arg("--config").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let out = bates().args(["converge-space", "--levels", "0.2"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let out = bates().args(["bench", "--eta-exponent", "3"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let out = bates().args(["price", "--levels", "0.1"]).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn bench_rows_and_columns() {
    let mut s = Settings::default();
    s.jump_nodes = 64;
    s.reference_factor = 2;
    s.bench_repeats = 1;
    let outcome = experiments::bench(&s).unwrap();
    let r = &outcome.records;
    assert!(outcome.failures.is_empty());
    let dofs: Vec<usize> = r.iter().map(|x| x.dof).collect();
    assert_eq!(dofs, [1681, 6561, 1681, 1681, 1681]);
    assert_eq!(r[0].eta, 1.0);
    assert!(r.iter().all(|x| x.q == 1 && x.times.len() == 1 && x.l2 > 0.0));
    let mut csv = Vec::new();
    bates_core::analysis::EfficiencyRecord::write_csv(r, &mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("method,dof,time_s,l2,rmse,eta,q\n"));
}
