use std::path::Path;
use std::process::{Command, Output};

fn condlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condlab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn dirichlet_fit_matches_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, fit) = (path(dir.path(), "d.csv"), path(dir.path(), "d.json"));
    let o = condlab(&["dirichlet", "--lambda", "-0.5", "--mmax", "4096", "--out", &csv, "--fit-out", &fit]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&fit).unwrap()).unwrap();
    assert!((report["gamma"].as_f64().unwrap() - 0.75).abs() < 0.03);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("m,norm\n16,"));
    // 17 significant digits: one leading digit and 16 decimals.
    let v = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(v.split('e').next().unwrap().len(), 18);
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.cfg");
    let first = condlab(&["greedy", "--system", "almost_greedy:0.5,0.5,8,6", "--support", "40", "--samples", "5", "--seed", "9", "--emit-config", &cfg]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let cfg2 = path(dir.path(), "again.cfg");
    let second = condlab(&["--config", &cfg, "--emit-config", &cfg2]);
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read(&cfg).unwrap(), std::fs::read(&cfg2).unwrap());
    let jobs = condlab(&["--config", &cfg, "--jobs", "1"]);
    assert_eq!(first.stdout, jobs.stdout);
}

#[test]
fn explicit_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "k.cfg");
    std::fs::write(&cfg, "subcommand=kmeasure\nsystem=orthonormal:6\nm=1..3\ntilde=true\n").unwrap();
    let o = condlab(&["--config", &cfg, "--m", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().nth(1).unwrap().starts_with("ktilde,"));
    assert!(out.contains(",5,1.0000000000000000e0,exact"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&condlab(&["nonsense"])), 2);
    assert_eq!(code(&condlab(&["dirichlet"])), 2);
    let o = condlab(&["kmeasure", "--system", "orthonormal:4", "--m", "1..2", "--mode", "heuristic"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    let o = condlab(&["kmeasure", "--system", "orthonormal:4", "--m", "1..x"]);
    assert_eq!(code(&o), 2);
    let o = condlab(&["kmeasure", "--system", "orthonormal:40", "--m", "30"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("conditionality"));
    assert_eq!(code(&condlab(&["dirichlet", "--lambda", "1.5"])), 3);
    assert_eq!(code(&condlab(&["--help"])), 0);
}

#[test]
fn help_describes_every_subcommand() {
    let help = String::from_utf8(condlab(&["--help"]).stdout).unwrap();
    for sub in ["wcoef", "dirichlet", "fm", "gram", "kmeasure", "delta", "phi", "transform", "dkk", "greedy", "fit", "accept", "report"] {
        let line = help.lines().find(|l| l.trim_start().starts_with(sub)).unwrap_or_else(|| panic!("{sub} missing"));
        assert!(line.trim().len() > sub.len() + 10, "{sub} lacks a description");
    }
}

#[test]
fn fit_and_report_read_series() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "k.csv");
    let o = condlab(&["kmeasure", "--system", "aa_diamond:0.5,0.5,6", "--m", "1..12", "--tilde", "--out", &csv]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = condlab(&["fit", "--input", &csv, "--model", "power"]);
    assert_eq!(code(&o), 0);
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fit["points_used"], 12);
    let md = path(dir.path(), "r.md");
    let o = condlab(&["report", "--inputs", &csv, "--out", &md]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&md).unwrap();
    assert!(text.contains("12 rows") && text.contains("Power fit"));
}

#[test]
fn other_subcommands_run() {
    let ok = |args: &[&str]| {
        let o = condlab(args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    let w = ok(&["wcoef", "--lambda", "0", "--nmax", "4"]);
    assert!(w.starts_with("n,coeff\n0,1.0000000000000000e0"));
    assert_eq!(ok(&["gram", "--system", "orthonormal:3"]).lines().count(), 3);
    assert!(ok(&["fm", "--alpha", "0.5", "--mmax", "1024"]).starts_with("m,norm_sq,harmonic,ratio"));
    let d = ok(&["delta", "--left", "trig:-0.5,6", "--right", "trig:0.5,6", "--m", "1..3"]);
    assert_eq!(d.lines().count(), 4);
    assert!(ok(&["phi", "--system", "orthonormal:5", "--m", "1..5"]).contains(",5,2.2360679774997898e0,exact"));
    assert!(ok(&["transform", "--system", "trig:0.5,33,complex", "--space", "lorentz:4,2", "--direction", "besselian", "--scales", "4..32*2", "--seed", "1"]).starts_with("scale,ratio"));
    assert!(ok(&["dkk", "--system", "almost_greedy:0.5,0.5,8,8", "--m", "4..128*2"]).contains("ktilde_witness"));
    let o = condlab(&["accept", "--only", "6"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS]  6"));
}
