use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cp-bench")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"system":"mimo2","p":5,"k_list":[2,1],"fading":{"model":"rician","kappa":0.05},
  "correlation":{"rho_tx":0.2,"rho_rx":0.1},"trials":40,"master_seed":9}"#;

#[test]
fn codebook_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cb.csv");
    let o = bench(&["codebook", "--p", "5", "--k", "2", "--n", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 26);
    assert_eq!(lines[0], "index,bits,re_1,im_1,re_2,im_2,re_3,im_3,re_4,im_4");
    assert!(lines[25].starts_with("24,11000,"));
    let back = cp_beamforming::export::load_codebook_file(&out).unwrap();
    assert_eq!((back.p().get(), back.k(), back.n()), (5, 2, 4));
}

#[test]
fn simulate_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("r{threads}.csv"));
        let o = bench(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read_to_string(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let lines: Vec<&str> = outputs[0].lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("model,n_r,n_t,p,k,B,M,trials,seed,"));
    assert!(lines[1].starts_with("rician:0.05+corr:0.2:0.1,2,4,5,1,3,,40,9,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let out = out.to_str().unwrap();
    let unknown = write_config(dir.path(), r#"{"system":"miso","p":5,"k_list":[1],"fading":{"model":"rayleigh"},"bogus":1}"#);
    assert_eq!(code(&bench(&["simulate", "--config", &unknown, "--out", out])), 2);
    let bad_json = write_config(dir.path(), "{ not json");
    assert_eq!(code(&bench(&["simulate", "--config", &bad_json, "--out", out])), 2);
    assert_eq!(code(&bench(&["reproduce", "fig99"])), 2);
    assert_eq!(code(&bench(&["reproduce", "table1", "--trials", "0"])), 2);
}

#[test]
fn infeasible_parameters_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cb.csv");
    let out = out.to_str().unwrap();
    assert_eq!(code(&bench(&["codebook", "--p", "9", "--k", "1", "--n", "4", "--out", out])), 3);
    assert_eq!(code(&bench(&["codebook", "--p", "5", "--k", "5", "--n", "4", "--out", out])), 3);
    assert_eq!(code(&bench(&["bounds", "--p", "5", "--n", "5", "--k", "2"])), 3);
}

#[test]
fn long_run_guard_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"system":"miso","p":11,"k_list":[6],"fading":{"model":"rayleigh"},"trials":10}"#,
    );
    let out = dir.path().join("r.csv");
    let o = bench(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bounds_and_covering_report() {
    let o = bench(&["bounds", "--p", "5", "--n", "4", "--k", "4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("qe_bound=0.757"), "{text}");
    assert!(text.contains("distortion_bound=0.710"), "{text}");
    let o = bench(&["covering", "--p", "5", "--n", "4", "--k", "2"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "covering_radius=2 n_minus_k=2");
}

#[test]
fn egt_baseline_reports_gain() {
    let o = bench(&["egt-baseline", "--nt", "4", "--trials", "50"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let db: f64 = text.split("egt_db=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((6.0..8.5).contains(&db), "{text}");
}
