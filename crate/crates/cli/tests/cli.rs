use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pulsediv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulsediv"))
        .args(args)
        .env_remove("PULSEDIV_JOBS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn table_one_full_cos(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("full_cos.json");
    std::fs::write(
        &p,
        r#"{"kind":"cosine","A_mhz":13.91,"tg_ns":36.0,"alpha":2.0,"f_mhz":-515.31,"c":1.0}"#,
    )
    .unwrap();
    p
}

#[test]
fn decompose_check_prints_four_passes() {
    let o = pulsediv(&["decompose-check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.ends_with("pass")).count(), 4, "{out}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = pulsediv(&["decompose-check", "--frobnicate"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn tune_requires_a_seed() {
    let o = pulsediv(&["tune", "--gate", "iswap", "--fraction", "1/2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bad_values_exit_with_validation_code() {
    assert_eq!(code(&pulsediv(&["tune", "--gate", "swap", "--fraction", "1", "--seed", "1"])), 1);
    assert_eq!(code(&pulsediv(&["tune", "--fraction", "1/0", "--seed", "1"])), 1);
    assert_eq!(code(&pulsediv(&["vqe", "--nq", "3", "-T", "1", "-N", "1"])), 1);
    assert_eq!(code(&pulsediv(&["vqe", "--nq", "4,6"])), 1);
    assert_eq!(code(&pulsediv(&["--p2q", "1.5", "decompose-check"])), 1);
}

#[test]
fn evaluate_full_cosine_row() {
    let dir = tempfile::tempdir().unwrap();
    let wf = table_one_full_cos(dir.path());
    let out = dir.path().join("eval.json");
    let dump = dir.path().join("wf.csv");
    let o = pulsediv(&["evaluate", "--gate", "iswap", "--waveform", s(&wf), "--out", s(&out), "--dump-waveform", s(&dump)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    let err = v["error"].as_f64().unwrap();
    // quoted 0.51e-5, order of magnitude
    assert!(err > 0.51e-6 && err < 0.51e-4, "error {err}");
    assert!((v["theta"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-15);
    assert!(out.with_file_name("eval.json.manifest.json").exists());

    let text = std::fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_ns,omega_mhz"));
    let rows: Vec<&str> = lines.collect();
    // 0.01 ns spacing over 36 ns, both endpoints
    assert_eq!(rows.len(), 3601);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));
}

#[test]
fn config_then_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let wf = table_one_full_cos(dir.path());
    let cfg = dir.path().join("dev.json");
    std::fs::write(&cfg, r#"{"delta1_mhz": 250.0, "delta2_mhz": 250.0, "levels": 4}"#).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["evaluate", "--waveform", s(&wf), "--config", s(&cfg)];
        args.extend_from_slice(extra);
        let o = pulsediv(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_str::<Value>(&stdout(&o)).unwrap()
    };
    let from_file = run(&[]);
    assert_eq!(from_file["device"]["delta1_mhz"].as_f64(), Some(250.0));
    assert_eq!(from_file["device"]["levels"].as_u64(), Some(4));
    let flagged = run(&["--delta", "320"]);
    assert_eq!(flagged["device"]["delta2_mhz"].as_f64(), Some(320.0));
    assert_eq!(flagged["device"]["levels"].as_u64(), Some(4));

    std::fs::write(&cfg, r#"{"delta_typo": 1.0}"#).unwrap();
    assert_eq!(code(&pulsediv(&["evaluate", "--waveform", s(&wf), "--config", s(&cfg)])), 1);
}

#[test]
fn leakage_trace_writes_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let wf = table_one_full_cos(dir.path());
    let cfg = dir.path().join("dev.json");
    std::fs::write(&cfg, r#"{"delta1_mhz": 300.0, "delta2_mhz": 300.0}"#).unwrap();
    let out = dir.path().join("trace.csv");
    let o = pulsediv(&["leakage-trace", "--config", s(&cfg), "--waveform", s(&wf), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t_ns,p_out\n"));
    let p: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(p.len() > 100);
    assert!(p.iter().all(|&x| (-1e-12..=1.0).contains(&x)));
    let manifest = json(&dir.path().join("trace.csv.manifest.json"));
    assert_eq!(manifest["config_paths"][0].as_str(), Some(s(&cfg)));
}

#[test]
fn coarse_trace_reports_convergence_failure() {
    let dir = tempfile::tempdir().unwrap();
    let wf = table_one_full_cos(dir.path());
    let out = dir.path().join("trace.csv");
    let o = pulsediv(&["leakage-trace", "--waveform", s(&wf), "--step", "0.05", "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn tune_is_reproducible_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = pulsediv(&[
            "tune", "--gate", "iswap", "--fraction", "1/2", "--envelope", "cosine", "--alpha-mode", "free", "--seed", "7",
            "--quick", "--out", s(out),
        ]);
        assert!([0, 2].contains(&code(&o)), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = json(&a);
    assert_eq!(v["seed"].as_u64(), Some(7));
    assert_eq!(v["problem"]["tg"].as_f64(), Some(18.0));
    let m = json(&dir.path().join("a.json.manifest.json"));
    assert_eq!(m["seed"].as_u64(), Some(7));
    assert!(m["timestamp"].as_str().unwrap().contains('T'));
    assert!(m["command"].as_array().unwrap().iter().any(|c| c == "tune"));
}

#[test]
fn fixed_schedule_vqe_json() {
    let o = pulsediv(&["vqe", "--nq", "4", "--mode", "stock", "-T", "2", "-N", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = v["fraction"].as_f64().unwrap();
    assert!(f > 0.0 && f < 1.0);
    assert_eq!(v["best_n"].as_u64(), Some(4));
}

#[test]
fn vqe_stock_four_qubits() {
    let o = pulsediv(&["--jobs", "1", "vqe", "--nq", "4", "--mode", "stock"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = v["fraction"].as_f64().unwrap();
    // quoted 0.507
    assert!((f - 0.507).abs() <= 0.05, "fraction {f}");
}

#[test]
fn vqe_sweep_and_plotdata_grid() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table3.csv");
    let o = pulsediv(&["vqe", "--sweep", "--modes", "all", "--nq", "2", "-T", "1", "-N", "2", "--out", s(&table)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("nq,mode,fraction,best_T,best_N,energy,ground_energy\n"));

    let grid = dir.path().join("grid.csv");
    let o = pulsediv(&["plotdata", "vqe", "--input", s(&table), "--out", s(&grid)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = std::fs::read_to_string(&grid).unwrap();
    let lines: Vec<&str> = g.lines().collect();
    assert_eq!(lines[0], "nq,stock,continuous,error_divisible");
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 4);
}

const SMALL_TABLE: &str = "\
fraction,tg_ns,A_mhz,f_mhz,gamma,envelope,alpha_mode,error,converged
1,3.6e1,1.391e1,-5.1531e2,,cosine,free,5.1e-6,true
1/2,1.8e1,1.24e1,-5.2e2,,cosine,free,2e-6,true
1/2,1.8e1,8.8e0,-5.8e2,9.2e0,tanh,free,2e-5,true
";

#[test]
fn plotdata_pulses_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    std::fs::write(&table, SMALL_TABLE).unwrap();

    let pulses = dir.path().join("pulses");
    let o = pulsediv(&["plotdata", "pulses", "--input", s(&table), "--out", s(&pulses), "--envelope", "cosine"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csvs: Vec<_> = std::fs::read_dir(&pulses)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csvs.len(), 2);
    for p in &csvs {
        let t = std::fs::read_to_string(p).unwrap();
        assert!(t.starts_with("t_ns,omega_mhz\n"));
    }

    let errors = dir.path().join("errors.csv");
    let o = pulsediv(&["plotdata", "errors", "--input", s(&table), "--out", s(&errors)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = std::fs::read_to_string(&errors).unwrap();
    assert_eq!(t.lines().count(), 4);
    assert!(t.lines().nth(2).unwrap().starts_with("1/2,5.000000000000000e-1,"));

    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&pulsediv(&["plotdata", "errors", "--input", s(&missing), "--out", s(&errors)])), 1);
}
