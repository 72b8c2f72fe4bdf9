use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn symqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symqkd")).args(args).env_remove("QKD_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn h2(q: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else {
        -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn rate_full_mub_set_d3() {
    let o = symqkd(&["rate", "--scheme", "d+1", "--d", "3", "--q", "0.1"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("a        0.866666666667"), "{s}");
    assert!(s.contains("b        0.0166666666667"), "{s}");
    assert!(s.contains("method   analytic"));
}

#[test]
fn rate_json_schema() {
    let o = symqkd(&["rate", "--scheme", "2", "--d", "2", "--q", "0", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["d", "method", "params", "q", "rate", "scheme", "status"]);
    assert_eq!(v["rate"].as_f64(), Some(1.0));
    assert_eq!(v["scheme"], "2");
    assert_eq!(v["status"], "converged");
}

#[test]
fn engine_rate_reports_closed_form_delta() {
    let o = symqkd(&["rate", "--scheme", "2", "--d", "3", "--q", "0.05", "--method", "engine", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["method"], "engine");
    assert!(v["closed_form_delta"].as_f64().unwrap().abs() < 1e-7);

    let o = symqkd(&["rate", "--qubit", "cuboid", "--theta", "0.5236", "--q", "0.05", "--method", "engine"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("status   converged"));
}

#[test]
fn sweep_csv_schema_and_order() {
    let o = symqkd(&["sweep", "--scheme", "2", "--d", "2", "--q", "0.11,0,0.05", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert_eq!(s.lines().next(), Some("scheme,d,Q,rate,a,b,c,status"));
    let rows = csv_rows(&s);
    let qs: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(qs, [0.0, 0.05, 0.11]);
    for r in &rows {
        assert_eq!(r.len(), 8);
        let q: f64 = r[2].parse().unwrap();
        let rate: f64 = r[3].parse().unwrap();
        assert!((rate - (1.0 - 2.0 * h2(q))).abs() < 1e-9);
    }
}

#[test]
fn sweep_curves_start_at_log_d() {
    for d in [2usize, 3, 5, 7, 11, 13] {
        let o = symqkd(&["sweep", "--scheme", "d+1", "--d", &d.to_string(), "--q-range", "0:0.1:3", "--format", "csv"]);
        assert_eq!(code(&o), 0);
        let rows = csv_rows(&stdout(&o));
        assert_eq!(rows.len(), 3);
        let rate: f64 = rows[0][3].parse().unwrap();
        assert!((rate - (d as f64).log2()).abs() < 1e-11);
        assert!(rows[0][6].is_empty(), "d+1 family has no c parameter");
    }
}

#[test]
fn sweep_d_mubs_matches_golden() {
    let golden = include_str!("golden/sweep_d_d3.csv");
    let args = ["sweep", "--scheme", "d", "--d", "3", "--q-range", "0:0.3:16", "--format", "csv"];
    let first = stdout(&symqkd(&args));
    let second = stdout(&symqkd(&args));
    assert_eq!(first, second);
    assert_eq!(first, golden);
}

#[test]
fn output_flag_writes_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("symqkd_sweep.csv");
    let o = symqkd(&["sweep", "--scheme", "2", "--d", "2", "--q", "0.1", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("scheme,d,Q,rate,a,b,c,status\n2,2,0.1,0.0620088128214,"));
}

#[test]
fn thresholds() {
    let parse = |o: Output| -> f64 { stdout(&o).trim().parse().unwrap() };
    let q2 = parse(symqkd(&["threshold", "--scheme", "2", "--d", "2"]));
    assert!((q2 - 0.110028).abs() < 1e-6);
    let q6 = parse(symqkd(&["threshold", "--scheme", "d+1", "--d", "2"]));
    assert!((q6 - 0.126193).abs() < 1e-6);
    let q13 = parse(symqkd(&["threshold", "--scheme", "d+1", "--d", "13"]));
    assert!(q13 > q6);
    let qb = parse(symqkd(&["threshold", "--qubit", "bb84"]));
    assert!((qb - q2).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&symqkd(&["rate", "--scheme", "2", "--d", "2", "--q", "0.9"])), 2);
    assert_eq!(code(&symqkd(&["sweep", "--scheme", "2", "--d", "2", "--q", "0.1,0.7"])), 2);
    assert_eq!(code(&symqkd(&["rate", "--scheme", "2", "--d", "4", "--q", "0.1"])), 1);
    assert_eq!(code(&symqkd(&["rate", "--scheme", "3", "--q", "0.1"])), 1);
    assert_eq!(code(&symqkd(&["rate", "--q", "0.1"])), 1);
    assert_eq!(code(&symqkd(&["verify", "--suite", "nope"])), 1);
    assert_eq!(code(&symqkd(&["frobnicate"])), 1);
    assert_eq!(code(&symqkd(&["--help"])), 0);
}

#[test]
fn verify_suites() {
    let o = symqkd(&["verify", "--suite", "theorems"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("weak convexity of I"));
    assert!(s.contains("concavity of chi"));
    assert!(s.contains("unitary transform invariance"));
    assert!(s.contains("theorems: 4 checks"));

    let o = symqkd(&["verify", "--suite", "gpauli", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"].as_u64(), Some(0xC0FFEE));
}

#[test]
fn verify_symmetry_reports_commutant_dims() {
    let o = symqkd(&["verify", "--suite", "symmetry"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    for needle in ["pauli(3)=9", "octahedral=2", "dihedral(2)=3"] {
        assert!(s.contains(needle), "{needle} missing from {s}");
    }
}

#[test]
fn seed_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_symqkd"))
        .args(["verify", "--suite", "gpauli", "--format", "json"])
        .env("QKD_SEED", "0x2a")
        .output()
        .unwrap();
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"].as_u64(), Some(42));
}

#[test]
fn commutant_command() {
    let o = symqkd(&["commutant", "--group", "octahedral"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("dimension  2"));

    let o = symqkd(&["commutant", "--group", "pauli", "--d", "5", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dimension"].as_u64(), Some(25));

    let o = symqkd(&["commutant", "--qubit", "bb84", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dimension"].as_u64(), Some(3));
    let errors: Vec<f64> = v["classes"].as_array().unwrap().iter().map(|c| c["error"].as_f64().unwrap()).collect();
    for (e, want) in errors.iter().zip([0.0, 0.5, 1.0]) {
        assert!((e - want).abs() < 1e-12, "{errors:?}");
    }
    assert_eq!(errors.len(), 3);
}

#[test]
fn protocol_file_round_trip() {
    use symqkd::families::QubitProtocol;
    use symqkd::source::ProtocolFile;

    let spec = QubitProtocol::Bb84.spec().unwrap();
    let file = ProtocolFile::from_bases(spec.bases());
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("symqkd_bb84.json");
    std::fs::write(&path, file.to_json().unwrap()).unwrap();
    let o = symqkd(&["rate", "--protocol", path.to_str().unwrap(), "--q", "0.05", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["rate"].as_f64().unwrap() - (1.0 - 2.0 * h2(0.05))).abs() < 1e-8);

    let o = symqkd(&["rate", "--protocol", "/nonexistent.json", "--q", "0.05"]);
    assert_eq!(code(&o), 1);
}
