use std::io::Write;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn spinj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinj"))
        .args(args)
        .env_remove("SPINJ_THREADS")
        .output()
        .expect("spawn spinj")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

fn csv_table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn bounds_json_has_envelope() {
    let o = spinj(&["bounds", "--family", "geometric", "--n", "50", "--r", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["schema_version"], "1.0");
    assert_eq!(v["command"]["name"], "bounds");
    assert!(v["provenance"]["library_version"].is_string());
    assert!(v["provenance"]["tolerances"]["bfy_tie"].is_number());
    let b = &v["payload"]["bounds"];
    let sld = b["sld_bound"].as_f64().unwrap();
    let rld = b["rld_bound"].as_f64().unwrap();
    let hn = b["hn_upper_from_x_star"].as_f64().unwrap();
    assert!(sld <= rld * (1.0 + 1e-8) && rld <= hn * (1.0 + 1e-8));
    assert_eq!(v["payload"]["global"]["bfy_holds"], true);
}

#[test]
fn half_dicke_bounds_csv() {
    let o = spinj(&["bounds", "--family", "binomial", "--n", "4", "--p", "0.5", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# schema_version: 1.0\n"));
    let (header, rows) = csv_table(&text);
    assert_eq!(rows.len(), 1);
    let col = |name: &str| rows[0][header.iter().position(|h| h == name).unwrap()].parse::<f64>().unwrap();
    // Unitary SLD Fisher: F₁₁ = 4 Σ_k (p_k−p_{k+1})²/(p_k+p_{k+1}) |⟨k|J₁|k+1⟩|².
    let p: Vec<f64> = [1.0, 4.0, 6.0, 4.0, 1.0].iter().map(|c| c / 16.0).collect();
    let j = 2.0;
    let mut f11 = 0.0;
    for k in 0..4 {
        let m = -j + k as f64;
        let jplus = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
        let elem = 0.5 * jplus;
        f11 += 4.0 * (p[k] - p[k + 1]).powi(2) / (p[k] + p[k + 1]) * elem * elem;
    }
    assert!((col("f11") - f11).abs() < 1e-12, "{} vs {f11}", col("f11"));
    assert!((col("r_max") - 0.5).abs() < 1e-12);
}

#[test]
fn geometric_r_one_is_usage_error() {
    let o = spinj(&["bounds", "--family", "geometric", "--n", "4", "--r", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r must differ from 1"));
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        vec!["simulate", "--family", "binomial", "--n", "4", "--p", "0.5", "--samples", "0"],
        vec!["scan", "--family", "delta", "--a", "0", "--n-min", "5", "--n-max", "3"],
        vec!["bounds", "--family", "binomial", "--n", "4", "--p", "1.5"],
        vec!["bounds", "--family", "binomial", "--n", "4"],
        vec!["bounds", "--family", "nonsense", "--n", "4"],
        vec!["simulate", "--family", "binomial", "--n", "4", "--p", "0.5", "--theta", "1"],
        vec!["nothing"],
    ] {
        let o = spinj(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn non_bfy_state_simulation_is_computation_error() {
    // Weight piled on the lowest level fails BFY.
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "0.9\n0.05\n0.05").unwrap();
    let path = f.path().to_str().unwrap();
    let o = spinj(&["simulate", "--family", "custom", "--weights", path, "--samples", "10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("BFY"));
}

#[test]
fn custom_weights_warn_on_renormalization() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# three levels\n1\n2\n3").unwrap();
    let path = f.path().to_str().unwrap();
    let o = spinj(&["bounds", "--family", "custom-file", "--weights", path]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let v = json(&o);
    assert_eq!(v["payload"]["n"], 2);
    assert_eq!(v["provenance"]["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_is_byte_deterministic() {
    let args = ["simulate", "--family", "binomial", "--n", "3", "--p", "0.7", "--samples", "5000", "--seed", "11"];
    let a = spinj(&args);
    let b = spinj(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = spinj(&["simulate", "--family", "binomial", "--n", "3", "--p", "0.7", "--samples", "5000", "--seed", "12"]);
    assert_ne!(json(&a)["payload"]["result"], json(&other)["payload"]["result"]);
}

#[test]
fn simulate_independent_of_thread_count() {
    let base = ["simulate", "--family", "geometric", "--n", "4", "--r", "3", "--samples", "40000", "--seed", "5", "--format", "csv"];
    let one: Vec<&str> = base.iter().copied().chain(["--threads", "1"]).collect();
    let four: Vec<&str> = base.iter().copied().chain(["--threads", "4"]).collect();
    let a = spinj(&one);
    let b = spinj(&four);
    assert!(a.status.success() && b.status.success());
    let strip = |o: &Output| stdout(o).lines().filter(|l| !l.starts_with("# command")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn simulate_grid_reports_each_point() {
    let o = spinj(&[
        "simulate", "--family", "binomial", "--n", "2", "--p", "0.5", "--samples", "2000", "--seed", "1", "--grid", "fibonacci:5", "--format", "csv",
    ]);
    assert!(o.status.success());
    let (header, rows) = csv_table(&stdout(&o));
    assert_eq!(rows.len(), 5);
    assert!(header.contains(&"analytic_r".to_string()));
}

#[test]
fn scan_half_dicke_twenty_rows() {
    let o = spinj(&["scan", "--family", "delta", "--a", "0", "--n-min", "10", "--n-max", "200", "--n-step", "10", "--outputs", "sld,global_eta", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_table(&stdout(&o));
    assert_eq!(rows.len(), 20);
    let eta = header.iter().position(|h| h == "eta").unwrap();
    let n = header.iter().position(|h| h == "n").unwrap();
    let ns: Vec<usize> = rows.iter().map(|r| r[n].parse().unwrap()).collect();
    assert_eq!(ns, (1..=20).map(|i| 10 * i).collect::<Vec<_>>());
    assert!(rows[19][eta].parse::<f64>().unwrap() >= 1.9);
}

#[test]
fn scan_csv_header_matches_json_rows() {
    let csv_out = spinj(&["scan", "--family", "geometric", "--r", "2,3", "--n-list", "2,8", "--format", "csv"]);
    let json_out = spinj(&["scan", "--family", "geometric", "--r", "2,3", "--n-list", "2,8"]);
    assert!(csv_out.status.success() && json_out.status.success());
    let (header, rows) = csv_table(&stdout(&csv_out));
    let v = json(&json_out);
    let jrows = v["payload"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(jrows.len(), 4);
    let keys: Vec<&String> = jrows[0].as_object().unwrap().keys().collect();
    let mut sorted_header = header.clone();
    sorted_header.sort();
    let mut sorted_keys: Vec<String> = keys.into_iter().cloned().collect();
    sorted_keys.sort();
    assert_eq!(sorted_header, sorted_keys);
    // Values agree exactly between the two encodings.
    let sld = header.iter().position(|h| h == "sld_bound").unwrap();
    for (r, j) in rows.iter().zip(jrows) {
        assert_eq!(r[sld].parse::<f64>().unwrap(), j["sld_bound"].as_f64().unwrap());
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let o = spinj(&["bounds", "--family", "delta", "--n", "6", "--a", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["payload"]["family"], "delta");
}

#[test]
fn verify_quick_suite_passes_fast() {
    let start = Instant::now();
    let o = spinj(&["verify", "--max-n", "4"]);
    let elapsed = start.elapsed();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let (passed, total) = last.split_once(" checks").unwrap().0.split_once('/').unwrap();
    assert_eq!(passed, total);
    assert!(elapsed < Duration::from_secs(5), "{elapsed:?}");
}

#[test]
fn verify_detects_injected_fault() {
    let o = spinj(&["verify", "--max-n", "4", "--inject-fault"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn verify_json_lists_checks() {
    let o = spinj(&["verify", "--max-n", "3", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 20);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn bad_thread_env_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_spinj"))
        .args(["verify", "--max-n", "2"])
        .env("SPINJ_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_default_run_exits_zero() {
    let o = spinj(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let rows = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count();
    assert!(rows >= 40, "{rows} checks");
}

#[test]
fn half_dicke_bounds_json() {
    let o = spinj(&["bounds", "--family", "delta", "--n", "100", "--a", "0", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    // Pure |50;0⟩: F₁₁ = 4 Var(J₁) = 2j(j+1) = 5100.
    let sld = v["payload"]["bounds"]["sld_bound"].as_f64().unwrap();
    assert!((sld - 2.0 / 5100.0).abs() < 1e-12);
    let eta = v["payload"]["global"]["eta"].as_f64().unwrap();
    assert!((eta - 2.0).abs() < 1e-9);
    assert_eq!(v["payload"]["bounds"]["rld_reason"], "RLD_SINGULAR");
}

#[test]
fn simulate_geometric_matches_closed_form() {
    let o = spinj(&["simulate", "--family", "geometric", "--n", "10", "--r", "2", "--samples", "100000", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let analytic = v["payload"]["analytic_r"].as_f64().unwrap();
    // (1 + E[k])/(n+2) with E[k] summed directly.
    let w: Vec<f64> = (0..=10).map(|k| 2f64.powi(k)).collect();
    let z: f64 = w.iter().sum();
    let mean_k: f64 = w.iter().enumerate().map(|(k, x)| k as f64 * x).sum::<f64>() / z;
    assert!((analytic - (1.0 + mean_k) / 12.0).abs() < 1e-12);
    let r = &v["payload"]["result"];
    let z_score = (r["mean_fidelity"].as_f64().unwrap() - analytic).abs() / r["std_error"].as_f64().unwrap();
    assert!(z_score < 3.0, "{z_score}");
}
