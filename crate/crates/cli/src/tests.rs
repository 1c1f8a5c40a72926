//! Every subcommand run in-process through [`run_cli`]: exit code plus at
//! least one report row or data record.

use super::run_cli;
use serde_json::Value;
use std::path::Path;
use std::sync::RwLock;

/// Guards the process environment: only the env-override test writes it.
static ENV: RwLock<()> = RwLock::new(());

struct Output {
    code: u8,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
}

fn run_with_env_held(args: &[&str]) -> Output {
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let argv = std::iter::once("osgood").chain(args.iter().copied());
    let code = run_cli(argv, &mut stdout, &mut stderr);
    Output { code, stdout, stderr }
}

fn osgood(args: &[&str]) -> Output {
    let _guard = ENV.read().unwrap_or_else(|e| e.into_inner());
    run_with_env_held(args)
}

fn code(o: &Output) -> u8 {
    o.code
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn row<'a>(rep: &'a Value, id: &str) -> &'a Value {
    rep["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["check_id"] == id)
        .unwrap_or_else(|| panic!("no row {id}"))
}

fn assert_rows_pass(rep: &Value) {
    let rows = rep["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        assert_eq!(r["passed"], true, "{r}");
    }
    assert_eq!(rep["summary"]["failed"], 0);
}

#[test]
fn mu_list_and_eval() {
    let o = osgood(&["mu", "list"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("sqrt"));

    let o = osgood(&["mu", "eval", "--name", "sqrt", "--s", "0.25"]);
    assert_eq!(code(&o), 0);
    assert_eq!(report(&o)["value"], 0.5);

    let o = osgood(&["mu", "eval", "--name", "nope", "--s", "0.25"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn mu_osgood_classifies_sqrt_as_convergent() {
    let o = osgood(&["mu", "osgood", "--name", "sqrt"]);
    assert_eq!(code(&o), 0);
    let rep = report(&o);
    let r = row(&rep, "osgood_classification");
    assert_eq!(r["note"], "classification: Convergent");
    assert!((r["details"]["integral"].as_f64().unwrap() - (2.0 - 2e-6)).abs() < 1e-8);

    let o = osgood(&["mu", "osgood", "--name", "linear"]);
    assert_eq!(code(&o), 0);
    assert_eq!(row(&report(&o), "osgood_classification")["note"], "classification: Divergent");
}

#[test]
fn mu_check_passes_for_loglinear() {
    let o = osgood(&["mu", "check", "--name", "loglinear"]);
    assert_eq!(code(&o), 0);
    assert_rows_pass(&report(&o));
    assert_eq!(code(&osgood(&["mu", "check", "--name", "sqrt", "--samples", "4"])), 1);
}

#[test]
fn weight_subcommands() {
    let o = osgood(&["weight", "build", "--mu", "linear", "--t-max", "100"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("t,phi,tau,Phi,Phi1,Phi2"));
    assert!(text.lines().count() > 10);

    let o = osgood(&["weight", "eval", "--mu", "linear", "--t", "10", "--gamma", "8"]);
    assert_eq!(code(&o), 0);
    let v = report(&o);
    assert!((v["phi"].as_f64().unwrap() - 10f64.ln()).abs() < 1e-7);
    assert!((v["Phi"].as_f64().unwrap() - 9.0).abs() < 1e-6);

    let o = osgood(&["weight", "check", "--mu", "loglinear"]);
    assert_eq!(code(&o), 0);
    assert_rows_pass(&report(&o));

    let o = osgood(&["weight", "probe", "--family", "sin2-cos"]);
    assert_eq!(code(&o), 0);
    assert_eq!(row(&report(&o), "probe_feasible")["passed"], true);

    // the weight needs an Osgood-divergent modulus
    assert_eq!(code(&osgood(&["weight", "build", "--mu", "sqrt"])), 1);
}

#[test]
fn lp_subcommands() {
    let o = osgood(&["lp", "decompose", "--dim", "1", "--resolution", "64", "--nu", "2"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).lines().count() >= 64);

    let o = osgood(&["lp", "check", "--dim", "2", "--resolution", "32", "--fields", "3"]);
    assert_eq!(code(&o), 0);
    assert_rows_pass(&report(&o));

    let o = osgood(&["lp", "probe"]);
    assert_eq!(code(&o), 0);
    assert_rows_pass(&report(&o));

    assert_eq!(code(&osgood(&["lp", "decompose", "--resolution", "64", "--nu", "40"])), 1);
}

#[test]
fn mollify_check_exit_codes() {
    let o = osgood(&["mollify", "check", "--family", "sawtooth"]);
    assert_eq!(code(&o), 0);
    let rep = report(&o);
    assert_rows_pass(&rep);
    assert!(row(&rep, "sawtooth_error_constant_spread")["details"]["C"].as_f64().unwrap() > 0.0);

    // the coefficient of the example has no ε-stable constants: exit 2
    let o = osgood(&[
        "mollify", "check", "--family", "pliss-l", "--segments", "20", "--eps-max", "0.0625", "--eps-min", "0.0009765625",
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(row(&report(&o), "pliss-l_error_constant_spread")["passed"], false);

    assert_eq!(code(&osgood(&["mollify", "check", "--eps-min", "0.1", "--eps-max", "0.01"])), 1);
}

#[test]
fn pliss_build_eval_verify() {
    let o = osgood(&["pliss", "build", "--mu", "sqrt"]);
    assert_eq!(code(&o), 0);
    let v = report(&o);
    assert_eq!(v["k0"], 1440);
    assert_eq!(v["segments"], 10);

    let o = osgood(&["pliss", "build", "--k0", "3000", "--segments", "12"]);
    assert_eq!(code(&o), 0);
    assert_eq!(report(&o)["a"].as_array().unwrap().len(), 14);

    let o = osgood(&["pliss", "eval", "--reflected", "--t", "-0.01", "--x1", "0.3", "--x2", "-1"]);
    assert_eq!(code(&o), 0);
    let v = report(&o);
    assert_eq!(v["u"], 0.0);
    assert_eq!(v["branch"], "Zero");

    let o = osgood(&["pliss", "verify", "--mu", "sqrt", "--segments", "200"]);
    assert_eq!(code(&o), 0);
    let rep = report(&o);
    assert_rows_pass(&rep);
    assert!(row(&rep, "holder_chain")["measured"].as_f64().unwrap() <= 7.0);

    assert_eq!(code(&osgood(&["pliss", "build", "--mu", "linear"])), 1);
    assert_eq!(code(&osgood(&["pliss", "build", "--k0", "many"])), 1);
}

#[test]
fn pliss_export_to_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = {
        let _guard = ENV.write().unwrap_or_else(|e| e.into_inner());
        std::env::set_var("OSGOOD_OUT_DIR", dir.path());
        let o = run_with_env_held(&["pliss", "export", "--reflected", "--grid", "-0.01:0.0:3,-1:1:4,-1:1:5"]);
        std::env::remove_var("OSGOOD_OUT_DIR");
        o
    };
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("pliss-grid.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert!(lines.next().unwrap().starts_with("t,x1,x2,log_scale,u"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r.split(',').nth(4) == Some("0.0")));

    let o = osgood(&["pliss", "export", "--grid", "-0.06:-0.055:2,0:1:2,0:1:2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(report(&o)["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn failed_export_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    // construction time: (a_{N+1}, 0) is beyond the built horizon
    let o = osgood(&["--out", d, "pliss", "export", "--grid", "-0.01:0:3,0:1:2,0:1:2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn report_written_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = osgood(&["--out", d, "mu", "check", "--name", "sqrt"]);
    assert_eq!(code(&o), 0);
    let path = Path::new(d).join("mu-check-report.json");
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(saved, report(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&osgood(&["--bogus"])), 1);
    assert_eq!(code(&osgood(&["pliss", "eval", "--t"])), 1);
    assert_eq!(code(&osgood(&[])), 1);
    assert_eq!(code(&osgood(&["--help"])), 0);
}
