use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

const FAST: &str = "version = 1\n[oracle]\npoints = 4\nseed = 11\n";

fn jlalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jlalg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn schema_for(kind: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json")).unwrap();
    let mut root: Value = serde_json::from_str(&text).unwrap();
    let obj = root.as_object_mut().unwrap();
    obj.remove("oneOf");
    obj.insert("$ref".into(), Value::String(format!("#/$defs/{kind}")));
    jsonschema::validator_for(&root).unwrap()
}

fn assert_valid(kind: &str, out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)));
    let errors: Vec<String> = schema_for(kind).iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{kind}: {errors:?}");
    v
}

#[test]
fn reduce_prints_canonical_forms() {
    let o = jlalg(&["reduce", "(Sigma . rhat)^2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1\n");
    assert_eq!(stdout(&jlalg(&["reduce", "[A2, H]"])), "0\n");
    assert_eq!(stdout(&jlalg(&["reduce", "{K, Sigma . rhat}"])), "0\n");
    let o = jlalg(&["--json", "reduce", "[K, Sigma . p]"]);
    let v = assert_valid("reduce", &o);
    assert_eq!(v["zero"], false);
}

#[test]
fn parse_errors_exit_with_two() {
    let o = jlalg(&["reduce", "[rhat_1, p_4]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1:"), "{}", stderr(&o));
    assert_eq!(jlalg(&["reduce", "Q7 + 1"]).status.code(), Some(2));
    assert_eq!(jlalg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn single_check_reports_with_oracle() {
    let cfg = config(FAST);
    let o = jlalg(&["--json", "--config", cfg.path().to_str().unwrap(), "verify", "A2_conserved"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = assert_valid("verify", &o);
    assert_eq!(v["checks"].as_array().unwrap().len(), 1);
    for id in v["checks"][0]["identities"].as_array().unwrap() {
        assert_eq!(id["symbolic"], "ZERO");
        assert_eq!(id["oracle"]["verdict"], "ORACLE_PASS");
    }
}

#[test]
fn mutation_fails_and_names_the_check() {
    let o = jlalg(&["verify", "--no-oracle", "--mutation", "a2-radial-coefficient"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("first failing check: A2_conserved"), "{}", stderr(&o));
    assert_eq!(jlalg(&["verify", "--mutation", "nope"]).status.code(), Some(2));
    assert_eq!(jlalg(&["verify", "no_such_check"]).status.code(), Some(2));
}

#[test]
fn verify_json_is_deterministic_across_runs_and_modes() {
    let cfg = config(FAST);
    let path = cfg.path().to_str().unwrap();
    let a = jlalg(&["--json", "--config", path, "--exec", "parallel", "verify"]);
    let b = jlalg(&["--json", "--config", path, "--exec", "sequential", "verify"]);
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let v = assert_valid("verify", &a);
    assert_eq!(v["checks"].as_array().unwrap().len(), 15);
}

#[test]
fn spectrum_examples() {
    let o = jlalg(&["--json", "spectrum", "--a", "0.0729735", "--k", "-1,1", "--count", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = assert_valid("spectrum", &o);
    let levels = v["sectors"][0]["levels"].as_array().unwrap();
    assert_eq!(levels[1]["n_r"], 1);
    assert!(levels[1]["partner"].is_number());
    assert!(stdout(&jlalg(&["spectrum", "--a", "0.3", "--k", "-2"])).contains("PASS"));
    let o = jlalg(&["spectrum", "--a", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no bound states"));
    let o = jlalg(&["spectrum", "--a", "1.5", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("supercritical"));
}

#[test]
fn spectrum_convergence_failure_exits_with_three() {
    let cfg = config("[radial]\nnodes = 200\ntolerance = 1e-30\nmax_refinements = 0\n");
    let o = jlalg(&["--config", cfg.path().to_str().unwrap(), "spectrum", "--a", "0.1", "--k", "-1", "--count", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn spectrum_tolerance_flag_is_enforced() {
    let o = jlalg(&["--tolerance", "1e-30", "spectrum", "--a", "0.3", "--k", "-1", "--count", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lamb_doubles_with_lambda() {
    let cfg = config(FAST);
    let o = jlalg(&["--json", "--config", cfg.path().to_str().unwrap(), "lamb", "--s", "-2", "--lambda", "0,1,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = assert_valid("lamb", &o);
    assert_eq!(v["degree"], 1);
    assert_eq!(v["points"][0]["symbolic"], "ZERO");
    let ratio = v["points"][2]["ratio"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() <= 1e-3);
    assert_eq!(jlalg(&["lamb", "--s", "4"]).status.code(), Some(2));
}

#[test]
fn oracle_cross_checks() {
    let cfg = config(FAST);
    let path = cfg.path().to_str().unwrap();
    let o = jlalg(&["--json", "--config", path, "oracle", "A2", "--against", "JL_form"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_valid("oracle", &o);
    let o = jlalg(&["--config", path, "oracle", "[A1, H]"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("NONZERO"));
    let o = jlalg(&["--config", path, "oracle", "A2", "--against", "A1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_configs_are_usage_errors() {
    let cfg = config("[oracle]\npointz = 3\n");
    assert_eq!(jlalg(&["--config", cfg.path().to_str().unwrap(), "verify"]).status.code(), Some(2));
    let cfg = config("[oracle]\nfd_step = 0.2\n");
    assert_eq!(jlalg(&["--config", cfg.path().to_str().unwrap(), "verify", "K_properties"]).status.code(), Some(2));
    assert_eq!(jlalg(&["--config", "/nonexistent.toml", "reduce", "1"]).status.code(), Some(2));
}
