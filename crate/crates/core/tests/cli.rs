use std::io::Write;
use std::process::{Command, Output};

use awf::cli::InstanceFile;
use awf::{project_additive, BoundsReport64, ConeDecomposition64, MCEstimate};
use tempfile::NamedTempFile;

fn instance(json: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(json.as_bytes()).unwrap();
    f
}

fn awf(args: &[&str], file: &NamedTempFile) -> Output {
    awf_env(args, file, None)
}

fn awf_env(args: &[&str], file: &NamedTempFile, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_awf"));
    cmd.arg(args[0]).arg(file.path()).args(&args[1..]);
    match threads {
        Some(t) => cmd.env("AWF_THREADS", t),
        None => cmd.env_remove("AWF_THREADS"),
    };
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const RAMP: &str = r#"{
  "trend": {"components": [{"knots": [0.0, 1.0], "values": [0.0, 1.0]}]},
  "boundary": {"kind": "constant", "c": 1.0},
  "sim": {"grid_resolution": 256, "n_paths": 20000, "seed": 42}
}"#;

const REFLECTION: &str = r#"{
  "trend": {"components": [{"knots": [0.0, 1.0], "values": [0.0, 0.0]}]},
  "boundary": {"kind": "constant", "c": 1.0},
  "sim": {"grid_resolution": 512, "n_paths": 20000, "seed": 1}
}"#;

const HULL2: &str = r#"{
  "trend": {"components": [
    {"knots": [0.0, 1.0, 2.0], "values": [0.0, 0.2, 1.0]},
    {"knots": [0.0, 1.0, 2.0], "values": [0.0, 1.0, 0.5]}
  ]},
  "boundary": {"kind": "constant", "c": 2.0}
}"#;

#[test]
fn project_concave_instance_has_zero_polar() {
    let f = instance(RAMP);
    let out = awf(&["project"], &f);
    assert!(out.status.success(), "{}", stderr(&out));
    let dec: ConeDecomposition64 = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(dec.polar.is_zero());
    assert_eq!(dec.orthogonality_residual, 0.0);
}

#[test]
fn project_matches_library_and_round_trips() {
    let f = instance(HULL2);
    let out = awf(&["project"], &f);
    assert!(out.status.success());
    let text = stdout(&out);
    let dec: ConeDecomposition64 = serde_json::from_str(&text).unwrap();
    let inst = InstanceFile::parse(HULL2).unwrap();
    let lib = project_additive(&inst.trend);
    assert_eq!(dec, lib);
    assert_eq!(serde_json::to_string_pretty(&dec).unwrap() + "\n", text);
}

#[test]
fn malformed_json_is_a_usage_error() {
    let f = instance("{\n  \"trend\": {\"components\": [}\n}");
    let out = awf(&["project"], &f);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("parse error at line 2 column"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn invalid_values_are_usage_errors() {
    let f = instance(&RAMP.replace(r#""c": 1.0"#, r#""c": -1.0"#));
    assert_eq!(awf(&["project"], &f).status.code(), Some(2));
    let f = instance(RAMP);
    assert_eq!(awf(&["bounds", "--p0", "1.5", "--p-polar", "0.5"], &f).status.code(), Some(2));
    assert_eq!(awf(&["bounds", "--p0", "often", "--p-polar", "0.5"], &f).status.code(), Some(2));
    assert_eq!(awf(&["simulate", "--method", "fancy"], &f).status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_awf"))
        .args(["project", "/nonexistent/instance.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn bounds_for_scaled_ramp_with_oracle_inputs() {
    let f = instance(&RAMP.replace(r#""boundary""#, r#""gamma": 3, "boundary""#));
    let out = awf(&["bounds", "--p0", "oracle", "--p-polar", "oracle"], &f);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep: BoundsReport64 = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((rep.thm31_upper - 0.152_328_615_712_198_2).abs() < 1e-12, "{}", rep.thm31_upper);
    assert!(rep.condition31_ok);
    assert_eq!(rep.gamma, 3.0);
}

#[test]
fn bounds_for_zero_trend_degenerate_to_p0() {
    let f = instance(REFLECTION);
    let out = awf(&["bounds", "--p0", "0.682689", "--p-polar", "0.682689"], &f);
    assert!(out.status.success());
    let rep: BoundsReport64 = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rep.kuelbs_li_gap, 0.0);
    assert!((rep.sandwich_lower - 0.682_689).abs() < 1e-12);
    assert!((rep.sandwich_upper - 0.682_689).abs() < 1e-12);
    assert!((rep.thm31_upper - 0.682_689).abs() < 1e-12);
    assert_eq!(rep.log_asymptote, 0.0);
}

#[test]
fn bounds_with_mc_need_a_sim_section() {
    let f = instance(HULL2);
    let out = awf(&["bounds", "--p0", "mc", "--p-polar", "0.5"], &f);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sim"));
    let f = instance(RAMP);
    let out = awf(&["bounds", "--p0", "mc", "--p-polar", "mc"], &f);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep: BoundsReport64 = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((rep.p0.value() - 0.6827).abs() < 0.03);
}

#[test]
fn simulate_reflection_instance() {
    let f = instance(REFLECTION);
    let out = awf(&["simulate"], &f);
    assert!(out.status.success());
    let est: MCEstimate = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((est.p_hat - 0.682_689).abs() < 3.0 * est.stderr + 0.02, "{est:?}");
    let again = awf(&["simulate"], &f);
    assert_eq!(out.stdout, again.stdout);
    let girsanov = awf(&["simulate", "--method", "girsanov"], &f);
    let g: MCEstimate = serde_json::from_str(&stdout(&girsanov)).unwrap();
    assert_eq!((g.p_hat, g.stderr), (est.p_hat, est.stderr));
}

#[test]
fn simulate_output_does_not_depend_on_threads() {
    let f = instance(RAMP);
    let one = awf_env(&["simulate"], &f, Some("1"));
    let four = awf_env(&["simulate"], &f, Some("4"));
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(awf_env(&["simulate"], &f, Some("zero")).status.code(), Some(2));
}

#[test]
fn simulate_without_sim_section_fails() {
    let f = instance(HULL2);
    assert_eq!(awf(&["simulate"], &f).status.code(), Some(2));
}

#[test]
fn sweep_with_oracle_estimator() {
    let f = instance(RAMP);
    let out = awf(&["sweep", "--gammas", "1,2,4,6", "--estimator", "oracle"], &f);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma,ln_p_hat,stderr_ln,asymptote,ratio,flag"));
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "6");
    assert_eq!(last[3], "-18");
    let ratio: f64 = last[4].parse().unwrap();
    assert!((ratio - 0.909).abs() < 0.005);
    assert_eq!(last[5], "ok");
}

#[test]
fn sweep_with_mc_flags_underflow() {
    let f = instance(RAMP);
    let out = awf(&["sweep", "--gammas", "1,6", "--estimator", "mc"], &f);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("6,-inf,") && last.ends_with(",underflow"), "{last}");
    assert!(stderr(&out).contains("underflow"));
}

#[test]
fn sweep_rejects_empty_gamma_list() {
    let f = instance(RAMP);
    assert_eq!(awf(&["sweep", "--gammas", "", "--estimator", "oracle"], &f).status.code(), Some(2));
    assert_eq!(awf(&["sweep", "--estimator", "oracle"], &f).status.code(), Some(2));
    assert_eq!(awf(&["sweep", "--gammas", "2,1", "--estimator", "oracle"], &f).status.code(), Some(2));
    let f = instance(HULL2);
    assert_eq!(awf(&["sweep", "--gammas", "1,2", "--estimator", "oracle"], &f).status.code(), Some(2));
}

#[test]
fn infinite_values_round_trip_through_json() {
    let json = r#"{
  "trend": {"components": [{"knots": [0.0, 1.0], "values": [0.0, 1.0]}, {"knots": [0.0, 1.0], "values": [0.0, 1.0]}]},
  "boundary": {"kind": "tabulated", "axes": [[0.0, 1.0], [0.0, 1.0]], "values": [1.0, 1.0, "inf", 2.0]}
}"#;
    let f = instance(json);
    let out = awf(&["bounds", "--p0", "0.5", "--p-polar", "0.5"], &f);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let rep: BoundsReport64 = serde_json::from_str(&text).unwrap();
    assert!(!rep.condition31_ok);
    assert!(rep.thm31_upper.is_infinite());
    assert_eq!(serde_json::to_string_pretty(&rep).unwrap() + "\n", text);
}
