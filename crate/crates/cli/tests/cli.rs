use std::path::PathBuf;

use assert_cmd::Command;
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn qthermo() -> Command {
    Command::cargo_bin("qthermo").expect("binary is built")
}

fn run_json(args: &[&str]) -> Value {
    let out = qthermo().args(args).output().expect("runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn exit_code(args: &[&str]) -> i32 {
    qthermo().args(args).output().expect("runs").status.code().expect("exit code")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn static_pressure_matches_closed_form_equilibrium() {
    let v = run_json(&["static-pressure", "--a", "0.5,0.8", "--beta", "1.2", "--q", "0.3333"]);
    assert!((f(&v["pressure"]) - 1.6895).abs() < 5e-4);
    assert!((f(&v["p_star"][0]) - 0.3172).abs() < 5e-4);
    assert!((f(&v["p_star"][1]) - 0.6828).abs() < 5e-4);
    assert_eq!(v["seed"], 0);
}

#[test]
fn static_pressure_optimizers_agree_and_dominate_closed_form() {
    let base = ["static-pressure", "--a", "0.5,0.8", "--beta", "1.2", "--q", "0.3333", "--method"];
    let closed = run_json(&[&base[..], &["closed"]].concat());
    let kkt = run_json(&[&base[..], &["kkt"]].concat());
    let scan = run_json(&[&base[..], &["scan"]].concat());
    assert!((f(&kkt["pressure"]) - f(&scan["pressure"])).abs() < 1e-6);
    assert!(f(&closed["pressure"]) <= f(&kkt["pressure"]) + 1e-12);
}

#[test]
fn two_branch_example_potential_has_two_roots_outside_the_positive_region() {
    let two_branch = fixture("two_branch.json");
    let v = run_json(&["solve", "--potential", &two_branch, "--q-tilde", "0.5", "--all-branches"]);
    let branches = v["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 2);
    let mut cs: Vec<f64> = branches.iter().map(|b| f(&b["c"])).collect();
    cs.sort_by(f64::total_cmp);
    assert!((cs[0] - 3.044281).abs() < 1e-5, "{cs:?}");
    assert!((cs[1] - 3.705719).abs() < 1e-5, "{cs:?}");
    for b in branches {
        assert!(f(&b["residual"]) <= 1e-10);
        assert_eq!(b["summands_positive"], false);
        assert!(f(&b["min_base"]) < 0.0);
        assert!((f(&b["phi"][1]) + 0.75).abs() < 1e-9);
    }
    assert_eq!(v["q"], 1.5);
}

#[test]
fn two_branch_example_potential_without_all_branches_reports_non_convergence() {
    let two_branch = fixture("two_branch.json");
    assert_eq!(exit_code(&["solve", "--potential", &two_branch, "--q-tilde", "0.5"]), 3);
}

#[test]
fn perturbing_two_branch_coefficient_moves_the_roots() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two_branch_perturbed.json");
    std::fs::write(&path, r#"{"values_named": {"11": 0, "12": 2.1, "21": 3.5, "22": 0}}"#).unwrap();
    let base = run_json(&["solve", "--potential", &fixture("two_branch.json"), "--q-tilde", "0.5", "--all-branches"]);
    let moved = run_json(&["solve", "--potential", path.to_str().unwrap(), "--q-tilde", "0.5", "--all-branches"]);
    let c0 = f(&base["branches"][0]["c"]);
    let c1 = f(&moved["branches"][0]["c"]);
    assert!((c0 - c1).abs() > 1e-4, "{c0} vs {c1}");
}

#[test]
fn memory_one_solution_and_derivative() {
    let v = run_json(&["solve", "--potential", &fixture("memory_one.json"), "--q-tilde", "0.5", "--all-branches"]);
    assert!((f(&v["branches"][0]["c"]) - 5.75).abs() < 1e-8);
    let d = run_json(&[
        "derivative",
        "--potential",
        &fixture("memory_one.json"),
        "--direction",
        &fixture("memory_one_direction.json"),
        "--q",
        "1.5",
    ]);
    assert!((f(&d["dPds"]) - 0.5).abs() < 1e-6);
}

#[test]
fn equilibrium_satisfies_bowen_relation() {
    let v = run_json(&["solve", "--potential", &fixture("memory_two.json"), "--q", "0.5", "--equilibrium"]);
    let eq = &v["equilibrium"];
    assert!(f(&eq["bowen_c"]).abs() < 1e-8);
    assert!((f(&eq["pressure"]) - f(&eq["variational_value"])).abs() < 1e-8);
}

#[test]
fn empty_values_array_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(&path, r#"{"d": 2, "memory": 1, "values": []}"#).unwrap();
    let out = qthermo().args(["ruelle", "--potential", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn malformed_json_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, "{\"d\": 2,\n \"memory\": 1,\n \"values\": [1, 2").unwrap();
    let out = qthermo().args(["ruelle", "--potential", truncated.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"d": 2, "memory": 1, "valuez": [1, 2]}"#).unwrap();
    let out = qthermo().args(["ruelle", "--potential", unknown.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("valuez"));
}

#[test]
fn exit_codes_distinguish_domain_errors() {
    assert_eq!(exit_code(&["qfun", "--fn", "exp", "--q", "0.5", "--u", "-3"]), 2);
    assert_eq!(exit_code(&["qfun", "--fn", "log", "--q", "0.5", "--u", "2"]), 0);
    let memory_one = fixture("memory_one.json");
    assert_eq!(exit_code(&["solve", "--potential", &memory_one, "--q", "1.5", "--q-tilde", "0.4"]), 2);
    assert_eq!(exit_code(&["solve", "--potential", &memory_one]), 2);
    assert_eq!(exit_code(&["solve", "--potential", &memory_one, "--q", "1.5", "--q-tilde", "0.5", "--all-branches"]), 0);
    assert_eq!(exit_code(&["ruelle", "--potential", "/nonexistent/potential.json"]), 2);
}

#[test]
fn qfun_values() {
    let v = run_json(&["qfun", "--fn", "log", "--q", "0.5", "--u", "2"]);
    assert!((f(&v["value"]) - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-11);
    let v = run_json(&["qfun", "--fn", "exp", "--q", "0.5", "--u", "1"]);
    assert!((f(&v["value"]) - 2.25).abs() < 1e-11);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let two_branch = fixture("two_branch.json");
    let two = fixture("memory_two.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve", "--potential", &two_branch, "--q-tilde", "0.5", "--all-branches"],
        vec!["solve", "--potential", &two, "--q", "0.5", "--equilibrium"],
        vec!["scan", "--potential", &two, "--q", "1.5", "--grid", "60"],
        vec!["asym-pressure", "--potential", &two, "--q", "0.5", "--n-max", "200", "--x0", "12"],
        vec!["selftest", "--samples", "500", "--seed", "7"],
    ];
    for args in cases {
        let a = qthermo().args(&args).output().unwrap().stdout;
        let b = qthermo().args(&args).output().unwrap().stdout;
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn selftest_echoes_seed_and_flags_reversed_entropy_orderings() {
    let out = qthermo().args(["selftest", "--seed", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 3);
    let failing: Vec<&str> = v["failing"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(failing, ["tsallis_at_most_shannon_below_one", "shannon_at_most_tsallis_above_one"]);
}

#[test]
fn sweep_beta_writes_csv() {
    let out = qthermo()
        .args(["sweep-beta", "--a", "0.5,0.8", "--q", "0.3333", "--from", "0", "--to", "1", "--steps", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,pressure");
    assert_eq!(lines.len(), 4);
    let last: Vec<&str> = lines[3].split(',').collect();
    let p: f64 = last[1].parse().unwrap();
    let closed = run_json(&["static-pressure", "--a", "0.5,0.8", "--beta", "1", "--q", "0.3333"]);
    assert!((p - f(&closed["pressure"])).abs() < 1e-10);
}

#[test]
fn entropy_surface_peaks_at_the_uniform_chain() {
    let out = qthermo().args(["entropy-surface", "--q", "0.5", "--grid", "20"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p12,p21,h_q"));
    let best = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .max_by(|a, b| a[2].total_cmp(&b[2]))
        .unwrap();
    assert_eq!((best[0], best[1]), (0.5, 0.5));
    assert!((best[2] - 0.828427124746).abs() < 1e-11);
}

#[test]
fn entropy_of_vector_and_chain() {
    let v = run_json(&["entropy", "--q", "0.5", "--p", "0.5,0.5"]);
    assert!((f(&v["tsallis"]) - 0.828427124746).abs() < 1e-11);
    assert!((f(&v["shannon"]) - 2f64.ln()).abs() < 1e-11);
    assert!((f(&v["renyi"]) - 2f64.ln()).abs() < 1e-11);
    let v = run_json(&["entropy", "--q", "0.5", "--p12", "0.5", "--p21", "0.5"]);
    assert!((f(&v["q_entropy"]) - 0.828427124746).abs() < 1e-11);
}

#[test]
fn ruelle_classical_pressure_and_normalization() {
    let v = run_json(&["ruelle", "--potential", &fixture("zero_one.json"), "--normalize", "--entropy", "0.5"]);
    assert!((f(&v["pressure"]) - (1.0 + 1f64.exp()).ln()).abs() < 1e-10);
    let log_j: Vec<f64> = v["logJ"].as_array().unwrap().iter().map(f).collect();
    for x in 0..2 {
        let row: f64 = (0..2).map(|a| log_j[a * 2 + x].exp()).sum();
        assert!((row - 1.0).abs() < 1e-10);
    }
    assert!(f(&v["entropies"]["q_entropy"]) >= f(&v["entropies"]["ks"]));
}

#[test]
fn asym_pressure_writes_sequence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("seq.csv");
    let v = run_json(&[
        "asym-pressure",
        "--potential",
        &fixture("zero_one.json"),
        "--q",
        "0.5",
        "--n-max",
        "400",
        "--sequence-csv",
        csv.to_str().unwrap(),
    ]);
    assert!((f(&v["estimate"]) - 2f64.ln()).abs() < 0.02);
    assert_eq!(v["sequence_csv_path"], csv.display().to_string());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("n,value"));
    assert_eq!(text.lines().count(), 401);
}

#[test]
fn scan_reports_markov_argmax() {
    let v = run_json(&["scan", "--potential", &fixture("memory_two.json"), "--q", "1.5", "--grid", "80"]);
    let t: Vec<f64> = v["argmax"]["transitions"].as_array().unwrap().iter().map(f).collect();
    assert_eq!(t.len(), 4);
    assert!(f(&v["value"]).is_finite());
}

#[test]
fn regression_single_check_reports_timing() {
    let v = run_json(&["paper-regression", "--only", "1"]);
    let c = &v["criteria"][0];
    assert_eq!(c["id"], 1);
    assert_eq!(c["passed"], true);
    assert!(c["elapsed_ms"].is_number());
    assert_eq!(exit_code(&["paper-regression", "--only", "99"]), 2);
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let out = qthermo()
        .env("QTHERMO_THREADS", "1")
        .args(["scan", "--potential", &fixture("memory_two.json"), "--q", "1.5", "--grid", "40"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let code = qthermo()
        .env("QTHERMO_THREADS", "zero")
        .args(["qfun", "--fn", "log", "--q", "0.5", "--u", "2"])
        .output()
        .unwrap()
        .status
        .code();
    assert_eq!(code, Some(2));
}

#[test]
fn every_subcommand_documents_its_formula() {
    let names = [
        "qfun",
        "selftest",
        "static-pressure",
        "sweep-beta",
        "entropy",
        "ruelle",
        "solve",
        "derivative",
        "asym-pressure",
        "scan",
        "entropy-surface",
        "paper-regression",
    ];
    let top = String::from_utf8(qthermo().arg("--help").output().unwrap().stdout).unwrap();
    for name in names {
        assert!(top.contains(name), "{name} missing from --help");
        let out = qthermo().args([name, "--help"]).output().unwrap();
        assert!(out.status.success());
        let help = String::from_utf8(out.stdout).unwrap();
        let about = help.lines().next().unwrap_or("");
        assert!(about.len() > 20, "{name} has no description");
    }
}
