//! End-to-end tests driving the built binary.

use std::process::{Command, Output};

fn homog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homog")).args(args).output().expect("binary runs")
}

#[test]
fn gen_is_byte_stable_across_processes() {
    let args = ["gen", "--structure", "random-graph", "--stage", "100", "--seed", "7"];
    let a = homog(&args);
    let b = homog(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["structure"]["n"], 100);

    let args = ["gen", "--structure", "s2", "--stage", "60", "--seed", "7"];
    let a = homog(&args);
    let b = homog(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn gen_dot_format() {
    let out = homog(&["gen", "--structure", "random-graph", "--stage", "5", "--format", "dot"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("graph g {"));
    let out = homog(&["gen", "--structure", "s2", "--stage", "5", "--format", "dot"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("digraph g {"));
}

#[test]
fn gen_s2_carries_metadata() {
    let out = homog(&["gen", "--structure", "s2", "--stage", "6", "--seed", "7"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["coords"].as_array().unwrap().len(), 6);
    assert_eq!(v["meta"]["parts"].as_array().unwrap().len(), 6);
    // Coordinates are exact fractions in p/q form.
    assert!(v["meta"]["coords"][0].as_str().unwrap().contains('/'));
}

#[test]
fn check_ap_verdicts_and_exit_codes() {
    let out = homog(&["check-ap", "--class", "all-graphs", "--max-size", "3", "--strong"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "holds-up-to-bound");

    let out = homog(&["check-ap", "--class", "at-most-one-p", "--max-size", "3", "--strong"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "fails");
    assert!(v["counterexample"].is_object());
}

#[test]
fn check_chain_on_rationals() {
    let out = homog(&[
        "check-chain",
        "--structure",
        "rationals",
        "--u",
        "0",
        "--v",
        "2",
        "--samples",
        "5",
    ]);
    // Vertex 2 sits above vertex 0 in the deterministic sweep.
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "holds-up-to-bound");
}

#[test]
fn auto_part_swap_query() {
    let out = homog(&["auto", "--structure", "s2", "--kind", "part-swap", "--query", "0,1,2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["images"].as_object().unwrap().len(), 3);
    assert_eq!(v["realized_fixed_points"], 0);
}

#[test]
fn witness_disjoint_copy_report() {
    let out = homog(&[
        "witness",
        "disjoint-copy",
        "--structure",
        "random-graph",
        "--set",
        "0,1,2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn witness_s2_conjugate_report() {
    let out = homog(&["witness", "s2-conjugate", "--set", "0,1,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn witness_factor_transposition() {
    let out = homog(&[
        "witness",
        "factor",
        "--structure",
        "pure-set",
        "--map",
        "0>1,1>0",
        "--max-word",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn catalog_show_and_list() {
    let out = homog(&["catalog", "list"]);
    assert!(out.status.success());
    let names: Vec<String> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(names.contains(&"random-graph".to_string()));
    assert!(names.contains(&"rational-urysohn".to_string()));

    let out = homog(&["catalog", "show", "random-graph"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["B_flow"], "trivial");
    assert!(v["M_flow"].as_str().unwrap().contains("linear orders"));

    let out = homog(&["catalog", "show", "in-kinf(3)"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["B_finite"], "symmetric group on 3 letters");
}

#[test]
fn verify_single_criterion() {
    let out = homog(&["verify", "--suite", "all", "--seed", "7", "--only", "8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["all_passed"], true);
    let lines = String::from_utf8(out.stderr).unwrap();
    assert!(lines.contains("PASS - criterion 8"));
}

#[test]
fn usage_errors_exit_two() {
    let out = homog(&["--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = homog(&["gen", "--structure", "not-a-family", "--stage", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = homog(&["check-ap", "--class", "no-such-class"]);
    assert_eq!(out.status.code(), Some(2));
}
