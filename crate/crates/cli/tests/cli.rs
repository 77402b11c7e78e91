use std::path::PathBuf;
use std::process::Command;

use secknow::trace::{match_interaction, parse_interaction};
use secknow_cli::{run_command, Invocation, Status};

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Invocation {
    run_command(args.iter().map(|s| s.to_string()))
}

fn statuses(inv: &Invocation) -> Vec<Status> {
    inv.report.as_ref().unwrap().results.iter().map(|r| r.status).collect()
}

#[test]
fn needham_schroeder_insider_attack_is_reported() {
    let inv = run(&["analyze", &corpus("needham-schroeder.prot"), "--attacker", "insider", "--sessions", "2"]);
    assert_eq!(inv.code, 1, "{}", inv.output);
    let report = inv.report.unwrap();
    let violated = report.results.iter().find(|r| r.status == Status::Violated).unwrap();
    assert_eq!(violated.name, "agree B A");
    let expected = parse_interaction(&std::fs::read_to_string(corpus("attack-ns.log")).unwrap()).unwrap();
    let actual = parse_interaction(&violated.witness.join("\n")).unwrap();
    assert!(match_interaction(&expected, &actual), "{}", inv.output);
    assert!(violated.details.iter().any(|d| d == "certificate replays: true"));
}

#[test]
fn lowe_fix_holds() {
    let inv = run(&["analyze", &corpus("needham-schroeder-lowe.prot"), "--attacker", "insider"]);
    assert_eq!(inv.code, 0, "{}", inv.output);
    assert!(statuses(&inv).iter().all(|s| *s == Status::HoldsWithinBounds));
}

#[test]
fn a_tiny_state_cap_is_a_bound_error() {
    let inv = run(&["analyze", &corpus("needham-schroeder-lowe.prot"), "--attacker", "insider", "--max-states", "3"]);
    assert_eq!(inv.code, 2, "{}", inv.output);
    assert!(statuses(&inv).contains(&Status::Inconclusive));
}

#[test]
fn noninterference_verdicts() {
    assert_eq!(run(&["ni", &corpus("p1.imp")]).code, 0);
    assert_eq!(run(&["ni", &corpus("p2.imp")]).code, 1);
    assert_eq!(run(&["ni", &corpus("p3.imp")]).code, 0);
    let p4 = run(&["ni", &corpus("p4.imp")]);
    assert_eq!(p4.code, 1);
    assert!(p4.output.contains("inputs  <l=0, h=0> ~L <l=0, h=1>"), "{}", p4.output);
    assert_eq!(run(&["ni", &corpus("p4.imp"), "--max-pairs", "10"]).code, 2);
}

#[test]
fn dining_cryptographers_anonymity_formula_holds() {
    let formula = format!("@{}", corpus("dc-anon.f"));
    let inv = run(&["epistemic", "dining-crypto", "--formula", &formula]);
    assert_eq!(inv.code, 0, "{}", inv.output);
    let inv = run(&["epistemic", "dining-crypto", "--formula", "K[1] paid(2)"]);
    assert_eq!(inv.code, 1, "{}", inv.output);
    assert!(inv.output.contains("fails at (run"));
}

#[test]
fn epistemic_models_from_protocol_runs() {
    let trace = format!("traces:{}", corpus("attack-ns.trace"));
    let ns = corpus("needham-schroeder.prot");
    let inv = run(&["epistemic", &trace, "--protocol", &ns, "--attacker", "insider", "--formula", "K[B] true", "--at", "all"]);
    assert_eq!(inv.code, 0, "{}", inv.output);
    let missing = run(&["epistemic", &trace, "--formula", "true"]);
    assert_eq!(missing.code, 2);
    let explored = run(&["epistemic", &format!("protocol:{ns}"), "--attacker", "insider", "--formula", "true", "--mode", "raw"]);
    assert_eq!(explored.code, 0, "{}", explored.output);
}

#[test]
fn ban_goal_needs_the_controls_assumption() {
    let with = run(&["ban", &corpus("prot-shared-ideal-controls.ban")]);
    assert_eq!(with.code, 0, "{}", with.output);
    assert!(with.output.contains("proof tree validates"));
    let without = run(&["ban", &corpus("prot-shared-ideal.ban")]);
    assert_eq!(without.code, 0, "{}", without.output);
}

#[test]
fn event_policies() {
    let sep = run(&["events", &corpus("separable.es"), "--policy", "separability"]);
    assert_eq!(sep.code, 0, "{}", sep.output);
    assert_eq!(run(&["events", &corpus("leaky.es")]).code, 1);
    assert_eq!(run(&["events", &corpus("gni.es"), "--policy", "gen-noninterference"]).code, 0);
    assert_eq!(run(&["events", &corpus("gni.es"), "--policy", "nonsense"]).code, 2);
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["ni"]).code, 2);
    assert_eq!(run(&["ni", "/nonexistent.imp"]).code, 2);
    assert_eq!(run(&["epistemic", "dining-crypto", "--formula", "K[1] ("]).code, 2);
    assert_eq!(run(&["analyze", &corpus("prot1.prot"), "--attacker", "wizard"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn exit_code_tracks_violations() {
    let cases: Vec<Vec<String>> = vec![
        vec!["analyze".into(), corpus("prot1.prot"), "--attacker".into(), "insider".into()],
        vec!["analyze".into(), corpus("prot4.prot"), "--attacker".into(), "insider".into()],
        vec!["events".into(), corpus("gni.es")],
        vec!["ni".into(), corpus("p2.imp")],
    ];
    for args in cases {
        let inv = run_command(args.clone());
        let violated = statuses(&inv).contains(&Status::Violated);
        assert_eq!(inv.code == 1, violated, "{args:?}");
    }
}

#[test]
fn json_reports_are_deterministic_and_match_the_text_form() {
    let args = ["analyze", &corpus("prot6.prot"), "--attacker", "active", "--format", "json"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.output, second.output);
    let v: serde_json::Value = serde_json::from_str(&first.output).unwrap();
    assert_eq!(v["schema"], secknow_cli::SCHEMA);
    let text = run(&args[..4]).output;
    for r in v["results"].as_array().unwrap() {
        let line = format!("[{}] {}", r["status"].as_str().unwrap(), r["name"].as_str().unwrap());
        assert!(text.contains(&line), "{line}");
        for w in r["witness"].as_array().into_iter().flatten() {
            assert!(text.contains(w.as_str().unwrap()));
        }
    }
}

#[test]
fn the_binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_secknow");
    let status = Command::new(bin).args(["ni", &corpus("p1.imp")]).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let out = Command::new(bin).args(["ni", &corpus("p4.imp"), "--format", "json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"violated\""));
    let out = Command::new(bin).arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty() && !out.stderr.is_empty());
}
