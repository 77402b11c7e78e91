mod common;

use proptest::prelude::*;
use secknow::ban::{parse_ban, parse_ban_formula, prove, saturate, Ban, BanInput, ProofOutcome, Rule, Step, DEFAULT_DEPTH};

fn load(name: &str) -> BanInput {
    parse_ban(&common::read(name), DEFAULT_DEPTH).unwrap()
}

fn f(text: &str) -> Ban {
    parse_ban_formula(text).unwrap()
}

#[test]
fn walkthrough_formulas_are_derived_in_order() {
    let input = load("prot-shared-ideal-controls.ban");
    let sat = saturate(&input.initial, &input.steps, DEFAULT_DEPTH);
    let chain = [
        "B sees enc{secret(A,m0,B), nB}kAB by A",
        "B believes A said (secret(A,m0,B), nB)",
        "B believes fresh(secret(A,m0,B), nB)",
        "B believes A believes (secret(A,m0,B), nB)",
        "B believes A believes secret(A,m0,B)",
        "B believes secret(A,m0,B)",
    ];
    let positions: Vec<usize> = chain.iter().map(|c| sat.position(&f(c)).unwrap_or_else(|| panic!("{c} not derived"))).collect();
    // Each formula comes after the ones it is derived from.
    let after = |x: usize, y: usize| assert!(positions[x] > positions[y], "{} before {}", chain[x], chain[y]);
    after(1, 0);
    after(3, 1);
    after(3, 2);
    after(4, 3);
    after(5, 4);
}

#[test]
fn belief_in_belief_without_jurisdiction() {
    let input = load("prot-shared-ideal.ban");
    let goal = input.goal.clone().unwrap();
    let ProofOutcome::Proved(tree) = prove(&input.initial, &input.steps, &goal, DEFAULT_DEPTH) else { panic!("not proved") };
    tree.validate(&input.initial, &input.steps).unwrap();
    assert_eq!(tree.rule, Rule::R8);
    let stronger = f("B believes secret(A,m0,B)");
    assert!(matches!(prove(&input.initial, &input.steps, &stronger, DEFAULT_DEPTH), ProofOutcome::NotDerived { facts, .. } if facts > 0));
}

#[test]
fn jurisdiction_gives_the_secret() {
    let input = load("prot-shared-ideal-controls.ban");
    let ProofOutcome::Proved(tree) = prove(&input.initial, &input.steps, input.goal.as_ref().unwrap(), DEFAULT_DEPTH) else { panic!("not proved") };
    tree.validate(&input.initial, &input.steps).unwrap();
    let rules = tree.rules();
    for r in [Rule::R1, Rule::R7, Rule::R3, Rule::R8, Rule::R4] {
        assert!(rules.contains(&r), "{r} missing from {rules:?}");
    }
    let at = |r: Rule| rules.iter().position(|x| *x == r).unwrap();
    assert!(at(Rule::R1) < at(Rule::R3) && at(Rule::R7) < at(Rule::R3) && at(Rule::R3) < at(Rule::R8) && at(Rule::R8) < at(Rule::R4));
}

#[test]
fn assumptions_prove_themselves() {
    let input = load("prot-shared-ideal.ban");
    let ProofOutcome::Proved(tree) = prove(&input.initial, &input.steps, &input.initial[2], DEFAULT_DEPTH) else { panic!() };
    assert_eq!(tree.size(), 1);
    assert_eq!(tree.rule, Rule::Premise);
}

#[test]
fn depth_one_cuts_nested_beliefs() {
    let input = load("prot-shared-ideal.ban");
    let sat = saturate(&input.initial, &input.steps, 1);
    assert!(!sat.contains(input.goal.as_ref().unwrap()));
    assert!(!sat.beyond_depth().is_empty());
}

#[test]
fn every_derived_formula_has_a_valid_proof() {
    for name in ["prot-shared-ideal.ban", "prot-shared-ideal-controls.ban"] {
        let input = load(name);
        let sat = saturate(&input.initial, &input.steps, DEFAULT_DEPTH);
        for (g, _) in sat.formulas() {
            sat.proof(g).unwrap().validate(&input.initial, &input.steps).unwrap();
        }
    }
}

const AGENTS: [&str; 3] = ["A", "B", "S"];
const ATOMS: [&str; 3] = ["n", "m", "x"];

fn base() -> impl Strategy<Value = Ban> {
    prop_oneof![
        prop::sample::select(&ATOMS[..]).prop_map(Ban::msg),
        (prop::sample::select(&AGENTS[..]), prop::sample::select(&AGENTS[..])).prop_map(|(a, b)| Ban::shared_key(a, "k", b)),
        (prop::sample::select(&AGENTS[..]), prop::sample::select(&AGENTS[..])).prop_map(|(a, b)| Ban::secret(a, "m", b)),
    ]
}

fn message() -> impl Strategy<Value = Ban> {
    base().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Ban::tuple),
            (inner.clone(), prop::option::of(prop::sample::select(&AGENTS[..]))).prop_map(|(b, s)| Ban::enc(b, "k", s)),
            inner.clone().prop_map(Ban::fresh),
            (prop::sample::select(&AGENTS[..]), inner).prop_map(|(a, b)| Ban::said(a, b)),
        ]
    })
}

fn belief() -> impl Strategy<Value = Ban> {
    (prop::sample::select(&AGENTS[..]), message(), 0..4u8, prop::sample::select(&AGENTS[..])).prop_map(|(a, m, kind, b)| match kind {
        0 => Ban::believes(a, m),
        1 => Ban::believes(a, Ban::fresh(m)),
        2 => Ban::believes(a, Ban::controls(b, m)),
        _ => Ban::believes(a, Ban::believes(b, m)),
    })
}

fn step() -> impl Strategy<Value = Step> {
    (prop::sample::select(&AGENTS[..]), prop::sample::select(&AGENTS[..]), message())
        .prop_map(|(s, r, payload)| Step { sender: s.into(), receiver: r.into(), payload })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn more_assumptions_never_lose_conclusions(
        small in prop::collection::vec(belief(), 0..4),
        extra in prop::collection::vec(belief(), 0..3),
        steps in prop::collection::vec(step(), 0..3),
    ) {
        let mut big = small.clone();
        big.extend(extra);
        let a = saturate(&small, &steps, 2);
        let b = saturate(&big, &steps, 2);
        for (g, _) in a.formulas() {
            prop_assert!(b.contains(g), "{g} lost");
        }
    }

    #[test]
    fn proofs_revalidate_and_respect_the_sender_rule(
        initial in prop::collection::vec(belief(), 0..5),
        steps in prop::collection::vec(step(), 1..3),
    ) {
        let sat = saturate(&initial, &steps, 2);
        for (g, rule) in sat.formulas() {
            prop_assert!(g.belief_depth() <= 2);
            let tree = sat.proof(g).unwrap();
            prop_assert!(tree.validate(&initial, &steps).is_ok(), "{}", tree);
            if rule == Rule::R1 || rule == Rule::R6 {
                if let Ban::EncBy(_, _, signer) = &tree.children[1].conclusion.clone() {
                    let Ban::Sees(receiver, _) = &tree.children[1].conclusion else { unreachable!() };
                    prop_assert_ne!(signer.as_deref(), Some(receiver.as_str()));
                }
            }
        }
    }

    #[test]
    fn printed_inputs_parse_back(initial in prop::collection::vec(belief(), 0..4), steps in prop::collection::vec(step(), 0..3)) {
        let input = BanInput { initial, steps, goal: None };
        prop_assert_eq!(parse_ban(&input.to_string(), 3).unwrap(), input);
    }
}
