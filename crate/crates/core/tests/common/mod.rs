#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

use secknow::protocol::{parse_protocol, AttackerClass, Claim, ProtocolSpec, Scenario};
use secknow::trace::{explore, parse_interaction, Interaction, TraceSet};

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(corpus(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn spec(name: &str) -> ProtocolSpec {
    parse_protocol(&read(&format!("{name}.prot"))).unwrap()
}

pub fn golden(name: &str) -> Interaction {
    parse_interaction(&read(&format!("{name}.log"))).unwrap()
}

pub fn scenario(spec: &ProtocolSpec, attacker: AttackerClass, sessions: usize, compromise: bool) -> Scenario {
    let mut sc = Scenario::standard(spec, attacker, sessions);
    sc.compromise = compromise;
    sc
}

pub fn run(name: &str, attacker: AttackerClass, compromise: bool) -> (ProtocolSpec, TraceSet) {
    let spec = spec(name);
    let traces = explore(&spec, &scenario(&spec, attacker, 2, compromise)).unwrap();
    (spec, traces)
}

pub fn claim(text: &str) -> Claim {
    let words: Vec<&str> = text.split_whitespace().collect();
    match words.as_slice() {
        ["secret", v] => Claim::Secret(v.to_string()),
        ["agree", a, b] => Claim::Agree { claimer: a.to_string(), peer: b.to_string() },
        _ => panic!("bad claim {text}"),
    }
}
