//! Generators and brute-force oracles shared by the property suites and the
//! acceptance runner.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;
use secknow::infoflow::{EventClass, EventInfo, EventSystem, Level, Trace};
use secknow::term::{Term, TermSet};

pub fn atom() -> impl Strategy<Value = Term> {
    prop::sample::select(vec![
        Term::agent("A"),
        Term::agent("B"),
        Term::nonce("n1"),
        Term::nonce("n2"),
        Term::shared_key("k"),
        Term::public_key("p"),
        Term::private_key("p"),
    ])
}

pub fn term(depth: u32) -> impl Strategy<Value = Term> {
    atom().prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            (inner, atom()).prop_map(|(a, k)| Term::enc(a, k)),
        ]
    })
}

/// Up to `max` terms of depth at most three.
pub fn term_set(max: usize) -> impl Strategy<Value = TermSet> {
    prop::collection::btree_set(term(3), 0..=max)
}

pub fn sequence() -> impl Strategy<Value = Vec<Term>> {
    prop::collection::vec(term(2), 0..4)
}

/// Analyzed closure by naive saturation over the current set.
pub fn naive_analyzed(h: &TermSet) -> TermSet {
    let mut out = h.clone();
    loop {
        let mut add = Vec::new();
        for t in &out {
            match t {
                Term::Pair(a, b) => {
                    add.push((**a).clone());
                    add.push((**b).clone());
                }
                Term::Enc(body, key) if out.contains(&key.decryption_key()) => add.push((**body).clone()),
                _ => {}
            }
        }
        let before = out.len();
        out.extend(add);
        if out.len() == before {
            return out;
        }
    }
}

/// Every term of `Synthesized(base)` of size at most `limit`.
pub fn synthesized_up_to(base: &TermSet, limit: usize) -> HashSet<Term> {
    let mut by_size: Vec<HashSet<Term>> = vec![HashSet::new(); limit + 1];
    for t in base {
        if t.size() <= limit {
            by_size[t.size()].insert(t.clone());
        }
    }
    for s in 3..=limit {
        let mut built = Vec::new();
        for i in 1..s - 1 {
            let j = s - 1 - i;
            for a in &by_size[i] {
                for b in &by_size[j] {
                    built.push(Term::pair(a.clone(), b.clone()));
                    built.push(Term::enc(a.clone(), b.clone()));
                }
            }
        }
        by_size[s].extend(built);
    }
    by_size.into_iter().flatten().collect()
}

/// Random systems over the input events `a`, `b`, `c` with random levels.
pub fn small_system() -> impl Strategy<Value = EventSystem> {
    let trace = prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 0..4);
    (prop::collection::btree_set(trace, 1..8), prop::collection::vec(any::<bool>(), 3)).prop_map(|(traces, high)| {
        let events = ["a", "b", "c"]
            .iter()
            .zip(high)
            .map(|(e, h)| (e.to_string(), EventInfo { level: if h { Level::H } else { Level::L }, class: EventClass::Input }))
            .collect();
        EventSystem::new(events, traces.into_iter().map(|t| t.into_iter().map(str::to_string).collect()).collect()).unwrap()
    })
}

/// The traces of `es` selected by the bits of `mask`.
pub fn subset(es: &EventSystem, mask: u64) -> BTreeSet<Trace> {
    es.traces.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| t.clone()).collect()
}

/// Every event system over at most three events whose traces have length
/// at most two.
pub fn all_small_systems(mut visit: impl FnMut(&EventSystem)) {
    let names = ["a", "b", "c"];
    for n in 1..=3usize {
        let alphabet = &names[..n];
        let mut universe: Vec<Trace> = vec![Vec::new()];
        for x in alphabet {
            universe.push(vec![x.to_string()]);
        }
        for x in alphabet {
            for y in alphabet {
                universe.push(vec![x.to_string(), y.to_string()]);
            }
        }
        for levels in 0..(1u32 << n) {
            let events: BTreeMap<String, EventInfo> = alphabet
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let level = if levels & (1 << i) != 0 { Level::H } else { Level::L };
                    (e.to_string(), EventInfo { level, class: EventClass::Input })
                })
                .collect();
            for mask in 1u32..(1 << universe.len()) {
                let traces = (0..universe.len()).filter(|i| mask & (1 << i) != 0).map(|i| universe[i].clone()).collect();
                visit(&EventSystem::new(events.clone(), traces).unwrap());
            }
        }
    }
}

/// Number of systems [`all_small_systems`] visits.
pub const SMALL_SYSTEMS: usize = 2 * 7 + 4 * 127 + 8 * 8191;
