mod common;

use std::collections::BTreeSet;

use common::{claim, golden, run, scenario, spec};
use secknow::protocol::AttackerClass;
use secknow::security::find_matching;
use secknow::term::parse_term;
use secknow::trace::{explore, replay, Context, Event, ReplayError, Trace};

fn kinds(t: &Trace) -> Vec<&'static str> {
    t.events
        .iter()
        .map(|e| match e {
            Event::Send { .. } => "send",
            Event::Recv { .. } => "recv",
            Event::Compromise { .. } => "compromise",
        })
        .collect()
}

/// Every way of merging `a` and `b` while keeping each in order.
fn interleavings(a: &[Event], b: &[Event]) -> BTreeSet<Vec<Event>> {
    if a.is_empty() || b.is_empty() {
        return BTreeSet::from([a.iter().chain(b).cloned().collect()]);
    }
    let mut out = BTreeSet::new();
    for mut rest in interleavings(&a[1..], b) {
        rest.insert(0, a[0].clone());
        out.insert(rest);
    }
    for mut rest in interleavings(a, &b[1..]) {
        rest.insert(0, b[0].clone());
        out.insert(rest);
    }
    out
}

#[test]
fn sample_without_attacker_has_one_trace() {
    let s = spec("sample");
    let ts = explore(&s, &scenario(&s, AttackerClass::None, 1, false)).unwrap();
    assert_eq!(ts.count_maximal(), 1);
    let traces = ts.maximal_traces(10);
    assert_eq!(traces.len(), 1);
    assert_eq!(kinds(&traces[0]), ["send", "recv", "send", "recv"]);
    assert!(!ts.partial);
}

#[test]
fn passive_runs_are_the_interleavings_of_the_sessions() {
    for name in ["sample", "prot1"] {
        let s = spec(name);
        let one = explore(&s, &scenario(&s, AttackerClass::None, 1, false)).unwrap().maximal_traces(10);
        assert_eq!(one.len(), 1);
        // The second session is the first one with its session id and fresh values shifted.
        let shift = |t: &str| t.replace("#1#", "#2#");
        let second: Vec<Event> = one[0]
            .events
            .iter()
            .map(|e| match e {
                Event::Recv { receiver, term, step, .. } => Event::Recv {
                    receiver: receiver.clone(),
                    term: parse_term(&shift(&term.to_string())).unwrap(),
                    step: *step,
                    session: 2,
                },
                other => other.map_term(|t| parse_term(&shift(&t.to_string())).unwrap()),
            })
            .collect();
        let expected = interleavings(&one[0].events, &second);
        let two = explore(&s, &scenario(&s, AttackerClass::None, 2, false)).unwrap();
        let got: BTreeSet<Vec<Event>> = two.maximal_traces(100_000).into_iter().map(|t| t.events).collect();
        assert_eq!(got, expected, "{name}");
        // Identical messages of the two sessions collapse in the set above but
        // are separate paths in the graph.
        let n = one[0].len() as u128;
        let choose = (1..=n).fold(1u128, |acc, i| acc * (n + i) / i);
        assert_eq!(two.count_maximal(), choose, "{name}");
    }
}

#[test]
fn eavesdropping_does_not_change_communication() {
    for name in ["sample", "prot1", "needham-schroeder"] {
        let s = spec(name);
        let logs = |a| -> BTreeSet<Trace> {
            explore(&s, &scenario(&s, a, 2, false)).unwrap().maximal_traces(100_000).into_iter().collect()
        };
        assert_eq!(logs(AttackerClass::None), logs(AttackerClass::Eavesdrop), "{name}");
    }
}

#[test]
fn spied_terms_depend_on_the_attacker() {
    let s = spec("sample");
    for (a, expected) in [(AttackerClass::Eavesdrop, vec!["m1", "m2"]), (AttackerClass::None, vec![])] {
        let ts = explore(&s, &scenario(&s, a, 1, false)).unwrap();
        let end = (0..ts.len()).find(|&id| ts.is_maximal(id)).unwrap();
        let spied: Vec<String> = ts.spied(end).iter().map(|t| t.to_string()).collect();
        assert_eq!(spied, expected);
    }
}

#[test]
fn attacker_knowledge_only_grows() {
    for (name, a) in [("prot1", AttackerClass::Insider), ("needham-schroeder", AttackerClass::Active)] {
        let (_, ts) = run(name, a, false);
        for id in 0..ts.len() {
            let k = ts.knowledge(id);
            let spied = ts.spied(id);
            for e in &ts.nodes[id].edges {
                let next = ts.knowledge(e.to);
                assert!(k.analyzed().iter().all(|t| next.derives(t)), "{name}: node {id} -> {}", e.to);
                // Terms carrying open attacker choices may be renamed on the way.
                let later = ts.spied(e.to);
                assert!(spied.iter().filter(|t| !t.to_string().contains('?')).all(|t| later.contains(t)));
            }
        }
    }
}

#[test]
fn explored_traces_replay_to_themselves() {
    for (name, a, c) in [
        ("prot1", AttackerClass::Insider, false),
        ("prot4", AttackerClass::Active, true),
        ("needham-schroeder", AttackerClass::Insider, false),
        ("prot6", AttackerClass::Eavesdrop, false),
    ] {
        let (s, ts) = run(name, a, c);
        let ctx = Context::new(&s, &scenario(&s, a, 2, c)).unwrap();
        for t in ts.maximal_traces(300) {
            let r = replay(&ctx, &t).unwrap_or_else(|e| panic!("{name}: {e}\n{t}"));
            assert_eq!(r.trace, t);
            assert_eq!(r.states.len(), t.len() + 1);
            assert_eq!(t.to_log().parse::<Trace>().unwrap(), t);
        }
    }
}

#[test]
fn delivered_terms_are_derivable_or_verbatim() {
    let (s, ts) = run("prot1", AttackerClass::Insider, false);
    let ctx = Context::new(&s, &scenario(&s, AttackerClass::Insider, 2, false)).unwrap();
    for t in ts.maximal_traces(300) {
        let r = replay(&ctx, &t).unwrap();
        for (i, e) in t.events.iter().enumerate() {
            if let Event::Send { actual, term, .. } = e {
                if actual == "I" {
                    assert!(r.states[i].knowledge.derives(term));
                }
            }
        }
    }
    let (_, ts) = run("prot1", AttackerClass::Eavesdrop, false);
    for t in ts.maximal_traces(300) {
        let sent: BTreeSet<_> = t.events.iter().filter(|e| matches!(e, Event::Send { .. })).map(|e| e.term().clone()).collect();
        assert!(t.events.iter().filter(|e| matches!(e, Event::Recv { .. })).all(|e| sent.contains(e.term())));
        assert!(t.events.iter().all(|e| !matches!(e, Event::Send { actual, .. } if actual == "I")));
    }
}

#[test]
fn prefixes_of_traces_are_traces() {
    let (s, ts) = run("needham-schroeder", AttackerClass::Insider, false);
    let ctx = Context::new(&s, &scenario(&s, AttackerClass::Insider, 2, false)).unwrap();
    for t in ts.maximal_traces(100) {
        for n in 0..=t.len() {
            // A forged message and its receipt form one step.
            if n > 0 && matches!(&t.events[n - 1], Event::Send { actual, .. } if actual == "I") {
                continue;
            }
            assert!(replay(&ctx, &t.prefix(n)).is_ok(), "prefix {n} of\n{t}");
        }
    }
}

#[test]
fn insider_relay_log_is_valid_only_with_an_insider() {
    let (s, ts) = run("needham-schroeder", AttackerClass::Insider, false);
    let w = find_matching(&ts, &claim("agree B A"), &golden("attack-ns")).expect("relay attack found");
    let insider = Context::new(&s, &scenario(&s, AttackerClass::Insider, 2, false)).unwrap();
    let active = Context::new(&s, &scenario(&s, AttackerClass::Active, 2, false)).unwrap();
    let log = w.trace.to_log().parse::<Trace>().unwrap();
    assert!(replay(&insider, &log).is_ok());
    assert!(replay(&active, &log).is_err());
    let shipped: Trace = common::read("attack-ns.trace").parse().unwrap();
    assert!(replay(&insider, &shipped).is_ok());
    assert!(replay(&active, &shipped).is_err());
}

#[test]
fn underivable_forgery_fails_at_its_index() {
    let s = spec("needham-schroeder");
    let ctx = Context::new(&s, &scenario(&s, AttackerClass::Active, 2, false)).unwrap();
    let log = "t=0 SEND actual=A claimed=A to=B term=enc(pair(A,nA#1#A),pk(B))\n\
               t=1 SEND actual=I claimed=A to=B term=enc(pair(A,nB#1#B),pk(B))\n\
               t=2 RECV agent=B step=1 session=1 term=enc(pair(A,nB#1#B),pk(B))\n";
    let t: Trace = log.parse().unwrap();
    match replay(&ctx, &t) {
        Err(ReplayError::Divergence { index, .. }) => assert_eq!(index, 1),
        Ok(_) => panic!("forgery accepted"),
    }
    let ok: Trace = log.replace("nB#1#B", "nI").parse().unwrap();
    assert!(replay(&ctx, &ok).is_ok());
}

#[test]
fn compromised_key_and_old_reply_are_spied() {
    let (s, ts) = run("prot4", AttackerClass::Active, true);
    let w = find_matching(&ts, &claim("secret ksess"), &golden("attack5")).expect("replay attack found");
    let ctx = Context::new(&s, &scenario(&s, AttackerClass::Active, 2, true)).unwrap();
    let r = replay(&ctx, &w.trace).unwrap();
    let spied = &r.last().spied;
    let old = parse_term("ksess#0#S").unwrap();
    assert!(spied.contains(&old));
    let reply = parse_term("enc(pair(B,ksess#0#S),k(AS))").unwrap();
    assert!(spied.iter().any(|t| {
        let mut found = false;
        t.for_each_subterm(&mut |x| found |= *x == reply);
        found
    }));
}

#[test]
fn insider_session_contains_the_server_impersonation() {
    let (_, ts) = run("prot1", AttackerClass::Insider, false);
    assert!(find_matching(&ts, &claim("agree B S"), &golden("attack2")).is_some());
    assert!(find_matching(&ts, &claim("secret ksess"), &golden("attack3")).is_some());
}
