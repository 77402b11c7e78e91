//! Secrecy and agreement claims decided over explored executions.
//!
//! Every violation comes with a witness trace that [`certify`] can re-check
//! by replaying it from scratch.

use std::collections::BTreeSet;
use std::fmt;

use crate::protocol::{ActionKind, Claim, ProtocolSpec, Sort};
use crate::term::{Knowledge, Term};
use crate::trace::{
    is_symbol, match_open, render_interaction, replay, Context, Event, Interaction, Local, NodeId, Trace, TraceSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    /// No violation among the explored executions.
    HoldsWithinBounds,
    Violated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::HoldsWithinBounds => "holds_within_bounds",
            Status::Violated => "violated",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub trace: Trace,
    pub interaction: Interaction,
    /// Which run broke the claim and how.
    pub explanation: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub claim: Claim,
    pub status: Status,
    pub witness: Option<Witness>,
    /// False when the state cap cut exploration short.
    pub exhaustive: bool,
}

impl Verdict {
    pub fn violated(&self) -> bool {
        self.status == Status::Violated
    }
}

/// Verdicts for every secrecy claim of `spec`.
pub fn check_secrecy(traces: &TraceSet, spec: &ProtocolSpec) -> Vec<Verdict> {
    spec.claims.iter().filter(|c| matches!(c, Claim::Secret(_))).map(|c| check_claim(traces, c)).collect()
}

/// Verdicts for every agreement claim of `spec`.
pub fn check_agreement(traces: &TraceSet, spec: &ProtocolSpec) -> Vec<Verdict> {
    spec.claims.iter().filter(|c| matches!(c, Claim::Agree { .. })).map(|c| check_claim(traces, c)).collect()
}

/// Verdicts for all claims of `spec`, in declaration order.
pub fn check_claims(traces: &TraceSet, spec: &ProtocolSpec) -> Vec<Verdict> {
    spec.claims.iter().map(|c| check_claim(traces, c)).collect()
}

pub fn check_claim(traces: &TraceSet, claim: &Claim) -> Verdict {
    let found = match claim {
        Claim::Secret(_) => first_secrecy_violation(traces, claim),
        Claim::Agree { .. } => (0..traces.len()).find_map(|id| violation_at(traces, id, claim).map(|why| (id, why))),
    };
    let witness = found.map(|(id, explanation)| {
        let trace = traces.trace_to(id);
        let interaction = attack_interaction(&traces.context, &trace.events);
        Witness { trace, interaction, explanation }
    });
    Verdict {
        claim: claim.clone(),
        status: if witness.is_some() { Status::Violated } else { Status::HoldsWithinBounds },
        witness,
        exhaustive: !traces.partial,
    }
}

/// Leaks only grow along a path, so it suffices to test path ends and then
/// walk back to the earliest state that already shows the leak.
fn first_secrecy_violation(traces: &TraceSet, claim: &Claim) -> Option<(NodeId, String)> {
    let end = (0..traces.len()).filter(|&id| traces.is_maximal(id)).find(|&id| violation_at(traces, id, claim).is_some())?;
    let mut best = end;
    let mut cur = end;
    while let Some((p, _)) = traces.nodes[cur].parent {
        if violation_at(traces, p, claim).is_none() {
            break;
        }
        best = p;
        cur = p;
    }
    violation_at(traces, best, claim).map(|why| (best, why))
}

fn violation_at(traces: &TraceSet, id: NodeId, claim: &Claim) -> Option<String> {
    let st = &traces.nodes[id].state;
    let locals: Vec<&Local> = st.locals.iter().map(|l| &**l).collect();
    let ctx = &traces.context;
    match claim {
        Claim::Secret(_) => {
            secrecy_candidates(ctx, claim, &locals).next()?;
            violation(ctx, claim, &locals, &ctx.knowledge_in(st))
        }
        Claim::Agree { claimer, peer } => agreement_violation(ctx, claimer, peer, &locals),
    }
}

fn honest_run(ctx: &Context, i: usize, loc: &Local) -> bool {
    let info = &ctx.instances[i];
    ctx.is_honest(&info.agent) && loc.roles.values().all(|a| ctx.is_honest(a))
}

fn secrecy_candidates<'a>(ctx: &'a Context, claim: &'a Claim, locals: &'a [&'a Local]) -> impl Iterator<Item = (usize, &'a Term)> + 'a {
    let Claim::Secret(name) = claim else { panic!("not a secrecy claim") };
    locals.iter().enumerate().filter_map(move |(i, loc)| {
        let info = &ctx.instances[i];
        if info.historical || !ctx.is_complete(i, loc) || !honest_run(ctx, i, loc) {
            return None;
        }
        loc.vars.get(name).map(|v| (i, v))
    })
}

/// Why `claim` fails in the global state given by `locals` and the
/// attacker's `known` terms, or `None` if it holds there.
pub fn violation(ctx: &Context, claim: &Claim, locals: &[&Local], known: &Knowledge) -> Option<String> {
    match claim {
        Claim::Secret(name) => {
            for (i, value) in secrecy_candidates(ctx, claim, locals) {
                if is_symbol(value) || known.derives(value) {
                    let info = &ctx.instances[i];
                    let shown = if is_symbol(value) { ctx.attacker_nonce() } else { value.clone() };
                    return Some(format!(
                        "{} finished session {} as {} with {} = {}, which the attacker can derive",
                        info.agent, info.session, info.role, name, shown
                    ));
                }
            }
            None
        }
        Claim::Agree { claimer, peer } => agreement_violation(ctx, claimer, peer, locals),
    }
}

/// How far the peer role must have run before the claimer's last action.
fn running_point(ctx: &Context, claimer: &str, peer: &str) -> Option<usize> {
    let c = ctx.compiled.program(claimer);
    let p = ctx.compiled.program(peer);
    let last = c.actions.last()?.step;
    let before = p.actions.iter().filter(|a| a.step < last).count();
    let sends_last = p.actions.iter().any(|a| a.step == last && a.kind == ActionKind::Send);
    Some(before + usize::from(sends_last))
}

fn agreement_violation(ctx: &Context, claimer: &str, peer: &str, locals: &[&Local]) -> Option<String> {
    let running = running_point(ctx, claimer, peer)?;
    let peer_prog = ctx.compiled.program(peer);
    let peer_vars = peer_prog.vars_bound_at(running);
    let keys: Vec<&String> = ctx
        .spec()
        .fresh
        .values()
        .flatten()
        .filter(|v| ctx.compiled.var_sort(v) == Some(Sort::Key) && peer_vars.contains(*v))
        .collect();
    for (i, loc) in locals.iter().enumerate() {
        let info = &ctx.instances[i];
        if info.role != claimer || !ctx.is_complete(i, loc) || !honest_run(ctx, i, loc) {
            continue;
        }
        let Some(partner) = loc.roles.get(peer) else { continue };
        let data: Vec<(&String, &Term)> = keys.iter().filter_map(|k| loc.vars.get(*k).map(|v| (*k, v))).collect();
        let agrees = locals.iter().enumerate().any(|(j, other)| {
            let o = &ctx.instances[j];
            o.role == peer
                && o.agent == *partner
                && other.pc >= running
                && same_participants(ctx, loc, other)
                && data.iter().all(|(k, v)| other.vars.get(*k) == Some(*v))
        });
        if !agrees {
            let mut seen: Vec<String> = loc.roles.iter().map(|(r, a)| format!("{r}={a}")).collect();
            seen.extend(data.iter().map(|(k, v)| format!("{k}={v}")));
            return Some(format!(
                "{} finished session {} as {} with {}, but no run of {} as {} agrees on {}",
                info.agent,
                info.session,
                claimer,
                seen.join(", "),
                partner,
                peer,
                if data.is_empty() { "the participants".to_string() } else { "the participants and keys".to_string() }
            ));
        }
    }
    None
}

/// Trusted roles must be filled by the same agents; for ordinary roles only
/// the set of participants counts, since a server may legitimately serve
/// the pair with initiator and responder swapped.
fn same_participants(ctx: &Context, claimer: &Local, peer: &Local) -> bool {
    let spec = ctx.spec();
    let trusted_ok = peer.roles.iter().filter(|(r, _)| spec.is_trusted(r)).all(|(r, a)| claimer.roles.get(r) == Some(a));
    let ours: BTreeSet<&String> = claimer.roles.iter().filter(|(r, _)| !spec.is_trusted(r)).map(|(_, a)| a).collect();
    trusted_ok && peer.roles.iter().filter(|(r, _)| !spec.is_trusted(r)).all(|(_, a)| ours.contains(a))
}

/// The interaction of `events` as it would be drawn: when an earlier
/// session was compromised, only what happened afterwards.
pub fn attack_interaction(ctx: &Context, events: &[Event]) -> Interaction {
    let mut tail = events[after_compromise(events)..].to_vec();
    ctx.close_symbols(&mut tail);
    render_interaction(&Trace::new(tail), &ctx.scenario.attacker_name)
}

fn after_compromise(events: &[Event]) -> usize {
    events.iter().rposition(|e| matches!(e, Event::Compromise { .. })).map_or(0, |i| i + 1)
}

fn open_interaction(ctx: &Context, events: &[Event]) -> Interaction {
    render_interaction(&Trace::new(events[after_compromise(events)..].to_vec()), &ctx.scenario.attacker_name)
}

/// Whether `trace` replays in the scenario of `ctx` and ends in a state
/// where `claim` fails.
pub fn certify(ctx: &Context, claim: &Claim, trace: &Trace) -> bool {
    let Ok(r) = replay(ctx, trace) else { return false };
    let last = r.last();
    let locals: Vec<&Local> = last.locals.iter().collect();
    violation(ctx, claim, &locals, &last.knowledge).is_some()
}

/// A violating execution whose interaction has the shape of `expected`.
///
/// Attacker-chosen nonces that are still open may take any value they were
/// allowed to take, so the search can line them up with the expected terms.
pub fn find_matching(traces: &TraceSet, claim: &Claim, expected: &Interaction) -> Option<Witness> {
    let ctx = &traces.context;
    let waiting = |events: &[Event]| ctx.scenario.compromise && !events.iter().any(|e| matches!(e, Event::Compromise { .. }));
    let mut viable = |id: NodeId, events: &[Event]| {
        if waiting(events) {
            return true;
        }
        // A trailing honest send may still turn out to be forwarded as is.
        let start = after_compromise(events);
        let cut = match events.iter().rposition(|e| matches!(e, Event::Send { .. })) {
            Some(i) if i >= start && matches!(&events[i], Event::Send { actual, .. } if *actual != ctx.scenario.attacker_name) => i,
            _ => events.len(),
        };
        match_open(expected, &open_interaction(ctx, &events[..cut]), &traces.nodes[id].state.symbols, false).is_some()
    };
    let mut found = None;
    let mut accept = |id: NodeId, events: &[Event]| {
        if waiting(events) {
            return false;
        }
        let Some(chosen) = match_open(expected, &open_interaction(ctx, events), &traces.nodes[id].state.symbols, true) else {
            return false;
        };
        match violation_at(traces, id, claim) {
            Some(why) => {
                found = Some((chosen, why));
                true
            }
            None => false,
        }
    };
    let (_, open) = traces.find_path(&mut viable, &mut accept)?;
    let (chosen, explanation) = found?;
    let mut events: Vec<Event> =
        open.events.iter().map(|e| e.map_term(|t| t.map_atoms(&mut |a| chosen.get(a).cloned().unwrap_or_else(|| a.clone())))).collect();
    ctx.close_symbols(&mut events);
    let trace = Trace::new(events);
    let interaction = attack_interaction(ctx, &trace.events);
    Some(Witness { trace, interaction, explanation })
}
