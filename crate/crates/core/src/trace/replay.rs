//! Re-execution of serialized event logs.

use thiserror::Error;

use super::engine::{Context, Pending};
use super::matching::{build, Domains, Local, Unifier};
use super::{Event, Trace};
use crate::protocol::ActionKind;
use crate::term::{Knowledge, Term, TermSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event {index}: {reason}")]
    Divergence { index: usize, reason: String },
}

/// Global state after some prefix of a replayed trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub locals: Vec<Local>,
    pub knowledge: Knowledge,
    pub spied: TermSet,
    pub compromised: bool,
}

/// A trace together with the state before its first event and after each event.
#[derive(Clone, Debug)]
pub struct ReplayedTrace {
    pub trace: Trace,
    pub states: Vec<Snapshot>,
}

impl ReplayedTrace {
    pub fn last(&self) -> &Snapshot {
        self.states.last().expect("replay records the initial state")
    }
}

/// Replay position: the state so far and what is in transit.
#[derive(Clone)]
struct Run {
    snap: Snapshot,
    channel: Vec<Pending>,
    forged: Option<(String, String, Term)>,
    states: Vec<Snapshot>,
}

/// Re-executes `trace` against the scenario in `ctx`, recomputing all state.
///
/// When several instances of an agent could have sent the same message,
/// each choice is tried in turn. Fails at the first honest action that is
/// not the instance's next step, the first attacker message it cannot
/// derive, or the first receipt that does not match; with several choices
/// the failure reported is the one that got furthest.
pub fn replay(ctx: &Context, trace: &Trace) -> Result<ReplayedTrace, ReplayError> {
    let snap = Snapshot {
        locals: ctx.initial_locals().to_vec(),
        knowledge: Knowledge::new(&ctx.attacker_initial),
        spied: TermSet::new(),
        compromised: false,
    };
    let run = Run { states: vec![snap.clone()], snap, channel: Vec::new(), forged: None };
    let done = search(ctx, trace, 0, run)?;
    Ok(ReplayedTrace { trace: trace.clone(), states: done.states })
}

fn search(ctx: &Context, trace: &Trace, index: usize, run: Run) -> Result<Run, ReplayError> {
    let Some(ev) = trace.events.get(index) else {
        if run.forged.is_some() {
            return Err(ReplayError::Divergence { index, reason: "forged message was not delivered".into() });
        }
        return Ok(run);
    };
    let mut deepest: Option<ReplayError> = None;
    for mut next in advance(ctx, index, ev, run)? {
        next.states.push(next.snap.clone());
        match search(ctx, trace, index + 1, next) {
            Ok(done) => return Ok(done),
            Err(e) => {
                let further = match (&deepest, &e) {
                    (Some(ReplayError::Divergence { index: old, .. }), ReplayError::Divergence { index: new, .. }) => new > old,
                    (None, _) => true,
                };
                if further {
                    deepest = Some(e);
                }
            }
        }
    }
    Err(deepest.expect("advance yields at least one successor"))
}

/// Every way of executing `ev` from `run`.
fn advance(ctx: &Context, index: usize, ev: &Event, mut run: Run) -> Result<Vec<Run>, ReplayError> {
    let fail = |reason: String| ReplayError::Divergence { index, reason };
    let attacker = &ctx.scenario.attacker_name;
    if run.forged.is_some() && !matches!(ev, Event::Recv { .. }) {
        return Err(fail("forged message was not delivered".into()));
    }
    let snap = &mut run.snap;
    match ev {
        Event::Send { actual, claimed, to, term } if actual == attacker => {
            if !ctx.scenario.attacker.controls_network() {
                return Err(fail("this attacker cannot send".into()));
            }
            if !snap.knowledge.derives(term) {
                return Err(fail(format!("attacker cannot derive {term}")));
            }
            run.forged = Some((claimed.clone(), to.clone(), term.clone()));
        }
        Event::Send { actual, claimed, to, term } => {
            if claimed != actual {
                return Err(fail("honest agents do not forge their name".into()));
            }
            let senders: Vec<usize> = (0..ctx.instances.len())
                .filter(|&i| {
                    let loc = &snap.locals[i];
                    ctx.instances[i].agent == *actual
                        && ctx.program(i).actions.get(loc.pc).is_some_and(|a| {
                            a.kind == ActionKind::Send
                                && build(&a.pattern, loc).as_ref() == Some(term)
                                && loc.roles.get(&a.peer) == Some(to)
                        })
                })
                .collect();
            if senders.is_empty() {
                return Err(fail(format!("no instance of {actual} sends {term} next")));
            }
            let mut out = Vec::new();
            for i in senders {
                let mut next = run.clone();
                let info = &ctx.instances[i];
                let action = &ctx.program(i).actions[next.snap.locals[i].pc];
                let direct = info.historical || !ctx.scenario.attacker.controls_network();
                if direct {
                    let Some(target) = ctx.instance_of(info.session, &action.peer) else {
                        return Err(fail("no receiving instance".into()));
                    };
                    next.channel.push(Pending { session: info.session, step: action.step, target, claimed: actual.clone(), term: term.clone() });
                }
                if ctx.scenario.attacker.overhears() {
                    next.snap.spied.insert(term.clone());
                    next.snap.knowledge.extend([term.clone()]);
                }
                next.snap.locals[i].pc += 1;
                out.push(next);
            }
            return Ok(out);
        }
        Event::Recv { receiver, term, step, session } => {
            let Some(i) = ctx.instances.iter().position(|info| info.session == *session && info.agent == *receiver) else {
                return Err(fail(format!("{receiver} has no instance in session {session}")));
            };
            let loc = snap.locals[i].clone();
            let Some(action) = ctx.program(i).actions.get(loc.pc).filter(|a| a.kind == ActionKind::Recv && a.step == *step) else {
                return Err(fail(format!("{receiver} is not waiting for message {step}")));
            };
            let claimed = match run.forged.take() {
                Some((claimed, to, t)) => {
                    if to != *receiver || t != *term {
                        return Err(fail("delivery differs from the forged message".into()));
                    }
                    claimed
                }
                None => {
                    let Some(pos) = run.channel.iter().position(|p| p.target == i && p.step == *step && p.term == *term) else {
                        return Err(fail("nothing in transit matches this receipt".into()));
                    };
                    run.channel.remove(pos).claimed
                }
            };
            let none = Domains::new();
            let Some((mut l, _)) = ctx.matcher(i, &none).matches(&action.pattern, term, (loc, Unifier::default())).into_iter().next() else {
                return Err(fail(format!("{term} does not match the expected message")));
            };
            if !l.roles.contains_key(&action.peer) {
                if !ctx.ordinary.contains(&claimed) || l.roles.values().any(|b| *b == claimed) {
                    return Err(fail(format!("cannot accept {claimed} as peer")));
                }
                l.roles.insert(action.peer.clone(), claimed);
            }
            l.pc += 1;
            run.snap.locals[i] = l;
        }
        Event::Compromise { term } => {
            if !ctx.scenario.compromise {
                return Err(fail("compromise is not enabled".into()));
            }
            let done = ctx.instances.iter().enumerate().all(|(i, info)| !info.historical || ctx.is_complete(i, &snap.locals[i]));
            if !done || !ctx.historical_keys().contains(term) {
                return Err(fail(format!("{term} is not a key of a completed earlier session")));
            }
            snap.compromised = true;
            snap.spied.insert(term.clone());
            snap.knowledge.extend([term.clone()]);
        }
    }
    Ok(vec![run])
}
