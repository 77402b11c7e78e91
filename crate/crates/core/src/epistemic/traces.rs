//! Kripke models whose runs are explored protocol traces.

use super::model::{KripkeModel, PointData};
use super::EpistemicError;
use crate::term::{pattern_view_with, Term, TermSet, ViewConfig};
use crate::trace::{replay, Context, Event, Trace, TraceSet};

/// How an agent's local state is turned into an observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ObservationMode {
    /// The exact sequence of messages the agent has seen.
    LocalRaw,
    /// That sequence with every ciphertext the agent cannot open replaced by
    /// an anonymous token.
    #[default]
    PatternView,
}

/// Observation key of a message sequence under `mode`.
pub fn observe(seen: &[Term], private: &TermSet, mode: ObservationMode) -> String {
    match mode {
        ObservationMode::LocalRaw => seen.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ; "),
        ObservationMode::PatternView => {
            let private: Vec<Term> = private.iter().cloned().collect();
            pattern_view_with(seen, &private, ViewConfig::default()).iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ; ")
        }
    }
}

/// Messages `agent` has sent or received in `events`; the attacker sees
/// whatever it overhears, its own forgeries and leaked keys.
fn seen_by(ctx: &Context, agent: &str, events: &[Event]) -> Vec<Term> {
    let attacker = &ctx.scenario.attacker_name;
    let overhears = ctx.scenario.attacker.overhears();
    events
        .iter()
        .filter(|e| match e {
            Event::Send { actual, .. } if agent == attacker => overhears || actual == attacker,
            Event::Send { actual, .. } => actual == agent,
            Event::Recv { receiver, .. } => receiver == agent,
            Event::Compromise { .. } => agent == attacker,
        })
        .map(|e| e.term().clone())
        .collect()
}

/// Agents of a trace model: the honest participants and, if there is one,
/// the attacker.
pub fn model_agents(ctx: &Context) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for info in &ctx.instances {
        if !out.contains(&info.agent) {
            out.push(info.agent.clone());
        }
    }
    if ctx.scenario.attacker.overhears() {
        out.push(ctx.scenario.attacker_name.clone());
    }
    out
}

/// Builds a synchronous model whose runs are `traces`, one point per prefix.
///
/// Atoms: `part(i,m)` and `knows(i,m)` over the messages agent `i` has seen
/// together with its private knowledge.
pub fn model_from_traces(ctx: &Context, traces: &[Trace], mode: ObservationMode) -> Result<KripkeModel, EpistemicError> {
    let agents = model_agents(ctx);
    let mut builder = KripkeModel::builder(agents.clone());
    for t in traces {
        let replayed = replay(ctx, t).map_err(|e| EpistemicError::Trace(e.to_string()))?;
        let mut points = Vec::new();
        for (time, snap) in replayed.states.iter().enumerate() {
            let mut p = PointData::default();
            for a in &agents {
                let seen = seen_by(ctx, a, &t.events[..time]);
                let private = ctx.private_knowledge(a, &snap.locals);
                p.observations.push(observe(&seen, &private, mode));
                let mut held = private;
                held.extend(seen);
                p.messages.push(held);
            }
            points.push(p);
        }
        builder.run(points);
    }
    Ok(builder.build())
}

/// Model over the maximal traces of `traces` (at most `limit` of them).
pub fn build_model(traces: &TraceSet, mode: ObservationMode, limit: usize) -> Result<KripkeModel, EpistemicError> {
    model_from_traces(&traces.context, &traces.maximal_traces(limit), mode)
}
