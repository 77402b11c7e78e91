//! Bounded exploration of protocol runs.
//!
//! [`explore`] builds a deduplicated state graph whose root-to-node paths are
//! the traces of a scenario; [`replay`] re-executes a serialized event log and
//! is the validator for attack certificates.

mod engine;
mod matching;
mod render;
mod replay;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::term::{parse_term, Term, TermError};

pub use engine::{explore, Context, Edge, GState, InstanceInfo, Node, NodeId, Pending, TraceSet};
pub use matching::{is_symbol, Domains, Local};
pub(crate) use render::match_open;
pub use render::{match_interaction, match_prefix, parse_interaction, render_interaction, Interaction, InteractionLine};
pub use replay::{replay, ReplayError, ReplayedTrace, Snapshot};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    /// `actual` put `term` on the network, addressed to `to`, with a
    /// from-field reading `claimed`.
    Send { actual: String, claimed: String, to: String, term: Term },
    /// `receiver` accepted `term` as message `step` of session `session`.
    Recv { receiver: String, term: Term, step: usize, session: usize },
    /// The attacker obtained `term` from outside the protocol.
    Compromise { term: Term },
}

impl Event {
    pub fn term(&self) -> &Term {
        match self {
            Event::Send { term, .. } | Event::Recv { term, .. } | Event::Compromise { term } => term,
        }
    }

    /// The same event carrying `f(term)`.
    pub fn map_term(&self, f: impl FnOnce(&Term) -> Term) -> Event {
        let mut e = self.clone();
        match &mut e {
            Event::Send { term, .. } | Event::Recv { term, .. } | Event::Compromise { term } => *term = f(term),
        }
        e
    }
}

/// A finite event sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(events: Vec<Event>) -> Self {
        Trace { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Trace {
        Trace { events: self.events[..n.min(self.events.len())].to_vec() }
    }

    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.events.iter().enumerate() {
            out.push_str(&format_event(i, e));
            out.push('\n');
        }
        out
    }
}

fn format_event(i: usize, e: &Event) -> String {
    match e {
        Event::Send { actual, claimed, to, term } => format!("t={i} SEND actual={actual} claimed={claimed} to={to} term={term}"),
        Event::Recv { receiver, term, step, session } => {
            format!("t={i} RECV agent={receiver} step={step} session={session} term={term}")
        }
        Event::Compromise { term } => format!("t={i} COMPROMISE term={term}"),
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_log())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Term { line: usize, source: TermError },
}

impl FromStr for Trace {
    type Err = LogError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut events = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let err = |m: &str| LogError::Syntax { line: line_no, message: m.to_string() };
            let (head, term_src) = line.split_once("term=").ok_or_else(|| err("missing `term=`"))?;
            let term = parse_term(term_src.trim()).map_err(|source| LogError::Term { line: line_no, source })?;
            let mut words = head.split_whitespace();
            let stamp = words.next().ok_or_else(|| err("empty event"))?;
            let t: usize = stamp.strip_prefix("t=").and_then(|v| v.parse().ok()).ok_or_else(|| err("expected `t=<index>`"))?;
            if t != events.len() {
                return Err(err("event indices must count up from 0"));
            }
            let kind = words.next().ok_or_else(|| err("missing event kind"))?;
            let mut fields = std::collections::BTreeMap::new();
            for w in words {
                let (k, v) = w.split_once('=').ok_or_else(|| err("expected `key=value`"))?;
                fields.insert(k, v.to_string());
            }
            let get = |k: &str| fields.get(k).cloned().ok_or_else(|| err(&format!("missing `{k}=`")));
            let num = |k: &str| get(k).and_then(|v| v.parse::<usize>().map_err(|_| err(&format!("bad number in `{k}=`"))));
            events.push(match kind {
                "SEND" => Event::Send { actual: get("actual")?, claimed: get("claimed")?, to: get("to")?, term },
                "RECV" => Event::Recv { receiver: get("agent")?, step: num("step")?, session: num("session")?, term },
                "COMPROMISE" => Event::Compromise { term },
                other => return Err(err(&format!("unknown event kind `{other}`"))),
            });
        }
        Ok(Trace { events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip() {
        let tr = Trace::new(vec![
            Event::Send { actual: "I".into(), claimed: "A".into(), to: "B".into(), term: parse_term("enc(pair(A,nA#1#A),pk(B))").unwrap() },
            Event::Recv { receiver: "B".into(), term: parse_term("enc(pair(A,nA#1#A),pk(B))").unwrap(), step: 1, session: 1 },
            Event::Compromise { term: parse_term("ksess#0#S").unwrap() },
        ]);
        let log = tr.to_log();
        assert!(log.starts_with("t=0 SEND actual=I claimed=A to=B term="));
        assert_eq!(log.parse::<Trace>().unwrap(), tr);
    }

    #[test]
    fn bad_log_lines() {
        assert!("t=0 SEND actual=A term=x".parse::<Trace>().is_err());
        assert!("t=1 COMPROMISE term=k0".parse::<Trace>().is_err());
        assert!("t=0 COMPROMISE term=enc(".parse::<Trace>().is_err());
    }
}
