//! Attack interactions in `I[A] -> B : term` notation.

use std::collections::BTreeMap;
use std::fmt;

use super::matching::{is_symbol, Domains};
use super::{Event, LogError, Trace};
use crate::term::{parse_term, KeyKind, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionLine {
    /// `X` or `I[X]`.
    pub sender: String,
    pub receiver: String,
    pub term: Term,
}

impl fmt::Display for InteractionLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} : {}", self.sender, self.receiver, self.term)
    }
}

pub type Interaction = Vec<InteractionLine>;

/// Renders the message flow of `trace`.
///
/// An honest message that the attacker passes on unchanged (same term,
/// same addressee, true sender name) is shown as a single direct line.
/// Receipts and compromise events are not shown.
pub fn render_interaction(trace: &Trace, attacker: &str) -> Interaction {
    let ev = &trace.events;
    let mut out = Vec::new();
    let mut skip = vec![false; ev.len()];
    for (i, e) in ev.iter().enumerate() {
        if skip[i] {
            continue;
        }
        let Event::Send { actual, claimed, to, term } = e else { continue };
        if actual == attacker {
            let sender = if claimed == attacker { attacker.to_string() } else { format!("{attacker}[{claimed}]") };
            out.push(InteractionLine { sender, receiver: to.clone(), term: term.clone() });
            continue;
        }
        let mut direct = false;
        for later in &ev[i + 1..] {
            match later {
                Event::Send { actual: a, to: t, term: m, .. } if a == attacker && t == to && m == term => break,
                Event::Recv { receiver, term: m, .. } if receiver == to && m == term => {
                    direct = true;
                    break;
                }
                _ => {}
            }
        }
        let next_send = (i + 1..ev.len()).find(|&j| matches!(ev[j], Event::Send { .. }));
        let forwarded = next_send.filter(|&j| {
            matches!(&ev[j], Event::Send { actual: a, claimed: c, to: t, term: m }
                if a == attacker && c == actual && t == to && m == term)
        });
        let receiver = if direct || forwarded.is_some() {
            if let Some(j) = forwarded {
                skip[j] = true;
            }
            to.clone()
        } else if to == attacker {
            attacker.to_string()
        } else {
            format!("{attacker}[{to}]")
        };
        out.push(InteractionLine { sender: actual.clone(), receiver, term: term.clone() });
    }
    out
}

/// Reads an interaction written one `X -> Y : term` per line.
pub fn parse_interaction(text: &str) -> Result<Interaction, LogError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let err = |m: &str| LogError::Syntax { line: n + 1, message: m.to_string() };
        let (route, msg) = line.split_once(" : ").ok_or_else(|| err("expected `X -> Y : term`"))?;
        let (from, to) = route.split_once("->").ok_or_else(|| err("expected `->`"))?;
        let term = parse_term(msg.trim()).map_err(|source| LogError::Term { line: n + 1, source })?;
        out.push(InteractionLine { sender: from.trim().to_string(), receiver: to.trim().to_string(), term });
    }
    Ok(out)
}

/// Atoms whose concrete name is irrelevant: nonces and session-level keys
/// or texts. Agent names and long-term keys are compared literally.
fn renamable(t: &Term) -> bool {
    match t {
        Term::Nonce(_) => true,
        Term::Key(id, KeyKind::Shared) | Term::Text(id) => id.contains('#') || id.starts_with(|c: char| c.is_ascii_lowercase()),
        _ => false,
    }
}

#[derive(Clone, Default)]
struct Renaming {
    fwd: BTreeMap<Term, Term>,
    bwd: BTreeMap<Term, Term>,
}

impl Renaming {
    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Pair(a1, a2), Term::Pair(b1, b2)) | (Term::Enc(a1, a2), Term::Enc(b1, b2)) => self.unify(a1, b1) && self.unify(a2, b2),
            _ if renamable(a) && renamable(b) && std::mem::discriminant(a) == std::mem::discriminant(b) => {
                match (self.fwd.get(a), self.bwd.get(b)) {
                    (None, None) => {
                        self.fwd.insert(a.clone(), b.clone());
                        self.bwd.insert(b.clone(), a.clone());
                        true
                    }
                    (Some(x), Some(y)) => x == b && y == a,
                    _ => false,
                }
            }
            _ => a == b,
        }
    }
}

/// Lines up the atoms of two terms, or fails on a structural mismatch.
fn zip_atoms(e: &Term, a: &Term, out: &mut Vec<(Term, Term)>) -> bool {
    match (e, a) {
        (Term::Pair(e1, e2), Term::Pair(a1, a2)) | (Term::Enc(e1, e2), Term::Enc(a1, a2)) => {
            zip_atoms(e1, a1, out) && zip_atoms(e2, a2, out)
        }
        (Term::Pair(..) | Term::Enc(..), _) | (_, Term::Pair(..) | Term::Enc(..)) => false,
        _ => {
            out.push((e.clone(), a.clone()));
            true
        }
    }
}

fn assign_atoms(pairs: &[(Term, Term)], domains: &Domains, r: Renaming, chosen: &mut BTreeMap<Term, Term>) -> bool {
    let Some(((e, a), rest)) = pairs.split_first() else { return true };
    if !is_symbol(a) {
        let mut r = r;
        return r.unify(e, a) && assign_atoms(rest, domains, r, chosen);
    }
    if let Some(v) = chosen.get(a).cloned() {
        let mut r = r;
        return r.unify(e, &v) && assign_atoms(rest, domains, r, chosen);
    }
    for v in domains.get(a).into_iter().flatten() {
        let mut r2 = r.clone();
        if r2.unify(e, v) {
            chosen.insert(a.clone(), v.clone());
            if assign_atoms(rest, domains, r2, chosen) {
                return true;
            }
            chosen.remove(a);
        }
    }
    false
}

/// Like [`match_prefix`] for interactions that still contain open symbols:
/// finds values from `domains` for them under which `actual` matches the
/// first lines of `expected`, or all of it when `full` is set.
pub(crate) fn match_open(
    expected: &[InteractionLine],
    actual: &[InteractionLine],
    domains: &Domains,
    full: bool,
) -> Option<BTreeMap<Term, Term>> {
    if actual.len() > expected.len() || (full && actual.len() != expected.len()) {
        return None;
    }
    let mut pairs = Vec::new();
    for (e, a) in expected.iter().zip(actual) {
        if e.sender != a.sender || e.receiver != a.receiver || !zip_atoms(&e.term, &a.term, &mut pairs) {
            return None;
        }
    }
    let mut chosen = BTreeMap::new();
    assign_atoms(&pairs, domains, Renaming::default(), &mut chosen).then_some(chosen)
}

/// Whether `actual` has the same shape as `expected` line by line, up to a
/// bijective renaming of fresh values.
pub fn match_interaction(expected: &[InteractionLine], actual: &[InteractionLine]) -> bool {
    expected.len() == actual.len() && match_prefix(expected, actual)
}

/// Whether `actual` is consistent with the first lines of `expected`.
pub fn match_prefix(expected: &[InteractionLine], actual: &[InteractionLine]) -> bool {
    if actual.len() > expected.len() {
        return false;
    }
    let mut r = Renaming::default();
    expected.iter().zip(actual).all(|(e, a)| e.sender == a.sender && e.receiver == a.receiver && r.unify(&e.term, &a.term))
}
