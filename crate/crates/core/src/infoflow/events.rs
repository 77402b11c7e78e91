//! Event systems, closure-property security policies and the knowledge of
//! a low-security observer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::InfoflowError;

pub type Trace = Vec<String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    L,
    H,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::L => "L",
            Level::H => "H",
        })
    }
}

/// Whether an event is an input, an output or neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventClass {
    Input,
    Output,
    Internal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventInfo {
    pub level: Level,
    pub class: EventClass,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventSystem {
    pub events: BTreeMap<String, EventInfo>,
    pub traces: BTreeSet<Trace>,
}

/// The subsequence of `trace` made of events satisfying `keep`.
pub fn project(trace: &[String], keep: impl Fn(&str) -> bool) -> Trace {
    trace.iter().filter(|e| keep(e)).cloned().collect()
}

fn merges(a: &[String], b: &[String], prefix: &mut Trace, out: &mut BTreeSet<Trace>) {
    match (a.split_first(), b.split_first()) {
        (None, _) | (_, None) => {
            let mut t = prefix.clone();
            t.extend_from_slice(a);
            t.extend_from_slice(b);
            out.insert(t);
        }
        (Some((x, ra)), Some((y, rb))) => {
            prefix.push(x.clone());
            merges(ra, b, prefix, out);
            prefix.pop();
            prefix.push(y.clone());
            merges(a, rb, prefix, out);
            prefix.pop();
        }
    }
}

/// Every order-preserving merge of a trace of `t` with a trace of `u`.
pub fn interleave(t: &BTreeSet<Trace>, u: &BTreeSet<Trace>) -> BTreeSet<Trace> {
    let mut out = BTreeSet::new();
    for a in t {
        for b in u {
            merges(a, b, &mut Vec::new(), &mut out);
        }
    }
    out
}

/// All sequences over `alphabet` of length at most `max`.
fn sequences(alphabet: &[String], max: usize) -> BTreeSet<Trace> {
    let mut out = BTreeSet::from([Vec::new()]);
    let mut frontier = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &frontier {
            for e in alphabet {
                let mut t: Trace = s.clone();
                t.push(e.clone());
                out.insert(t.clone());
                next.push(t);
            }
        }
        frontier = next;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Seeing the low events never rules out a high subsequence.
    NaiveNoFlow,
    Separability,
    Noninference,
    GeneralizedNoninference,
    GeneralizedNoninterference,
}

impl Policy {
    pub const ALL: [Policy; 5] =
        [Policy::NaiveNoFlow, Policy::Separability, Policy::Noninference, Policy::GeneralizedNoninference, Policy::GeneralizedNoninterference];

    pub fn name(self) -> &'static str {
        match self {
            Policy::NaiveNoFlow => "naive",
            Policy::Separability => "separability",
            Policy::Noninference => "noninference",
            Policy::GeneralizedNoninference => "gen-noninference",
            Policy::GeneralizedNoninterference => "gen-noninterference",
        }
    }

    pub fn from_name(s: &str) -> Option<Policy> {
        Policy::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// Outcome of a policy check. A violation names the traces that witness it:
/// the trace whose closure requirement fails and, where relevant, the
/// trace or sequence that should have had a counterpart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyVerdict {
    pub holds: bool,
    pub witness: Vec<Trace>,
}

impl PolicyVerdict {
    fn holds() -> Self {
        PolicyVerdict { holds: true, witness: Vec::new() }
    }

    fn violated(witness: Vec<Trace>) -> Self {
        PolicyVerdict { holds: false, witness }
    }
}

impl EventSystem {
    pub fn new(events: BTreeMap<String, EventInfo>, traces: BTreeSet<Trace>) -> Result<EventSystem, InfoflowError> {
        if traces.is_empty() {
            return Err(InfoflowError::NoTraces);
        }
        for t in &traces {
            if let Some(e) = t.iter().find(|e| !events.contains_key(*e)) {
                return Err(InfoflowError::UnknownEvent(e.clone()));
            }
        }
        Ok(EventSystem { events, traces })
    }

    pub fn level(&self, e: &str) -> Level {
        self.events[e].level
    }

    fn is(&self, e: &str, level: Level) -> bool {
        self.events.get(e).is_some_and(|i| i.level == level)
    }

    fn is_high_input(&self, e: &str) -> bool {
        self.events.get(e).is_some_and(|i| i.level == Level::H && i.class == EventClass::Input)
    }

    pub fn low(&self, t: &[String]) -> Trace {
        project(t, |e| self.is(e, Level::L))
    }

    pub fn high(&self, t: &[String]) -> Trace {
        project(t, |e| self.is(e, Level::H))
    }

    fn longest(&self) -> usize {
        self.traces.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn check(&self, policy: Policy) -> PolicyVerdict {
        match policy {
            Policy::NaiveNoFlow => self.naive(),
            Policy::Separability => self.separability(),
            Policy::Noninference => self.noninference(|s, e| s.is(e, Level::H)),
            Policy::GeneralizedNoninference => self.noninference(|s, e| s.is_high_input(e)),
            Policy::GeneralizedNoninterference => self.gen_noninterference(),
        }
    }

    fn naive(&self) -> PolicyVerdict {
        let all_high: BTreeSet<Trace> = self.traces.iter().map(|t| self.high(t)).collect();
        for t in &self.traces {
            let low = self.low(t);
            let seen: BTreeSet<Trace> = self.traces.iter().filter(|u| self.low(u) == low).map(|u| self.high(u)).collect();
            if seen != all_high {
                let missing = all_high.difference(&seen).next().cloned().unwrap_or_default();
                return PolicyVerdict::violated(vec![t.clone(), missing]);
            }
        }
        PolicyVerdict::holds()
    }

    fn separability(&self) -> PolicyVerdict {
        let pairs: BTreeSet<(Trace, Trace)> = self.traces.iter().map(|t| (self.low(t), self.high(t))).collect();
        for t1 in &self.traces {
            for t2 in &self.traces {
                if !pairs.contains(&(self.low(t1), self.high(t2))) {
                    return PolicyVerdict::violated(vec![t1.clone(), t2.clone()]);
                }
            }
        }
        PolicyVerdict::holds()
    }

    /// Every trace has a low twin free of the events `hidden` selects.
    fn noninference(&self, hidden: impl Fn(&Self, &str) -> bool) -> PolicyVerdict {
        for t in &self.traces {
            let low = self.low(t);
            let twin = self.traces.iter().any(|u| self.low(u) == low && u.iter().all(|e| !hidden(self, e)));
            if !twin {
                return PolicyVerdict::violated(vec![t.clone()]);
            }
        }
        PolicyVerdict::holds()
    }

    /// High inputs may be inserted anywhere into the low view of a trace.
    /// Insertions are bounded so that the result is no longer than the
    /// longest trace of the system.
    fn gen_noninterference(&self) -> PolicyVerdict {
        let high_inputs: Vec<String> = self.events.keys().filter(|e| self.is_high_input(e)).cloned().collect();
        let longest = self.longest();
        let visible = |t: &[String]| project(t, |e| self.is(e, Level::L) || self.is_high_input(e));
        let realized: BTreeSet<(Trace, Trace)> = self.traces.iter().map(|t| (self.low(t), visible(t))).collect();
        for t in &self.traces {
            let low = self.low(t);
            let inserts = sequences(&high_inputs, longest.saturating_sub(low.len()));
            for wanted in interleave(&inserts, &BTreeSet::from([low.clone()])) {
                if !realized.contains(&(low.clone(), wanted.clone())) {
                    return PolicyVerdict::violated(vec![t.clone(), wanted]);
                }
            }
        }
        PolicyVerdict::holds()
    }

    /// Traces the low observer cannot tell apart from `t`.
    pub fn knowledge_set(&self, t: &[String]) -> Result<BTreeSet<Trace>, InfoflowError> {
        if !self.traces.contains(t) {
            return Err(InfoflowError::NotATrace(t.join(",")));
        }
        let low = self.low(t);
        Ok(self.traces.iter().filter(|u| self.low(u) == low).cloned().collect())
    }

    /// Traces at which the low observer knows `p`.
    pub fn knows_set(&self, p: &BTreeSet<Trace>) -> BTreeSet<Trace> {
        let mut by_view: BTreeMap<Trace, bool> = BTreeMap::new();
        for t in &self.traces {
            *by_view.entry(self.low(t)).or_insert(true) &= p.contains(t);
        }
        self.traces.iter().filter(|t| by_view[&self.low(t)]).cloned().collect()
    }

    /// Traces in which `e` occurs.
    pub fn occurs(&self, e: &str) -> BTreeSet<Trace> {
        self.traces.iter().filter(|t| t.iter().any(|x| x == e)).cloned().collect()
    }
}

/// Reads an event system: an `events:` header listing `name:level:class`
/// entries (level `L` or `H`, class `I`, `O` or `N`), then one trace per
/// line with comma-separated events. An empty line or `<>` is the empty
/// trace; lines starting with `#` are comments.
pub fn parse_event_system(text: &str) -> Result<EventSystem, InfoflowError> {
    let mut events = BTreeMap::new();
    let mut traces = BTreeSet::new();
    let mut header = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        let syntax = |message: String| InfoflowError::Syntax { line, message };
        if l.starts_with('#') {
            continue;
        }
        if !header {
            if l.is_empty() {
                continue;
            }
            let Some(list) = l.strip_prefix("events:") else {
                return Err(syntax("expected `events:` header".into()));
            };
            for entry in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let parts: Vec<&str> = entry.split(':').map(str::trim).collect();
                let [name, level, class] = parts.as_slice() else {
                    return Err(syntax(format!("expected name:level:class, found `{entry}`")));
                };
                let level = match *level {
                    "L" => Level::L,
                    "H" => Level::H,
                    other => return Err(syntax(format!("unknown level `{other}`"))),
                };
                let class = match *class {
                    "I" => EventClass::Input,
                    "O" => EventClass::Output,
                    "N" => EventClass::Internal,
                    other => return Err(syntax(format!("unknown class `{other}`"))),
                };
                if events.insert(name.to_string(), EventInfo { level, class }).is_some() {
                    return Err(syntax(format!("event `{name}` declared twice")));
                }
            }
            header = true;
            continue;
        }
        if l.is_empty() || l == "<>" {
            traces.insert(Vec::new());
            continue;
        }
        let t: Trace = l.split(',').map(|e| e.trim().to_string()).collect();
        if t.iter().any(String::is_empty) {
            return Err(syntax("empty event name".into()));
        }
        if let Some(e) = t.iter().find(|e| !events.contains_key(*e)) {
            return Err(syntax(format!("undeclared event `{e}`")));
        }
        traces.insert(t);
    }
    if !header {
        return Err(InfoflowError::Syntax { line: 1, message: "missing `events:` header".into() });
    }
    EventSystem::new(events, traces)
}

pub fn show_trace(t: &[String]) -> String {
    format!("<{}>", t.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(s: &str) -> Trace {
        if s.is_empty() {
            Vec::new()
        } else {
            s.split(',').map(str::to_string).collect()
        }
    }

    fn set(items: &[&str]) -> BTreeSet<Trace> {
        items.iter().map(|s| tr(s)).collect()
    }

    #[test]
    fn projection_filters_in_order() {
        assert_eq!(project(&tr("h,l,h"), |e| e == "l"), tr("l"));
        assert_eq!(project(&tr(""), |_| true), tr(""));
    }

    #[test]
    fn interleavings() {
        assert_eq!(interleave(&set(&["a"]), &set(&["b"])), set(&["a,b", "b,a"]));
        assert_eq!(interleave(&set(&[""]), &set(&["x,y"])), set(&["x,y"]));
        assert_eq!(interleave(&set(&["a,b"]), &set(&["c"])).len(), 3);
    }

    #[test]
    fn parses_header_and_traces() {
        let es = parse_event_system("events: h:H:I, l:L:O\n\nh,l\n<>\n").unwrap();
        assert_eq!(es.traces, set(&["", "h,l"]));
        assert_eq!(es.level("h"), Level::H);
        assert!(parse_event_system("events: h:H:I\nx\n").is_err());
        assert!(parse_event_system("h\n").is_err());
    }
}
