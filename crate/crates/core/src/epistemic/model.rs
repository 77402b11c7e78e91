//! Explicit-state Kripke models over runs and their evaluation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use super::formula::{Atom, Formula};
use super::EpistemicError;
use crate::term::{analyzed, parse_term, parts, TermSet};

/// A time point on a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub trace: usize,
    pub time: usize,
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(run {}, time {})", self.trace, self.time)
    }
}

/// What one point looks like when it is added to a [`ModelBuilder`].
#[derive(Clone, Debug, Default)]
pub struct PointData {
    /// One observation per agent, in the builder's agent order. Points with
    /// equal observations (and, in synchronous models, equal times) are
    /// indistinguishable to that agent.
    pub observations: Vec<String>,
    /// Atoms true at this point.
    pub facts: BTreeSet<Atom>,
    /// Messages each agent holds, for `part` and `knows`; may be left empty.
    pub messages: Vec<TermSet>,
}

#[derive(Clone, Debug)]
pub struct ModelBuilder {
    agents: Vec<String>,
    runs: Vec<Vec<PointData>>,
    synchronous: bool,
}

impl ModelBuilder {
    /// Adds a run; its first point is an initial point.
    pub fn run(&mut self, points: Vec<PointData>) -> &mut Self {
        assert!(!points.is_empty(), "a run has at least one point");
        for p in &points {
            assert_eq!(p.observations.len(), self.agents.len(), "one observation per agent");
        }
        self.runs.push(points);
        self
    }

    /// Whether an agent always knows the time (the default).
    pub fn synchronous(&mut self, on: bool) -> &mut Self {
        self.synchronous = on;
        self
    }

    pub fn build(&self) -> KripkeModel {
        let mut points = Vec::new();
        let mut traces = Vec::new();
        let mut obs = vec![Vec::new(); self.agents.len()];
        let mut facts = Vec::new();
        let mut messages = vec![Vec::new(); self.agents.len()];
        let mut ids: Vec<HashMap<&str, u32>> = vec![HashMap::new(); self.agents.len()];
        for (r, run) in self.runs.iter().enumerate() {
            let mut ts = Vec::new();
            for (t, p) in run.iter().enumerate() {
                ts.push(points.len());
                points.push(Point { trace: r, time: t });
                for (a, o) in p.observations.iter().enumerate() {
                    let next = ids[a].len() as u32;
                    obs[a].push(*ids[a].entry(o.as_str()).or_insert(next));
                    messages[a].push(Arc::new(p.messages.get(a).cloned().unwrap_or_default()));
                }
                facts.push(p.facts.clone());
            }
            traces.push(ts);
        }
        let initial = traces.iter().map(|t| t[0]).collect();
        KripkeModel { agents: self.agents.clone(), points, traces, obs, facts, messages, initial, synchronous: self.synchronous }
    }
}

#[derive(Clone, Debug)]
pub struct KripkeModel {
    agents: Vec<String>,
    points: Vec<Point>,
    /// Point ids along each run.
    traces: Vec<Vec<usize>>,
    /// Interned observation per agent and point.
    obs: Vec<Vec<u32>>,
    facts: Vec<BTreeSet<Atom>>,
    messages: Vec<Vec<Arc<TermSet>>>,
    initial: Vec<usize>,
    synchronous: bool,
}

impl KripkeModel {
    pub fn builder<S: Into<String>>(agents: impl IntoIterator<Item = S>) -> ModelBuilder {
        ModelBuilder { agents: agents.into_iter().map(Into::into).collect(), runs: Vec::new(), synchronous: true }
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> Point {
        self.points[id]
    }

    /// The id of `p`, if the model has it.
    pub fn id_of(&self, p: Point) -> Option<usize> {
        self.traces.get(p.trace)?.get(p.time).copied()
    }

    pub fn runs(&self) -> &[Vec<usize>] {
        &self.traces
    }

    pub fn initial_points(&self) -> &[usize] {
        &self.initial
    }

    /// The last point of every run.
    pub fn final_points(&self) -> Vec<usize> {
        self.traces.iter().map(|t| *t.last().expect("runs are non-empty")).collect()
    }

    /// Points at `time` (runs shorter than that contribute nothing).
    pub fn points_at(&self, time: usize) -> Vec<usize> {
        self.traces.iter().filter_map(|t| t.get(time).copied()).collect()
    }

    pub fn is_synchronous(&self) -> bool {
        self.synchronous
    }

    pub fn facts(&self, id: usize) -> &BTreeSet<Atom> {
        &self.facts[id]
    }

    pub fn messages(&self, agent: &str, id: usize) -> Option<&TermSet> {
        let a = self.agent_index(agent)?;
        Some(&self.messages[a][id])
    }

    pub fn agent_index(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    fn agent(&self, agent: &str) -> Result<usize, EpistemicError> {
        self.agent_index(agent).ok_or_else(|| EpistemicError::UnknownAgent(agent.to_string()))
    }

    /// Whether `agent` cannot tell points `p` and `q` apart.
    pub fn related(&self, agent: &str, p: usize, q: usize) -> Result<bool, EpistemicError> {
        let a = self.agent(agent)?;
        Ok(self.key(a, p) == self.key(a, q))
    }

    fn key(&self, a: usize, p: usize) -> (u32, usize) {
        (self.obs[a][p], if self.synchronous { self.points[p].time } else { 0 })
    }

    /// The point `n` steps after `p` on its run, or the run's last point.
    pub fn after(&self, p: usize, n: usize) -> usize {
        let Point { trace, time } = self.points[p];
        let run = &self.traces[trace];
        run[(time + n).min(run.len() - 1)]
    }

    /// Whether everything `agent` holds only as an unreadable part could, as
    /// far as the agent can tell, be absent: for each part `m` of its messages
    /// at `p` that it cannot analyze, some indistinguishable point lacks `m`.
    pub fn is_rich(&self, agent: &str) -> Result<bool, EpistemicError> {
        let a = self.agent(agent)?;
        for p in 0..self.len() {
            let held = &self.messages[a][p];
            let known = analyzed(held);
            for m in parts(held).iter().filter(|m| !known.contains(m)) {
                let hidden = (0..self.len()).any(|q| self.key(a, q) == self.key(a, p) && !parts(&self.messages[a][q]).contains(m));
                if !hidden {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Rejects formulas naming agents the model does not have.
    pub fn check_formula(&self, f: &Formula) -> Result<(), EpistemicError> {
        for a in f.agents() {
            self.agent(a)?;
        }
        for atom in f.atoms() {
            if matches!(atom.name.as_str(), "part" | "knows") {
                let [i, m] = atom.args.as_slice() else {
                    return Err(EpistemicError::BadAtom(atom.to_string()));
                };
                self.agent(i)?;
                parse_term(m).map_err(|_| EpistemicError::BadAtom(atom.to_string()))?;
            }
        }
        Ok(())
    }
}

/// Evaluates formulas over a model, remembering the truth set of every
/// subformula it has computed.
pub struct Evaluator<'a> {
    model: &'a KripkeModel,
    memo: HashMap<Formula, Rc<Vec<bool>>>,
    classes: HashMap<usize, Rc<Vec<usize>>>,
    closures: HashMap<(usize, usize), Rc<(TermSet, TermSet)>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a KripkeModel) -> Self {
        Evaluator { model, memo: HashMap::new(), classes: HashMap::new(), closures: HashMap::new() }
    }

    pub fn holds_at(&mut self, id: usize, f: &Formula) -> Result<bool, EpistemicError> {
        Ok(self.truth(f)?[id])
    }

    /// Truth value of `f` at every point, indexed by point id.
    pub fn truth(&mut self, f: &Formula) -> Result<Rc<Vec<bool>>, EpistemicError> {
        if let Some(v) = self.memo.get(f) {
            return Ok(v.clone());
        }
        self.model.check_formula(f)?;
        let n = self.model.len();
        let v: Vec<bool> = match f {
            Formula::True => vec![true; n],
            Formula::False => vec![false; n],
            Formula::Atom(a) => self.atom(a)?,
            Formula::Not(a) => self.truth(a)?.iter().map(|b| !b).collect(),
            Formula::And(a, b) => {
                let (x, y) = (self.truth(a)?, self.truth(b)?);
                x.iter().zip(y.iter()).map(|(p, q)| *p && *q).collect()
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.truth(a)?, self.truth(b)?);
                x.iter().zip(y.iter()).map(|(p, q)| *p || *q).collect()
            }
            Formula::Implies(a, b) => {
                let (x, y) = (self.truth(a)?, self.truth(b)?);
                x.iter().zip(y.iter()).map(|(p, q)| !*p || *q).collect()
            }
            Formula::K(i, a) => self.knowledge(i, a)?,
            Formula::P(i, a) => {
                let dual = Formula::not(Formula::knows(i, Formula::not((**a).clone())));
                self.truth(&dual)?.to_vec()
            }
            Formula::X(k, a) => {
                let x = self.truth(a)?;
                (0..n).map(|p| x[self.model.after(p, *k)]).collect()
            }
        };
        let v = Rc::new(v);
        self.memo.insert(f.clone(), v.clone());
        Ok(v)
    }

    fn class_of(&mut self, a: usize) -> Rc<Vec<usize>> {
        if let Some(c) = self.classes.get(&a) {
            return c.clone();
        }
        let mut ids: HashMap<(u32, usize), usize> = HashMap::new();
        let c: Vec<usize> = (0..self.model.len())
            .map(|p| {
                let next = ids.len();
                *ids.entry(self.model.key(a, p)).or_insert(next)
            })
            .collect();
        let c = Rc::new(c);
        self.classes.insert(a, c.clone());
        c
    }

    fn knowledge(&mut self, agent: &str, f: &Formula) -> Result<Vec<bool>, EpistemicError> {
        let a = self.model.agent(agent)?;
        let x = self.truth(f)?;
        let class = self.class_of(a);
        let count = class.iter().max().map_or(0, |m| m + 1);
        let mut all = vec![true; count];
        for (p, &c) in class.iter().enumerate() {
            all[c] &= x[p];
        }
        Ok(class.iter().map(|&c| all[c]).collect())
    }

    fn closures(&mut self, a: usize, p: usize) -> Rc<(TermSet, TermSet)> {
        self.closures
            .entry((a, p))
            .or_insert_with(|| {
                let held = &self.model.messages[a][p];
                Rc::new((parts(held), analyzed(held)))
            })
            .clone()
    }

    fn atom(&mut self, atom: &Atom) -> Result<Vec<bool>, EpistemicError> {
        let n = self.model.len();
        match atom.name.as_str() {
            name @ ("part" | "knows") => {
                let a = self.model.agent(&atom.args[0])?;
                let m = parse_term(&atom.args[1]).map_err(|_| EpistemicError::BadAtom(atom.to_string()))?;
                Ok((0..n)
                    .map(|p| {
                        let c = self.closures(a, p);
                        if name == "part" { c.0.contains(&m) } else { c.1.contains(&m) }
                    })
                    .collect())
            }
            _ => Ok((0..n).map(|p| self.model.facts[p].contains(atom)).collect()),
        }
    }
}

/// Truth of `f` at point `id` of `model`.
pub fn eval(model: &KripkeModel, id: usize, f: &Formula) -> Result<bool, EpistemicError> {
    Evaluator::new(model).holds_at(id, f)
}

/// Which points a validity check ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum At {
    InitialPoints,
    AllPoints,
    FinalPoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Violated,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Holds => "holds",
            Outcome::Violated => "violated",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validity {
    pub outcome: Outcome,
    /// The first point where the formula fails.
    pub counterexample: Option<Point>,
    /// How many points were checked.
    pub checked: usize,
}

pub fn check_valid(model: &KripkeModel, f: &Formula, at: At) -> Result<Validity, EpistemicError> {
    let points = match at {
        At::InitialPoints => model.initial_points().to_vec(),
        At::AllPoints => (0..model.len()).collect(),
        At::FinalPoints => model.final_points(),
    };
    let truth = Evaluator::new(model).truth(f)?;
    let bad = points.iter().find(|&&p| !truth[p]).map(|&p| model.point(p));
    Ok(Validity {
        outcome: if bad.is_some() { Outcome::Violated } else { Outcome::Holds },
        counterexample: bad,
        checked: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epistemic::parse_formula;

    fn pd(obs: &[&str], facts: &[&str]) -> PointData {
        PointData {
            observations: obs.iter().map(|s| s.to_string()).collect(),
            facts: facts.iter().map(|f| Atom::new::<&str>(f, [])).collect(),
            messages: Vec::new(),
        }
    }

    /// Two runs that agent `a` cannot tell apart, `b` can.
    fn two_runs() -> KripkeModel {
        let mut b = KripkeModel::builder(["a", "b"]);
        b.run(vec![pd(&["x", "1"], &["p"]), pd(&["y", "1"], &["p", "q"])]);
        b.run(vec![pd(&["x", "2"], &[]), pd(&["y", "2"], &["q"])]);
        b.build()
    }

    #[test]
    fn knowledge_follows_observations() {
        let m = two_runs();
        let f = |s: &str| parse_formula(s).unwrap();
        assert!(!eval(&m, 0, &f("K[a] p")).unwrap());
        assert!(eval(&m, 0, &f("K[b] p")).unwrap());
        assert!(eval(&m, 1, &f("K[a] q")).unwrap());
        assert!(eval(&m, 0, &f("P[a] !p")).unwrap());
        assert!(eval(&m, 0, &f("X^1 q")).unwrap());
        assert!(eval(&m, 0, &f("X^9 q")).unwrap());
        assert!(matches!(eval(&m, 0, &f("K[z] p")), Err(EpistemicError::UnknownAgent(_))));
    }

    #[test]
    fn synchronous_models_separate_times() {
        let mut b = KripkeModel::builder(["a"]);
        b.run(vec![pd(&["same"], &["p"]), pd(&["same"], &[])]);
        let sync = b.build();
        assert!(eval(&sync, 0, &parse_formula("K[a] p").unwrap()).unwrap());
        b.synchronous(false);
        let async_model = b.build();
        assert!(!eval(&async_model, 0, &parse_formula("K[a] p").unwrap()).unwrap());
    }

    #[test]
    fn validity_reports_first_failure() {
        let m = two_runs();
        let v = check_valid(&m, &parse_formula("p").unwrap(), At::InitialPoints).unwrap();
        assert_eq!(v.outcome, Outcome::Violated);
        assert_eq!(v.counterexample, Some(Point { trace: 1, time: 0 }));
        let t = check_valid(&m, &parse_formula("p | !p").unwrap(), At::AllPoints).unwrap();
        assert_eq!(t.outcome, Outcome::Holds);
        assert_eq!(t.checked, 4);
    }
}
