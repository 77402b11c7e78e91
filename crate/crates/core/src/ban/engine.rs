//! Forward-chaining saturation under rules R1 to R8, with proof trees.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::formula::{Ban, Step};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// An initial assumption.
    Premise,
    /// The receiver of step `n` (counting from 0) sees its payload.
    StepSees(usize),
    /// Message meaning: a believed shared key and a ciphertext under it
    /// that the receiver did not make give `B said F`.
    R1,
    /// A component of something said was said.
    R2,
    /// Nonce verification: fresh and said give believes.
    R3,
    /// Jurisdiction.
    R4,
    /// A component of something seen is seen.
    R5,
    /// Decryption with a believed shared key.
    R6,
    /// A tuple with a fresh component is fresh.
    R7,
    /// A component of something believed by another agent, at any nesting.
    R8,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Premise => write!(f, "premise"),
            Rule::StepSees(n) => write!(f, "step-sees {}", n + 1),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub conclusion: Ban,
    pub rule: Rule,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    /// Rules used, each once, in the order the proof first applies them
    /// (children before parents).
    pub fn rules(&self) -> Vec<Rule> {
        fn walk(t: &ProofTree, out: &mut Vec<Rule>) {
            for c in &t.children {
                walk(c, out);
            }
            if !out.contains(&t.rule) {
                out.push(t.rule);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ProofTree::size).sum::<usize>()
    }

    /// Checks every node against its rule, independently of the engine.
    pub fn validate(&self, initial: &[Ban], steps: &[Step]) -> Result<(), String> {
        for c in &self.children {
            c.validate(initial, steps)?;
        }
        let premises: Vec<&Ban> = self.children.iter().map(|c| &c.conclusion).collect();
        if rule_yields(self.rule, &premises, &self.conclusion, initial, steps) {
            Ok(())
        } else {
            Err(format!("{} does not follow by {} from [{}]", self.conclusion, self.rule, premises.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("; ")))
        }
    }

    fn render(&self, indent: usize, out: &mut String) {
        out.push_str(&format!("{}{}  [{}]\n", "  ".repeat(indent), self.conclusion, self.rule));
        for c in &self.children {
            c.render(indent + 1, out);
        }
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(&s)
    }
}

/// Whether `conclusion` follows from `premises` (in the order the engine
/// records them) by one application of `rule`.
fn rule_yields(rule: Rule, premises: &[&Ban], conclusion: &Ban, initial: &[Ban], steps: &[Step]) -> bool {
    use Ban::*;
    match (rule, premises) {
        (Rule::Premise, []) => initial.contains(conclusion),
        (Rule::StepSees(n), []) => steps.get(n).is_some_and(|s| *conclusion == Ban::sees(&s.receiver, s.payload.clone())),
        (Rule::R1 | Rule::R6, [Believes(a, key), Sees(a2, enc)]) => {
            let (SharedKey(_, k, _), EncBy(body, k2, signer)) = (&**key, &**enc) else { return false };
            let Some(b) = key.partner(a) else { return false };
            if a != a2 || k != k2 || signer.as_deref() == Some(a.as_str()) {
                return false;
            }
            let expected = if rule == Rule::R1 { Ban::believes(a, Ban::said(b, (**body).clone())) } else { Ban::sees(a, (**body).clone()) };
            *conclusion == expected
        }
        (Rule::R2, [Believes(a, said)]) => match (&**said, conclusion) {
            (Said(b, t), Believes(a2, c)) => {
                a == a2 && matches!(&**t, Tup(items) if items.iter().any(|i| **c == Ban::said(b, i.clone())))
            }
            _ => false,
        },
        (Rule::R3, [Believes(a, fresh), Believes(a2, said)]) => match (&**fresh, &**said) {
            (Fresh(f), Said(b, g)) => a == a2 && f == g && *conclusion == Ban::believes(a, Ban::believes(b, (**f).clone())),
            _ => false,
        },
        (Rule::R4, [Believes(a, ctl), Believes(a2, bel)]) => match (&**ctl, &**bel) {
            (Controls(b, f), Believes(b2, g)) => a == a2 && b == b2 && f == g && *conclusion == Ban::believes(a, (**f).clone()),
            _ => false,
        },
        (Rule::R5, [Sees(a, t)]) => matches!(&**t, Tup(items) if items.iter().any(|i| *conclusion == Ban::sees(a, i.clone()))),
        (Rule::R7, [Believes(a, fresh)]) => match (&**fresh, conclusion) {
            (Fresh(f), Believes(a2, c)) => match &**c {
                Fresh(t) => a == a2 && t != f && matches!(&**t, Tup(_)) && f.components().iter().all(|x| t.components().contains(x)),
                _ => false,
            },
            _ => false,
        },
        (Rule::R8, [p]) => {
            // Peel matching belief prefixes, which must be at least two deep.
            let (mut x, mut y, mut levels) = (*p, conclusion, 0);
            while let (Believes(i, f), Believes(j, g)) = (x, y) {
                if i != j {
                    return false;
                }
                x = f;
                y = g;
                levels += 1;
            }
            levels >= 2 && matches!(x, Tup(items) if items.contains(y))
        }
        _ => false,
    }
}

#[derive(Clone, Debug)]
struct Derived {
    formula: Ban,
    rule: Rule,
    premises: Vec<usize>,
}

/// The closure of some assumptions and steps under the rules.
#[derive(Clone, Debug)]
pub struct Saturation {
    facts: Vec<Derived>,
    index: HashMap<Ban, usize>,
    /// Formulas a rule would have produced beyond the nesting bound.
    beyond_depth: BTreeSet<Ban>,
    depth: usize,
    tuples: Vec<Ban>,
}

impl Saturation {
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, f: &Ban) -> bool {
        self.index.contains_key(f)
    }

    /// Derived formulas with their rules, in derivation order.
    pub fn formulas(&self) -> impl Iterator<Item = (&Ban, Rule)> {
        self.facts.iter().map(|d| (&d.formula, d.rule))
    }

    /// Position of `f` in derivation order.
    pub fn position(&self, f: &Ban) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn beyond_depth(&self) -> &BTreeSet<Ban> {
        &self.beyond_depth
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn proof(&self, goal: &Ban) -> Option<ProofTree> {
        self.index.get(goal).map(|&i| self.tree(i))
    }

    fn tree(&self, i: usize) -> ProofTree {
        let d = &self.facts[i];
        ProofTree { conclusion: d.formula.clone(), rule: d.rule, children: d.premises.iter().map(|&p| self.tree(p)).collect() }
    }

    fn add(&mut self, formula: Ban, rule: Rule, premises: Vec<usize>) -> bool {
        if self.index.contains_key(&formula) {
            return false;
        }
        if formula.belief_depth() > self.depth {
            self.beyond_depth.insert(formula);
            return false;
        }
        self.index.insert(formula.clone(), self.facts.len());
        self.facts.push(Derived { formula, rule, premises });
        true
    }

    fn lookup(&self, f: &Ban) -> Option<usize> {
        self.index.get(f).copied()
    }

    /// Consequences of fact `i` together with facts already present.
    fn consequences(&self, i: usize, out: &mut Vec<(Ban, Rule, Vec<usize>)>) {
        use Ban::*;
        let f = &self.facts[i].formula;
        match f {
            Believes(a, inner) => match &**inner {
                Fresh(g) => {
                    for t in &self.tuples {
                        if t != &**g && g.components().iter().all(|x| t.components().contains(x)) {
                            out.push((Ban::believes(a, Ban::fresh(t.clone())), Rule::R7, vec![i]));
                        }
                    }
                }
                Said(b, g) => {
                    if let Tup(items) = &**g {
                        for c in items {
                            out.push((Ban::believes(a, Ban::said(b, c.clone())), Rule::R2, vec![i]));
                        }
                    }
                    if let Some(j) = self.lookup(&Ban::believes(a, Ban::fresh((**g).clone()))) {
                        out.push((Ban::believes(a, Ban::believes(b, (**g).clone())), Rule::R3, vec![j, i]));
                    }
                }
                Believes(b, g) => {
                    let mut chain = vec![a.as_str(), b.as_str()];
                    let mut body: &Ban = g;
                    while let Believes(c, h) = body {
                        chain.push(c);
                        body = h;
                    }
                    if let Tup(items) = body {
                        for c in items {
                            let wrapped = chain.iter().rev().fold(c.clone(), |acc, who| Ban::believes(who, acc));
                            out.push((wrapped, Rule::R8, vec![i]));
                        }
                    }
                    if let Some(j) = self.lookup(&Ban::believes(a, Ban::controls(b, (**g).clone()))) {
                        out.push((Ban::believes(a, (**g).clone()), Rule::R4, vec![j, i]));
                    }
                }
                _ => {}
            },
            Sees(a, inner) => match &**inner {
                Tup(items) => {
                    for c in items {
                        out.push((Ban::sees(a, c.clone()), Rule::R5, vec![i]));
                    }
                }
                EncBy(body, k, signer) if signer.as_deref() != Some(a.as_str()) => {
                    for (j, d) in self.facts.iter().enumerate() {
                        let Believes(a2, key) = &d.formula else { continue };
                        let (SharedKey(_, k2, _), Some(b)) = (&**key, key.partner(a)) else { continue };
                        if a2 == a && k2 == k {
                            out.push((Ban::believes(a, Ban::said(b, (**body).clone())), Rule::R1, vec![j, i]));
                            out.push((Ban::sees(a, (**body).clone()), Rule::R6, vec![j, i]));
                        }
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }

    fn close(&mut self) {
        let mut done = 0;
        while done < self.facts.len() {
            let mut found = Vec::new();
            let end = self.facts.len();
            for i in done..end {
                self.consequences(i, &mut found);
            }
            // Earlier facts may now combine with the new ones.
            for i in 0..done {
                self.consequences(i, &mut found);
            }
            done = end;
            for (f, rule, premises) in found {
                self.add(f, rule, premises);
            }
        }
    }
}

fn tuples_of<'a>(items: impl IntoIterator<Item = &'a Ban>) -> Vec<Ban> {
    let mut set = BTreeSet::new();
    for f in items {
        f.for_each(&mut |g| {
            if matches!(g, Ban::Tup(_)) {
                set.insert(g.clone());
            }
        });
    }
    set.into_iter().collect()
}

/// Closes `initial` under the rules, then, step by step, adds what each
/// receiver sees and closes again. Formulas with more than `depth` nested
/// beliefs are not generated.
pub fn saturate(initial: &[Ban], steps: &[Step], depth: usize) -> Saturation {
    let tuples = tuples_of(initial.iter().chain(steps.iter().map(|s| &s.payload)));
    let mut sat = Saturation { facts: Vec::new(), index: HashMap::new(), beyond_depth: BTreeSet::new(), depth, tuples };
    for f in initial {
        sat.add(f.clone(), Rule::Premise, Vec::new());
    }
    sat.close();
    for (n, s) in steps.iter().enumerate() {
        sat.add(Ban::sees(&s.receiver, s.payload.clone()), Rule::StepSees(n), Vec::new());
        sat.close();
    }
    sat
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofOutcome {
    Proved(ProofTree),
    NotDerived {
        /// Size of the saturated set.
        facts: usize,
        /// Formulas left out because of the nesting bound.
        beyond_depth: usize,
    },
}

/// Proof of `goal`, or why there is none.
pub fn prove(initial: &[Ban], steps: &[Step], goal: &Ban, depth: usize) -> ProofOutcome {
    let sat = saturate(initial, steps, depth);
    match sat.proof(goal) {
        Some(tree) => ProofOutcome::Proved(tree),
        None => ProofOutcome::NotDerived { facts: sat.len(), beyond_depth: sat.beyond_depth.len() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kab() -> Ban {
        Ban::shared_key("A", "k", "B")
    }

    #[test]
    fn own_ciphertexts_teach_nothing() {
        let initial = vec![Ban::believes("A", kab())];
        let steps = vec![Step { sender: "B".into(), receiver: "A".into(), payload: Ban::enc(Ban::msg("x"), "k", Some("A")) }];
        let sat = saturate(&initial, &steps, 3);
        assert!(!sat.contains(&Ban::believes("A", Ban::said("B", Ban::msg("x")))));
        assert!(!sat.contains(&Ban::sees("A", Ban::msg("x"))));
    }

    #[test]
    fn keys_believed_by_jurisdiction_open_ciphertexts() {
        let steps = vec![
            Step { sender: "B".into(), receiver: "A".into(), payload: Ban::enc(Ban::msg("x"), "k", None) },
        ];
        let initial = vec![Ban::believes("A", Ban::controls("S", kab())), Ban::believes("A", Ban::believes("S", kab()))];
        let sat = saturate(&initial, &steps, 3);
        assert!(sat.contains(&Ban::believes("A", Ban::said("B", Ban::msg("x")))));
    }

    #[test]
    fn deep_beliefs_split_at_every_level() {
        let t = Ban::tuple([Ban::msg("x"), Ban::msg("y")]);
        let initial = vec![Ban::believes("A", Ban::believes("B", Ban::believes("C", t)))];
        let sat = saturate(&initial, &[], 3);
        let goal = Ban::believes("A", Ban::believes("B", Ban::believes("C", Ban::msg("y"))));
        let tree = sat.proof(&goal).unwrap();
        assert_eq!(tree.rule, Rule::R8);
        tree.validate(&initial, &[]).unwrap();
    }

    #[test]
    fn validation_rejects_wrong_rules() {
        let bad = ProofTree { conclusion: Ban::msg("x"), rule: Rule::R5, children: vec![] };
        assert!(bad.validate(&[], &[]).is_err());
    }
}
