//! Instantiating and matching role templates against concrete terms.

use std::collections::{BTreeMap, BTreeSet};

use crate::protocol::{Sort, Tpl};
use crate::term::{KeyKind, Knowledge, Term};

/// Local state of one role instance: how far it got and what it bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Local {
    pub pc: usize,
    pub roles: BTreeMap<String, String>,
    pub vars: BTreeMap<String, Term>,
    pub blobs: BTreeMap<usize, Term>,
}

pub(crate) fn shared_key(a: &str, b: &str) -> Term {
    Term::shared_key(format!("{a}{b}"))
}

/// Builds the concrete message for `p`; `None` if something is unbound.
pub(crate) fn build(p: &Tpl, loc: &Local) -> Option<Term> {
    Some(match p {
        Tpl::Role(r) => Term::agent(loc.roles.get(r)?.clone()),
        Tpl::Var(v, _) => loc.vars.get(v)?.clone(),
        Tpl::Blob(i) => loc.blobs.get(i)?.clone(),
        Tpl::Const(t) => t.clone(),
        Tpl::SharedKey(a, b) => shared_key(loc.roles.get(a)?, loc.roles.get(b)?),
        Tpl::PublicKey(r) => Term::public_key(loc.roles.get(r)?.clone()),
        Tpl::PrivateKey(r) => Term::private_key(loc.roles.get(r)?.clone()),
        Tpl::Pair(a, b) => Term::pair(build(a, loc)?, build(b, loc)?),
        Tpl::Enc(a, b) => Term::enc(build(a, loc)?, build(b, loc)?),
    })
}

/// Name of an atom, or `None` for composite terms.
pub(crate) fn atom_id(t: &Term) -> Option<&str> {
    match t {
        Term::Agent(n) | Term::Nonce(n) | Term::Key(n, _) | Term::Text(n) => Some(n),
        _ => None,
    }
}

/// A fresh value may only fill the variable it was generated for; values
/// not tied to a protocol variable (the attacker's own) fit anywhere.
pub(crate) fn fits(var: &str, value: &Term) -> bool {
    match atom_id(value).and_then(|id| id.split_once('#')) {
        Some((origin, _)) => origin == var,
        None => true,
    }
}

/// Structural type check of a term against a template, ignoring bindings.
pub(crate) fn shape_fits(p: &Tpl, t: &Term) -> bool {
    match (p, t) {
        (Tpl::Role(_), Term::Agent(_)) => true,
        (Tpl::Var(v, s), _) => Sort::of(t) == Some(*s) && fits(v, t),
        (Tpl::Blob(_), Term::Enc(..)) => true,
        (Tpl::Const(c), _) => c == t,
        (Tpl::SharedKey(..), Term::Key(_, KeyKind::Shared)) => true,
        (Tpl::PublicKey(_), Term::Key(_, KeyKind::Public)) => true,
        (Tpl::PrivateKey(_), Term::Key(_, KeyKind::Private)) => true,
        (Tpl::Pair(a, b), Term::Pair(x, y)) | (Tpl::Enc(a, b), Term::Enc(x, y)) => shape_fits(a, x) && shape_fits(b, y),
        _ => false,
    }
}

/// Domain of each open symbol: the concrete nonces it may still stand for.
pub type Domains = BTreeMap<Term, BTreeSet<Term>>;

/// Symbols are placeholders for nonces the attacker supplies; which nonce
/// is decided only once an honest agent compares it with something.
pub fn is_symbol(t: &Term) -> bool {
    matches!(t, Term::Nonce(n) if n.starts_with('?'))
}

fn has_symbol(t: &Term) -> bool {
    let mut found = false;
    t.for_each_subterm(&mut |s| found |= is_symbol(s));
    found
}

pub(crate) fn symbol(var: &str, inst: usize) -> Term {
    Term::nonce(format!("?{var}@{inst}"))
}

/// Decisions about symbols taken while matching one message.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Unifier {
    pub subst: BTreeMap<Term, Term>,
    /// New symbols and narrowed domains.
    pub domains: Domains,
}

impl Unifier {
    fn resolve_atom(&self, t: &Term) -> Term {
        let mut cur = t;
        while let Some(next) = self.subst.get(cur) {
            cur = next;
        }
        cur.clone()
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.subst.is_empty() {
            return t.clone();
        }
        t.map_atoms(&mut |a| self.resolve_atom(a))
    }

    /// Resolved symbols with their final values.
    pub fn resolved(&self) -> Vec<(Term, Term)> {
        self.subst.keys().map(|k| (k.clone(), self.resolve_atom(k))).collect()
    }
}

pub(crate) type Cand = (Local, Unifier);

/// Derivability where open symbols count as known: the attacker chose them.
pub(crate) fn derivable(k: &Knowledge, t: &Term) -> bool {
    if is_symbol(t) || k.derives(t) {
        return true;
    }
    match t {
        Term::Pair(a, b) | Term::Enc(a, b) => derivable(k, a) && derivable(k, b),
        _ => false,
    }
}

/// Matching context for one instance.
pub(crate) struct Matcher<'a> {
    /// Agents that may be bound to an ordinary role.
    pub ordinary: &'a [String],
    pub shapes: &'a [Tpl],
    pub symbols: &'a Domains,
    pub inst: usize,
}

impl Matcher<'_> {
    fn role_ok(&self, loc: &Local, agent: &str) -> bool {
        self.ordinary.iter().any(|a| a == agent) && !loc.roles.values().any(|b| b == agent)
    }

    fn bind_role(&self, r: &str, agent: &str, (mut loc, u): Cand) -> Option<Cand> {
        match loc.roles.get(r) {
            Some(b) => (b == agent).then_some((loc, u)),
            None => {
                if self.role_ok(&loc, agent) {
                    loc.roles.insert(r.to_string(), agent.to_string());
                    Some((loc, u))
                } else {
                    None
                }
            }
        }
    }

    fn domain(&self, x: &Term, u: &Unifier) -> BTreeSet<Term> {
        u.domains.get(x).or_else(|| self.symbols.get(x)).cloned().unwrap_or_default()
    }

    fn assign(&self, x: &Term, value: &Term, u: &mut Unifier) -> bool {
        if !self.domain(x, u).contains(value) {
            return false;
        }
        u.domains.remove(x);
        u.subst.insert(x.clone(), value.clone());
        true
    }

    /// Makes `a` and `b` equal by resolving symbols, if possible.
    fn unify(&self, a: &Term, b: &Term, u: &mut Unifier) -> bool {
        match (a, b) {
            (Term::Pair(a1, a2), Term::Pair(b1, b2)) | (Term::Enc(a1, a2), Term::Enc(b1, b2)) => self.unify(a1, b1, u) && self.unify(a2, b2, u),
            (Term::Pair(..) | Term::Enc(..), _) | (_, Term::Pair(..) | Term::Enc(..)) => false,
            _ => {
                let (a, b) = (u.resolve_atom(a), u.resolve_atom(b));
                if a == b {
                    return true;
                }
                match (is_symbol(&a), is_symbol(&b)) {
                    (false, false) => false,
                    (true, false) => self.assign(&a, &b, u),
                    (false, true) => self.assign(&b, &a, u),
                    (true, true) => {
                        let (x, y) = if a < b { (a, b) } else { (b, a) };
                        let d: BTreeSet<Term> = self.domain(&x, u).intersection(&self.domain(&y, u)).cloned().collect();
                        if d.is_empty() {
                            return false;
                        }
                        u.domains.remove(&y);
                        u.subst.insert(y, x.clone());
                        u.domains.insert(x, d);
                        true
                    }
                }
            }
        }
    }

    /// Binds variable `v` to the (atomic) value `t` if the type allows it.
    fn bind_var(&self, v: &str, s: Sort, t: &Term, (mut loc, mut u): Cand) -> Option<Cand> {
        let t = u.resolve_atom(t);
        if Sort::of(&t) != Some(s) {
            return None;
        }
        if is_symbol(&t) {
            let d = self.domain(&t, &u);
            let narrowed: BTreeSet<Term> = d.iter().filter(|c| fits(v, c)).cloned().collect();
            if narrowed.is_empty() {
                return None;
            }
            if narrowed.len() < d.len() {
                u.domains.insert(t.clone(), narrowed);
            }
        } else if !fits(v, &t) {
            return None;
        }
        loc.vars.insert(v.to_string(), t);
        Some((loc, u))
    }

    fn unify_with(&self, expected: &Term, t: &Term, (loc, mut u): Cand) -> Vec<Cand> {
        if self.unify(expected, t, &mut u) {
            vec![(loc, u)]
        } else {
            vec![]
        }
    }

    /// All extensions of `cand` under which `p` instantiates to `t`.
    pub fn matches(&self, p: &Tpl, t: &Term, cand: Cand) -> Vec<Cand> {
        match p {
            Tpl::Role(r) => match t {
                Term::Agent(a) => self.bind_role(r, a, cand).into_iter().collect(),
                _ => vec![],
            },
            Tpl::Var(v, s) => match cand.0.vars.get(v).cloned() {
                Some(val) => self.unify_with(&val, t, cand),
                None => self.bind_var(v, *s, t, cand).into_iter().collect(),
            },
            Tpl::Blob(i) => match cand.0.blobs.get(i).cloned() {
                Some(val) => self.unify_with(&val, t, cand),
                None => {
                    if self.shapes.get(*i).map_or(matches!(t, Term::Enc(..)), |s| shape_fits(s, t)) {
                        let (mut loc, u) = cand;
                        loc.blobs.insert(*i, t.clone());
                        vec![(loc, u)]
                    } else {
                        vec![]
                    }
                }
            },
            Tpl::Const(c) => self.unify_with(c, t, cand),
            Tpl::SharedKey(r1, r2) => {
                let Term::Key(id, KeyKind::Shared) = t else { return vec![] };
                let mut out = Vec::new();
                let firsts: Vec<String> = match cand.0.roles.get(r1) {
                    Some(a) => vec![a.clone()],
                    None => self.ordinary.to_vec(),
                };
                for a in firsts {
                    let Some(rest) = id.strip_prefix(a.as_str()) else { continue };
                    if let Some(c) = self.bind_role(r1, &a, cand.clone()).and_then(|c| self.bind_role(r2, rest, c)) {
                        out.push(c);
                    }
                }
                out
            }
            Tpl::PublicKey(r) | Tpl::PrivateKey(r) => {
                let want = if matches!(p, Tpl::PublicKey(_)) { KeyKind::Public } else { KeyKind::Private };
                match t {
                    Term::Key(id, kind) if *kind == want => self.bind_role(r, id, cand).into_iter().collect(),
                    _ => vec![],
                }
            }
            Tpl::Pair(a, b) => match t {
                Term::Pair(x, y) => self.matches(a, x, cand).into_iter().flat_map(|c| self.matches(b, y, c)).collect(),
                _ => vec![],
            },
            Tpl::Enc(a, b) => match t {
                Term::Enc(x, y) => self.matches(b, y, cand).into_iter().flat_map(|c| self.matches(a, x, c)).collect(),
                _ => vec![],
            },
        }
    }

    /// Messages the attacker can derive that `p` accepts, each with the
    /// bindings it induces. `depth` bounds how many encryptions the attacker
    /// nests when building a message itself. Nonces the attacker picks
    /// freely are left open as symbols.
    pub fn solve(&self, p: &Tpl, cand: Cand, k: &Knowledge, depth: usize) -> Vec<(Term, Cand)> {
        let mut out: BTreeSet<(Term, Cand)> = BTreeSet::new();
        self.solve_into(p, cand, k, depth, &mut out);
        out.into_iter().collect()
    }

    fn solve_into(&self, p: &Tpl, cand: Cand, k: &Knowledge, depth: usize, out: &mut BTreeSet<(Term, Cand)>) {
        let loc = &cand.0;
        match p {
            Tpl::Pair(a, b) => {
                // Concrete replays are already covered by symbol domains; only
                // reusing an open symbol needs the whole term.
                for c in k.analyzed() {
                    if matches!(c, Term::Pair(..)) && has_symbol(c) {
                        for m in self.matches(p, c, cand.clone()) {
                            out.insert((c.clone(), m));
                        }
                    }
                }
                for (x, c1) in self.solve(a, cand, k, depth) {
                    for (y, c2) in self.solve(b, c1, k, depth) {
                        out.insert((Term::pair(x.clone(), y), c2));
                    }
                }
            }
            Tpl::Enc(a, b) => {
                for c in k.analyzed() {
                    if matches!(c, Term::Enc(..)) {
                        for m in self.matches(p, c, cand.clone()) {
                            out.insert((c.clone(), m));
                        }
                    }
                }
                if depth > 0 {
                    for (key, c1) in self.solve(b, cand, k, depth) {
                        for (body, c2) in self.solve(a, c1, k, depth - 1) {
                            out.insert((Term::enc(body, key.clone()), c2));
                        }
                    }
                }
            }
            Tpl::Role(r) if !loc.roles.contains_key(r) => {
                for a in self.ordinary {
                    if let Some(c) = self.bind_role(r, a, cand.clone()) {
                        out.insert((Term::agent(a.clone()), c));
                    }
                }
            }
            Tpl::Var(v, Sort::Nonce) if !loc.vars.contains_key(v) => {
                let x = symbol(v, self.inst);
                let domain: BTreeSet<Term> =
                    k.analyzed().iter().filter(|t| matches!(t, Term::Nonce(_)) && !is_symbol(t) && fits(v, t)).cloned().collect();
                let (mut loc, mut u) = cand;
                u.domains.insert(x.clone(), domain);
                loc.vars.insert(v.clone(), x.clone());
                out.insert((x, (loc, u)));
            }
            Tpl::Var(v, s) if !loc.vars.contains_key(v) => {
                for t in k.analyzed() {
                    if Sort::of(t) == Some(*s) && fits(v, t) {
                        let mut c = cand.clone();
                        c.0.vars.insert(v.clone(), t.clone());
                        out.insert((t.clone(), c));
                    }
                }
            }
            Tpl::Blob(i) if !loc.blobs.contains_key(i) => {
                for t in k.analyzed() {
                    if let Term::Enc(..) = t {
                        for m in self.matches(p, t, cand.clone()) {
                            out.insert((t.clone(), m));
                        }
                    }
                }
            }
            Tpl::SharedKey(..) | Tpl::PublicKey(_) | Tpl::PrivateKey(_) if build(p, loc).is_none() => {
                for t in k.analyzed() {
                    if matches!(t, Term::Key(..)) {
                        for m in self.matches(p, t, cand.clone()) {
                            out.insert((t.clone(), m));
                        }
                    }
                }
            }
            _ => {
                if let Some(t) = build(p, loc) {
                    let t = cand.1.apply(&t);
                    if derivable(k, &t) {
                        out.insert((t, cand));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{parse_term, TermSet};

    fn tpl_b_recv() -> Tpl {
        // enc(pair(A, nA), pk(B)) as seen by the responder
        Tpl::Enc(
            Box::new(Tpl::Pair(Box::new(Tpl::Role("A".into())), Box::new(Tpl::Var("nA".into(), Sort::Nonce)))),
            Box::new(Tpl::PublicKey("B".into())),
        )
    }

    fn responder() -> Cand {
        let mut l = Local { pc: 0, roles: BTreeMap::new(), vars: BTreeMap::new(), blobs: BTreeMap::new() };
        l.roles.insert("B".into(), "B".into());
        (l, Unifier::default())
    }

    fn ordinary() -> Vec<String> {
        vec!["A".to_string(), "B".to_string(), "I".to_string()]
    }

    #[test]
    fn honest_match_binds_peer_and_nonce() {
        let ordinary = ordinary();
        let none = Domains::new();
        let m = Matcher { ordinary: &ordinary, shapes: &[], symbols: &none, inst: 1 };
        let t = parse_term("enc(pair(A,nA#1#A),pk(B))").unwrap();
        let ls = m.matches(&tpl_b_recv(), &t, responder());
        assert_eq!(ls.len(), 1);
        assert_eq!(ls[0].0.roles["A"], "A");
        assert_eq!(ls[0].0.vars["nA"], Term::nonce("nA#1#A"));
        assert!(m.matches(&tpl_b_recv(), &parse_term("enc(pair(A,nB#1#B),pk(B))").unwrap(), responder()).is_empty());
    }

    #[test]
    fn attacker_candidates_include_replay_and_forgery() {
        let ordinary = ordinary();
        let none = Domains::new();
        let m = Matcher { ordinary: &ordinary, shapes: &[], symbols: &none, inst: 1 };
        let h: TermSet = ["A", "B", "I", "nI", "nA#2#A", "pk(B)", "enc(pair(A,nA#1#A),pk(B))"].iter().map(|s| parse_term(s).unwrap()).collect();
        let k = Knowledge::new(&h);
        let sols = m.solve(&tpl_b_recv(), responder(), &k, 1);
        // the replayed ciphertext plus one forgery per sender name, each with an open nonce
        assert_eq!(sols.len(), 3);
        let forged: Vec<_> = sols.iter().filter(|(t, _)| t.to_string().contains('?')).collect();
        assert_eq!(forged.len(), 2);
        let dom = &forged[0].1 .1.domains[&symbol("nA", 1)];
        assert!(dom.contains(&Term::nonce("nI")) && dom.contains(&Term::nonce("nA#2#A")) && !dom.contains(&Term::nonce("nA#1#A")));
        assert_eq!(m.solve(&tpl_b_recv(), responder(), &k, 0).len(), 1);
    }

    #[test]
    fn symbols_resolve_against_their_domain() {
        let ordinary = ordinary();
        let x = symbol("nB", 3);
        let mut doms = Domains::new();
        doms.insert(x.clone(), [Term::nonce("nI"), Term::nonce("nB#1#B")].into_iter().collect());
        let m = Matcher { ordinary: &ordinary, shapes: &[], symbols: &doms, inst: 2 };
        let mut own = responder();
        own.0.vars.insert("nB".into(), Term::nonce("nB#1#B"));
        let p = Tpl::Var("nB".into(), Sort::Nonce);
        let hit = m.matches(&p, &x, own.clone());
        assert_eq!(hit.len(), 1);
        assert_eq!(hit[0].1.apply(&x), Term::nonce("nB#1#B"));
        own.0.vars.insert("nB".into(), Term::nonce("nB#2#B"));
        assert!(m.matches(&p, &x, own).is_empty());
    }

    #[test]
    fn fresh_values_are_typed_by_origin() {
        assert!(fits("nA", &Term::nonce("nA#2#A")));
        assert!(!fits("nB", &Term::nonce("nA#2#A")));
        assert!(fits("nB", &Term::nonce("nI")));
    }
}
