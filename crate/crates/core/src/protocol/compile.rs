//! Compilation of a protocol description into per-role programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::parse::fresh_term;
use super::{ProtocolError, ProtocolSpec};
use crate::term::{analyzed, derives, KeyKind, Term, TermSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Nonce,
    Key,
    Text,
}

impl Sort {
    pub fn of(term: &Term) -> Option<Sort> {
        match term {
            Term::Nonce(_) => Some(Sort::Nonce),
            Term::Key(_, KeyKind::Shared) => Some(Sort::Key),
            Term::Text(_) => Some(Sort::Text),
            _ => None,
        }
    }
}

/// A message template as seen by one role.
///
/// `Blob(i)` is a ciphertext the role cannot open; it is bound to whatever
/// it receives at that position and forwarded unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tpl {
    Role(String),
    Var(String, Sort),
    Blob(usize),
    Const(Term),
    SharedKey(String, String),
    PublicKey(String),
    PrivateKey(String),
    Pair(Box<Tpl>, Box<Tpl>),
    Enc(Box<Tpl>, Box<Tpl>),
}

impl fmt::Display for Tpl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tpl::Role(r) => write!(f, "{r}"),
            Tpl::Var(v, _) => write!(f, "{v}"),
            Tpl::Blob(i) => write!(f, "_blob{i}"),
            Tpl::Const(t) => write!(f, "{t}"),
            Tpl::SharedKey(a, b) => write!(f, "k({a}{b})"),
            Tpl::PublicKey(r) => write!(f, "pk({r})"),
            Tpl::PrivateKey(r) => write!(f, "sk({r})"),
            Tpl::Pair(a, b) => write!(f, "pair({a},{b})"),
            Tpl::Enc(a, b) => write!(f, "enc({a},{b})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Send,
    Recv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub step: usize,
    pub kind: ActionKind,
    /// The other role named in the step.
    pub peer: String,
    pub pattern: Tpl,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleProgram {
    pub role: String,
    pub actions: Vec<Action>,
    /// Variables this role generates afresh in every run.
    pub fresh: Vec<(String, Sort)>,
    /// Variables with a fixed initial value.
    pub knows: Vec<(String, Term)>,
    /// The full template behind each blob, used to type-check candidates.
    pub blob_shapes: Vec<Tpl>,
}

impl RoleProgram {
    /// Variables the role has bound after performing `pc` actions.
    pub fn vars_bound_at(&self, pc: usize) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.fresh.iter().map(|(n, _)| n.clone()).collect();
        out.extend(self.knows.iter().map(|(n, _)| n.clone()));
        for a in &self.actions[..pc.min(self.actions.len())] {
            collect_vars(&a.pattern, &mut out);
        }
        out
    }
}

fn collect_vars(t: &Tpl, out: &mut BTreeSet<String>) {
    match t {
        Tpl::Var(v, _) => {
            out.insert(v.clone());
        }
        Tpl::Pair(a, b) | Tpl::Enc(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        _ => {}
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledProtocol {
    pub spec: ProtocolSpec,
    pub programs: BTreeMap<String, RoleProgram>,
}

impl CompiledProtocol {
    pub fn program(&self, role: &str) -> &RoleProgram {
        &self.programs[role]
    }

    /// Sort of a variable name anywhere in the protocol.
    pub fn var_sort(&self, name: &str) -> Option<Sort> {
        self.programs.values().find_map(|p| {
            p.fresh.iter().find(|(n, _)| n == name).map(|(_, s)| *s).or_else(|| {
                p.knows.iter().find(|(n, _)| n == name).and_then(|(_, t)| Sort::of(t))
            })
        })
    }
}

/// Compiles every role of `spec`, checking that each role can build what it
/// sends from what it knows and has received.
pub fn compile(spec: &ProtocolSpec) -> Result<CompiledProtocol, ProtocolError> {
    let ctx = Ctx::new(spec);
    let mut programs = BTreeMap::new();
    for role in spec.all_roles() {
        programs.insert(role.clone(), ctx.compile_role(role)?);
    }
    Ok(CompiledProtocol { spec: spec.clone(), programs })
}

struct Ctx<'a> {
    spec: &'a ProtocolSpec,
    /// Declared fresh or initially known names, with their template term.
    declared: BTreeMap<String, Term>,
    public_constants: TermSet,
}

impl<'a> Ctx<'a> {
    fn new(spec: &'a ProtocolSpec) -> Self {
        let mut declared = BTreeMap::new();
        for names in spec.fresh.values() {
            for n in names {
                declared.insert(n.clone(), fresh_term(n));
            }
        }
        for terms in spec.knows.values() {
            for t in terms {
                declared.insert(var_name(t), t.clone());
            }
        }
        let mut public_constants = TermSet::new();
        for s in &spec.steps {
            s.message.for_each_subterm(&mut |t| {
                if let Term::Text(n) = t {
                    if !declared.contains_key(&**n) {
                        public_constants.insert(t.clone());
                    }
                }
            });
        }
        Ctx { spec, declared, public_constants }
    }

    /// Rewrites `k(AS)` to the declared name of that key.
    fn normalize(&self, t: &Term) -> Term {
        t.map_atoms(&mut |a| match a {
            Term::Key(id, KeyKind::Shared) => {
                for d in &self.spec.shared_keys {
                    let id: &str = id;
                    if id == d.name || id == format!("{}{}", d.first, d.second) || id == format!("{}{}", d.second, d.first) {
                        return Term::shared_key(d.name.clone());
                    }
                }
                a.clone()
            }
            _ => a.clone(),
        })
    }

    fn role_keys(&self, role: &str, known: &TermSet) -> Vec<Term> {
        let knows_agent = |r: &str| known.contains(&Term::agent(r));
        let mut out = Vec::new();
        for d in &self.spec.shared_keys {
            if (d.first == role || d.second == role) && knows_agent(&d.first) && knows_agent(&d.second) {
                out.push(Term::shared_key(d.name.clone()));
            }
        }
        for r in &self.spec.keypairs {
            if knows_agent(r) {
                out.push(Term::public_key(r.clone()));
            }
        }
        if self.spec.keypairs.iter().any(|r| r == role) {
            out.push(Term::private_key(role));
        }
        out
    }

    /// Closes `known` under analysis, adding keys of newly learnt agents.
    fn close(&self, role: &str, known: &mut TermSet) {
        loop {
            *known = analyzed(known);
            let before = known.len();
            known.extend(self.role_keys(role, known));
            if known.len() == before {
                return;
            }
        }
    }

    fn compile_role(&self, role: &str) -> Result<RoleProgram, ProtocolError> {
        let spec = self.spec;
        let mut known = TermSet::new();
        known.insert(Term::agent(role));
        for t in &spec.trusted {
            known.insert(Term::agent(t.clone()));
        }
        if spec.initiator() == Some(role) {
            for r in spec.all_roles() {
                known.insert(Term::agent(r.clone()));
            }
        }
        let mut fresh = Vec::new();
        for n in spec.fresh.get(role).into_iter().flatten() {
            let t = fresh_term(n);
            let sort = Sort::of(&t).ok_or_else(|| ProtocolError::Invalid { step: 0, message: format!("`{n}` cannot be generated fresh") })?;
            fresh.push((n.clone(), sort));
            known.insert(t);
        }
        let mut knows = Vec::new();
        for t in spec.knows.get(role).into_iter().flatten() {
            knows.push((var_name(t), t.clone()));
            known.insert(t.clone());
        }
        known.extend(self.public_constants.iter().cloned());
        self.close(role, &mut known);

        let mut blobs: BTreeMap<Term, usize> = BTreeMap::new();
        let mut blob_shapes = Vec::new();
        let mut actions = Vec::new();
        for step in &spec.steps {
            let msg = self.normalize(&step.message);
            if step.receiver == role {
                known.insert(Term::agent(step.sender.clone()));
                known.insert(msg.clone());
                self.close(role, &mut known);
                let pattern = self.recv_view(&msg, &known, &mut blobs, step.index)?;
                while blob_shapes.len() < blobs.len() {
                    let term = blobs.iter().find(|(_, i)| **i == blob_shapes.len()).map(|(t, _)| t.clone()).expect("blob index");
                    blob_shapes.push(self.send_view(&term, &BTreeMap::new(), step.index)?);
                }
                actions.push(Action { step: step.index, kind: ActionKind::Recv, peer: step.sender.clone(), pattern });
            } else if step.sender == role {
                let pattern = self.send_view(&msg, &blobs, step.index)?;
                if !derives(&known, &msg) {
                    return Err(ProtocolError::Inexecutable { step: step.index, role: role.to_string(), message: step.message.to_string() });
                }
                if !known.contains(&Term::agent(step.receiver.clone())) {
                    return Err(ProtocolError::Inexecutable { step: step.index, role: role.to_string(), message: format!("address of {}", step.receiver) });
                }
                actions.push(Action { step: step.index, kind: ActionKind::Send, peer: step.receiver.clone(), pattern });
            }
        }
        Ok(RoleProgram { role: role.to_string(), actions, fresh, knows, blob_shapes })
    }

    fn leaf(&self, t: &Term, step: usize) -> Result<Tpl, ProtocolError> {
        let spec = self.spec;
        Ok(match t {
            Term::Agent(a) if spec.is_role(a) => Tpl::Role(a.to_string()),
            Term::Key(id, KeyKind::Shared) => {
                if let Some(d) = spec.shared_keys.iter().find(|d| *d.name == **id) {
                    Tpl::SharedKey(d.first.clone(), d.second.clone())
                } else if self.declared.contains_key(&**id) {
                    Tpl::Var(id.to_string(), Sort::Key)
                } else {
                    return Err(ProtocolError::UnboundVariable { step, name: t.to_string() });
                }
            }
            Term::Key(id, kind) if spec.keypairs.iter().any(|k| **k == **id) => {
                if *kind == KeyKind::Public {
                    Tpl::PublicKey(id.to_string())
                } else {
                    Tpl::PrivateKey(id.to_string())
                }
            }
            Term::Nonce(n) => {
                if self.declared.contains_key(&**n) {
                    Tpl::Var(n.to_string(), Sort::Nonce)
                } else {
                    return Err(ProtocolError::UnboundVariable { step, name: n.to_string() });
                }
            }
            Term::Text(n) if self.declared.contains_key(&**n) => Tpl::Var(n.to_string(), Sort::Text),
            other => Tpl::Const(other.clone()),
        })
    }

    fn recv_view(&self, m: &Term, known: &TermSet, blobs: &mut BTreeMap<Term, usize>, step: usize) -> Result<Tpl, ProtocolError> {
        Ok(match m {
            Term::Pair(a, b) => Tpl::Pair(Box::new(self.recv_view(a, known, blobs, step)?), Box::new(self.recv_view(b, known, blobs, step)?)),
            Term::Enc(body, key) => {
                if known.contains(&key.decryption_key()) {
                    Tpl::Enc(Box::new(self.recv_view(body, known, blobs, step)?), Box::new(self.recv_view(key, known, blobs, step)?))
                } else {
                    // Leaves under an unreadable ciphertext must still be declared somewhere.
                    self.check_leaves(m, step)?;
                    let next = blobs.len();
                    Tpl::Blob(*blobs.entry(m.clone()).or_insert(next))
                }
            }
            leaf => self.leaf(leaf, step)?,
        })
    }

    fn check_leaves(&self, m: &Term, step: usize) -> Result<(), ProtocolError> {
        let mut err = None;
        m.for_each_subterm(&mut |t| {
            if t.is_atomic() && err.is_none() {
                if let Err(e) = self.leaf(t, step) {
                    err = Some(e);
                }
            }
        });
        err.map_or(Ok(()), Err)
    }

    fn send_view(&self, m: &Term, blobs: &BTreeMap<Term, usize>, step: usize) -> Result<Tpl, ProtocolError> {
        if let Some(i) = blobs.get(m) {
            return Ok(Tpl::Blob(*i));
        }
        Ok(match m {
            Term::Pair(a, b) => Tpl::Pair(Box::new(self.send_view(a, blobs, step)?), Box::new(self.send_view(b, blobs, step)?)),
            Term::Enc(a, b) => Tpl::Enc(Box::new(self.send_view(a, blobs, step)?), Box::new(self.send_view(b, blobs, step)?)),
            leaf => self.leaf(leaf, step)?,
        })
    }
}

fn var_name(t: &Term) -> String {
    match t {
        Term::Agent(n) | Term::Nonce(n) | Term::Key(n, _) | Term::Text(n) => n.to_string(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::parse_protocol;

    const PROT1: &str = "\
protocol prot1
agents A B ; trusted S
keys shared(A,S)=kAS shared(B,S)=kBS
fresh S: ksess
1. A -> S : B
2. S -> A : tuple(B, enc(ksess,k(AS)), enc(ksess,k(BS)))
3. A -> B : pair(A, enc(ksess,k(BS)))
";

    #[test]
    fn initiator_forwards_blob() {
        let c = compile(&parse_protocol(PROT1).unwrap()).unwrap();
        let a = c.program("A");
        assert_eq!(a.actions.len(), 3);
        let recv = &a.actions[1].pattern;
        assert_eq!(recv.to_string(), "pair(B,pair(enc(ksess,k(AS)),_blob0))");
        assert_eq!(a.actions[2].pattern.to_string(), "pair(A,_blob0)");
    }

    #[test]
    fn responder_opens_its_ciphertext() {
        let c = compile(&parse_protocol(PROT1).unwrap()).unwrap();
        let b = c.program("B");
        assert_eq!(b.actions.len(), 1);
        assert_eq!(b.actions[0].pattern.to_string(), "pair(A,enc(ksess,k(BS)))");
        assert!(b.vars_bound_at(1).contains("ksess"));
    }

    #[test]
    fn server_builds_both_ciphertexts() {
        let c = compile(&parse_protocol(PROT1).unwrap()).unwrap();
        let s = c.program("S");
        assert_eq!(s.actions[1].kind, ActionKind::Send);
        assert_eq!(s.actions[1].pattern.to_string(), "pair(B,pair(enc(ksess,k(AS)),enc(ksess,k(BS))))");
    }
}
