//! Symbolic messages in the perfect-encryption model.
//!
//! A [`Term`] is built from atomic values (agent names, nonces, keys and
//! plaintexts) with pairing and encryption. Encryption is opaque: the only
//! way to get at the body of `enc(m, k)` is to hold the inverse of `k`.

mod closure;
mod parse;
mod view;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use closure::{analyzed, derives, parts, Knowledge};
pub use parse::{parse_term, TermError};
pub use view::{equivalent_views, pattern_view, pattern_view_with, KeysetMode, Pattern, TokenMode, ViewConfig};

/// Kind of a key. Public and private keys with the same id form a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyKind {
    Shared,
    Public,
    Private,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Agent(Name),
    Nonce(Name),
    Key(Name, KeyKind),
    Text(Name),
    Pair(Arc<Term>, Arc<Term>),
    Enc(Arc<Term>, Arc<Term>),
}

/// Atom names are shared, so cloning a term never copies text.
pub type Name = Arc<str>;

/// A finite, duplicate-free set of terms with canonical iteration order.
pub type TermSet = BTreeSet<Term>;

impl Term {
    pub fn agent(name: impl Into<Name>) -> Term {
        Term::Agent(name.into())
    }

    pub fn nonce(name: impl Into<Name>) -> Term {
        Term::Nonce(name.into())
    }

    pub fn text(name: impl Into<Name>) -> Term {
        Term::Text(name.into())
    }

    pub fn shared_key(id: impl Into<Name>) -> Term {
        Term::Key(id.into(), KeyKind::Shared)
    }

    pub fn public_key(id: impl Into<Name>) -> Term {
        Term::Key(id.into(), KeyKind::Public)
    }

    pub fn private_key(id: impl Into<Name>) -> Term {
        Term::Key(id.into(), KeyKind::Private)
    }

    pub fn pair(left: Term, right: Term) -> Term {
        Term::Pair(Arc::new(left), Arc::new(right))
    }

    pub fn enc(body: Term, key: Term) -> Term {
        Term::Enc(Arc::new(body), Arc::new(key))
    }

    /// Right-nested pairs: `tuple([a, b, c]) = pair(a, pair(b, c))`.
    ///
    /// Panics on an empty vector.
    pub fn tuple(items: Vec<Term>) -> Term {
        let mut iter = items.into_iter().rev();
        let last = iter.next().expect("tuple of zero terms");
        iter.fold(last, |acc, t| Term::pair(t, acc))
    }

    /// Flattens the right spine of nested pairs.
    pub fn tuple_items(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Term::Pair(l, r) = cur {
            out.push(l.as_ref());
            cur = r;
        }
        out.push(cur);
        out
    }

    pub fn is_atomic(&self) -> bool {
        !matches!(self, Term::Pair(..) | Term::Enc(..))
    }

    /// The key needed to open a ciphertext encrypted under `self`.
    ///
    /// Shared keys and non-key terms are their own inverse.
    pub fn decryption_key(&self) -> Term {
        match self {
            Term::Key(id, KeyKind::Public) => Term::Key(id.clone(), KeyKind::Private),
            Term::Key(id, KeyKind::Private) => Term::Key(id.clone(), KeyKind::Public),
            other => other.clone(),
        }
    }

    /// Number of constructor nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Pair(a, b) | Term::Enc(a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Pair(a, b) | Term::Enc(a, b) => 1 + a.depth().max(b.depth()),
            _ => 0,
        }
    }

    /// Visits every subterm, including `self`, in pre-order.
    pub fn for_each_subterm<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        if let Term::Pair(a, b) | Term::Enc(a, b) = self {
            a.for_each_subterm(f);
            b.for_each_subterm(f);
        }
    }

    /// Applies `f` to every atomic leaf, rebuilding the term.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Term) -> Term) -> Term {
        match self {
            Term::Pair(a, b) => Term::pair(a.map_atoms(f), b.map_atoms(f)),
            Term::Enc(a, b) => Term::enc(a.map_atoms(f), b.map_atoms(f)),
            atom => f(atom),
        }
    }
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '#' || c == '\''
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_ident_char) && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
}

/// Lexical class of a bare identifier, as read by the parser.
pub(crate) fn classify_bare(ident: &str) -> Term {
    let mut chars = ident.chars();
    let first = chars.next().unwrap_or('_');
    let second = chars.next();
    if first.is_ascii_uppercase() {
        Term::Agent(ident.into())
    } else if first == 'n' && second.is_some_and(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
        Term::Nonce(ident.into())
    } else if first == 'k' && second.is_some() {
        Term::Key(ident.into(), KeyKind::Shared)
    } else {
        Term::Text(ident.into())
    }
}

fn print_atom(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    let bare_ok = |s: &str| is_ident(s) && classify_bare(s) == *t;
    match t {
        Term::Key(id, KeyKind::Shared) if bare_ok(id) => write!(f, "{id}"),
        Term::Key(id, KeyKind::Shared) => write!(f, "k({id})"),
        Term::Key(id, KeyKind::Public) => write!(f, "pk({id})"),
        Term::Key(id, KeyKind::Private) => write!(f, "sk({id})"),
        Term::Agent(s) | Term::Nonce(s) if bare_ok(s) => write!(f, "{s}"),
        Term::Text(s) if bare_ok(s) => write!(f, "{s}"),
        Term::Agent(s) | Term::Nonce(s) | Term::Text(s) => write!(f, "\"{}\"", s.replace('"', "")),
        _ => unreachable!("not an atom"),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Pair(a, b) => {
                let items = self.tuple_items();
                if items.len() > 2 {
                    write!(f, "tuple(")?;
                    for (i, t) in items.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{t}")?;
                    }
                    write!(f, ")")
                } else {
                    write!(f, "pair({a},{b})")
                }
            }
            Term::Enc(b, k) => write!(f, "enc({b},{k})"),
            atom => print_atom(f, atom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_is_right_nested() {
        let t = Term::tuple(vec![Term::agent("A"), Term::nonce("nA"), Term::nonce("nB")]);
        assert_eq!(t, Term::pair(Term::agent("A"), Term::pair(Term::nonce("nA"), Term::nonce("nB"))));
        assert_eq!(t.to_string(), "tuple(A,nA,nB)");
        assert_eq!(t.tuple_items().len(), 3);
    }

    #[test]
    fn key_inverse() {
        assert_eq!(Term::public_key("B").decryption_key(), Term::private_key("B"));
        assert_eq!(Term::private_key("B").decryption_key(), Term::public_key("B"));
        assert_eq!(Term::shared_key("kAB").decryption_key(), Term::shared_key("kAB"));
    }

    #[test]
    fn printer_falls_back_to_explicit_forms() {
        assert_eq!(Term::shared_key("AS").to_string(), "k(AS)");
        assert_eq!(Term::shared_key("ksess#1#S").to_string(), "ksess#1#S");
        assert_eq!(Term::text("hello world").to_string(), "\"hello world\"");
        assert_eq!(Term::text("nA").to_string(), "\"nA\"");
    }
}
