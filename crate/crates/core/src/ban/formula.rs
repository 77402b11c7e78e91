//! BAN formulas. Messages are formulas too: a nonce is a [`Ban::Msg`] atom
//! and a message is any formula that can be sent.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ban {
    /// `k` is a good key shared by the two agents, kept in sorted order.
    SharedKey(String, String, String),
    /// `m` is a secret known only to the two agents, kept in sorted order.
    Secret(String, String, String),
    Believes(String, Box<Ban>),
    Controls(String, Box<Ban>),
    Said(String, Box<Ban>),
    Sees(String, Box<Ban>),
    Fresh(Box<Ban>),
    /// Body encrypted under key, with the agent who encrypted it when known.
    EncBy(Box<Ban>, String, Option<String>),
    /// Flat tuple of at least two components.
    Tup(Vec<Ban>),
    Msg(String),
}

fn sorted(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl Ban {
    pub fn shared_key(a: &str, k: &str, b: &str) -> Ban {
        let (x, y) = sorted(a, b);
        Ban::SharedKey(x, k.to_string(), y)
    }

    pub fn secret(a: &str, m: &str, b: &str) -> Ban {
        let (x, y) = sorted(a, b);
        Ban::Secret(x, m.to_string(), y)
    }

    pub fn believes(a: &str, f: Ban) -> Ban {
        Ban::Believes(a.to_string(), Box::new(f))
    }

    pub fn controls(a: &str, f: Ban) -> Ban {
        Ban::Controls(a.to_string(), Box::new(f))
    }

    pub fn said(a: &str, f: Ban) -> Ban {
        Ban::Said(a.to_string(), Box::new(f))
    }

    pub fn sees(a: &str, f: Ban) -> Ban {
        Ban::Sees(a.to_string(), Box::new(f))
    }

    pub fn fresh(f: Ban) -> Ban {
        Ban::Fresh(Box::new(f))
    }

    pub fn enc(body: Ban, key: &str, signer: Option<&str>) -> Ban {
        Ban::EncBy(Box::new(body), key.to_string(), signer.map(str::to_string))
    }

    pub fn msg(name: &str) -> Ban {
        Ban::Msg(name.to_string())
    }

    /// Tuple of `items`, flattening nested tuples; a single item stands
    /// for itself.
    pub fn tuple(items: impl IntoIterator<Item = Ban>) -> Ban {
        let mut flat = Vec::new();
        for it in items {
            match it {
                Ban::Tup(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().expect("one item")
        } else {
            Ban::Tup(flat)
        }
    }

    /// The other agent of a shared key or secret, if `agent` is one of the two.
    pub fn partner(&self, agent: &str) -> Option<&str> {
        match self {
            Ban::SharedKey(a, _, b) | Ban::Secret(a, _, b) => {
                if a == agent {
                    Some(b)
                } else if b == agent {
                    Some(a)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Deepest nesting of `believes`.
    pub fn belief_depth(&self) -> usize {
        match self {
            Ban::Believes(_, f) => 1 + f.belief_depth(),
            Ban::Controls(_, f) | Ban::Said(_, f) | Ban::Sees(_, f) | Ban::Fresh(f) | Ban::EncBy(f, _, _) => f.belief_depth(),
            Ban::Tup(items) => items.iter().map(Ban::belief_depth).max().unwrap_or(0),
            Ban::SharedKey(..) | Ban::Secret(..) | Ban::Msg(_) => 0,
        }
    }

    /// Calls `f` on this formula and every subformula.
    pub fn for_each(&self, f: &mut impl FnMut(&Ban)) {
        f(self);
        match self {
            Ban::Believes(_, g) | Ban::Controls(_, g) | Ban::Said(_, g) | Ban::Sees(_, g) | Ban::Fresh(g) | Ban::EncBy(g, _, _) => g.for_each(f),
            Ban::Tup(items) => items.iter().for_each(|g| g.for_each(f)),
            Ban::SharedKey(..) | Ban::Secret(..) | Ban::Msg(_) => {}
        }
    }

    pub fn components(&self) -> &[Ban] {
        match self {
            Ban::Tup(items) => items,
            other => std::slice::from_ref(other),
        }
    }
}

fn list(f: &mut fmt::Formatter<'_>, items: &[Ban]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl fmt::Display for Ban {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ban::SharedKey(a, k, b) => write!(f, "{a} key({k}) {b}"),
            Ban::Secret(a, m, b) => write!(f, "secret({a},{m},{b})"),
            Ban::Believes(a, g) => write!(f, "{a} believes {g}"),
            Ban::Controls(a, g) => write!(f, "{a} controls {g}"),
            Ban::Said(a, g) => write!(f, "{a} said {g}"),
            Ban::Sees(a, g) => write!(f, "{a} sees {g}"),
            Ban::Fresh(g) => {
                write!(f, "fresh(")?;
                list(f, g.components())?;
                write!(f, ")")
            }
            Ban::EncBy(g, k, signer) => {
                write!(f, "enc{{")?;
                list(f, g.components())?;
                write!(f, "}}{k}")?;
                match signer {
                    Some(i) => write!(f, " by {i}"),
                    None => Ok(()),
                }
            }
            Ban::Tup(items) => {
                write!(f, "(")?;
                list(f, items)?;
                write!(f, ")")
            }
            Ban::Msg(m) => write!(f, "{m}"),
        }
    }
}

/// An idealized protocol step: `receiver` gets a message meaning `payload`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub sender: String,
    pub receiver: String,
    pub payload: Ban,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} -> {} : {}", self.sender, self.receiver, self.payload)
    }
}
