//! Dolev-Yao closures: `Parts`, `Analyzed`, and membership in
//! `Synthesized(Analyzed(H))`.

use super::{Term, TermSet};

/// Every component of every message in `h`, including bodies of
/// ciphertexts whose key is unknown.
pub fn parts(h: &TermSet) -> TermSet {
    let mut out = TermSet::new();
    let mut stack: Vec<&Term> = h.iter().collect();
    while let Some(t) = stack.pop() {
        if !out.insert(t.clone()) {
            continue;
        }
        match t {
            Term::Pair(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Term::Enc(body, _) => stack.push(body),
            _ => {}
        }
    }
    out
}

/// What can actually be seen in `h`: pairs are split, and a ciphertext is
/// opened when its decryption key is itself in the closure.
pub fn analyzed(h: &TermSet) -> TermSet {
    let mut out = TermSet::new();
    let mut pending: Vec<Term> = h.iter().cloned().collect();
    // Ciphertexts whose key has not shown up yet.
    let mut locked: Vec<Term> = Vec::new();
    loop {
        while let Some(t) = pending.pop() {
            if out.contains(&t) {
                continue;
            }
            match &t {
                Term::Pair(a, b) => {
                    pending.push((**a).clone());
                    pending.push((**b).clone());
                }
                Term::Enc(..) => locked.push(t.clone()),
                _ => {}
            }
            out.insert(t);
        }
        let before = locked.len();
        locked.retain(|c| {
            if let Term::Enc(body, key) = c {
                if out.contains(&key.decryption_key()) {
                    pending.push((**body).clone());
                    return false;
                }
            }
            true
        });
        if locked.len() == before {
            break;
        }
    }
    out
}

/// `m ∈ Synthesized(Analyzed(h))`.
pub fn derives(h: &TermSet, m: &Term) -> bool {
    Knowledge::new(h).derives(m)
}

/// A message set together with its analyzed closure, for repeated
/// derivability queries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Knowledge {
    analyzed: TermSet,
}

impl Knowledge {
    pub fn new(h: &TermSet) -> Self {
        Knowledge { analyzed: analyzed(h) }
    }

    pub fn analyzed(&self) -> &TermSet {
        &self.analyzed
    }

    /// Adds messages and recomputes the closure.
    pub fn extend<I: IntoIterator<Item = Term>>(&mut self, terms: I) {
        let mut grew = false;
        let mut base = std::mem::take(&mut self.analyzed);
        for t in terms {
            grew |= base.insert(t);
        }
        self.analyzed = if grew { analyzed(&base) } else { base };
    }

    pub fn sees(&self, m: &Term) -> bool {
        self.analyzed.contains(m)
    }

    pub fn derives(&self, m: &Term) -> bool {
        if self.analyzed.contains(m) {
            return true;
        }
        match m {
            Term::Pair(a, b) | Term::Enc(a, b) => self.derives(a) && self.derives(b),
            _ => false,
        }
    }
}
