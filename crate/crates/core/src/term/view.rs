//! Pattern views: what an observer can make of a message sequence when
//! ciphertexts under unknown keys are replaced by tokens.

use std::collections::BTreeMap;
use std::fmt;

use super::{analyzed, Term, TermSet};

/// How the set of known keys is extracted from the observed messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KeysetMode {
    /// Keys in the analyzed closure of the observations.
    #[default]
    Analyzed,
    /// Only keys that occur as top-level observations.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TokenMode {
    /// Equal ciphertexts share a token; distinct ciphertexts get distinct tokens.
    #[default]
    Unique,
    /// Every unreadable ciphertext becomes the same token.
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ViewConfig {
    pub keyset: KeysetMode,
    pub tokens: TokenMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    Atom(Term),
    Pair(Box<Pattern>, Box<Pattern>),
    Enc(Box<Pattern>, Term),
    Token(usize),
}

impl Pattern {
    pub fn has_tokens(&self) -> bool {
        match self {
            Pattern::Token(_) => true,
            Pattern::Atom(_) => false,
            Pattern::Pair(a, b) => a.has_tokens() || b.has_tokens(),
            Pattern::Enc(b, _) => b.has_tokens(),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Atom(t) => write!(f, "{t}"),
            Pattern::Pair(a, b) => write!(f, "pair({a},{b})"),
            Pattern::Enc(b, k) => write!(f, "enc({b},{k})"),
            Pattern::Token(i) => write!(f, "#box{i}"),
        }
    }
}

/// Pattern view of `ms` with the default configuration.
pub fn pattern_view(ms: &[Term], keyset: KeysetMode) -> Vec<Pattern> {
    pattern_view_with(ms, &[], ViewConfig { keyset, tokens: TokenMode::Unique })
}

/// Pattern view of `ms`, where `private` is extra knowledge the observer
/// holds (its own keys) that is not itself part of the view.
pub fn pattern_view_with(ms: &[Term], private: &[Term], config: ViewConfig) -> Vec<Pattern> {
    let known: TermSet = match config.keyset {
        KeysetMode::Analyzed => analyzed(&ms.iter().chain(private).cloned().collect()),
        KeysetMode::Literal => ms.iter().chain(private).filter(|t| matches!(t, Term::Key(..))).cloned().collect(),
    };
    let mut tokens: BTreeMap<Term, usize> = BTreeMap::new();
    ms.iter().map(|m| view_of(m, &known, config.tokens, &mut tokens)).collect()
}

fn view_of(m: &Term, known: &TermSet, mode: TokenMode, tokens: &mut BTreeMap<Term, usize>) -> Pattern {
    match m {
        Term::Pair(a, b) => Pattern::Pair(Box::new(view_of(a, known, mode, tokens)), Box::new(view_of(b, known, mode, tokens))),
        Term::Enc(body, key) => {
            if known.contains(&key.decryption_key()) {
                Pattern::Enc(Box::new(view_of(body, known, mode, tokens)), (**key).clone())
            } else {
                match mode {
                    TokenMode::Single => Pattern::Token(0),
                    TokenMode::Unique => {
                        let next = tokens.len();
                        Pattern::Token(*tokens.entry(m.clone()).or_insert(next))
                    }
                }
            }
        }
        atom => Pattern::Atom(atom.clone()),
    }
}

/// Two observation sequences are indistinguishable when their pattern
/// views coincide up to a bijective renaming of tokens.
///
/// Tokens are numbered in first-occurrence order, so that renaming is
/// already normalised away and plain equality suffices.
pub fn equivalent_views(ms1: &[Term], ms2: &[Term]) -> bool {
    ms1.len() == ms2.len() && pattern_view(ms1, KeysetMode::Analyzed) == pattern_view(ms2, KeysetMode::Analyzed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn seq(items: &[&str]) -> Vec<Term> {
        items.iter().map(|s| parse_term(s).unwrap()).collect()
    }

    #[test]
    fn unknown_key_becomes_token() {
        assert_eq!(pattern_view(&seq(&["enc(m,kX)"]), KeysetMode::Analyzed), vec![Pattern::Token(0)]);
    }

    #[test]
    fn known_key_keeps_structure() {
        let ms = seq(&["enc(m,kX)", "kX"]);
        let v = pattern_view(&ms, KeysetMode::Analyzed);
        assert!(!v.iter().any(Pattern::has_tokens));
        assert_eq!(v[1], Pattern::Atom(Term::shared_key("kX")));
    }

    #[test]
    fn repeated_ciphertexts_share_tokens() {
        let v = pattern_view(&seq(&["enc(m1,kX)", "enc(m1,kX)", "enc(m2,kX)"]), KeysetMode::Analyzed);
        assert_eq!(v, vec![Pattern::Token(0), Pattern::Token(0), Pattern::Token(1)]);
    }

    #[test]
    fn single_token_mode_collapses() {
        let cfg = ViewConfig { tokens: TokenMode::Single, ..Default::default() };
        let v = pattern_view_with(&seq(&["enc(m1,kX)", "enc(m2,kY)"]), &[], cfg);
        assert_eq!(v, vec![Pattern::Token(0), Pattern::Token(0)]);
    }

    #[test]
    fn literal_mode_ignores_keys_inside_messages() {
        let ms = seq(&["pair(kX,m)", "enc(s,kX)"]);
        assert!(pattern_view(&ms, KeysetMode::Literal)[1].has_tokens());
        assert!(!pattern_view(&ms, KeysetMode::Analyzed)[1].has_tokens());
    }

    #[test]
    fn equivalence_examples() {
        assert!(equivalent_views(&seq(&["enc(m1,k1)"]), &seq(&["enc(m2,k2)"])));
        assert!(!equivalent_views(&seq(&["enc(m1,kX)", "enc(m1,kX)"]), &seq(&["enc(m1,kX)", "enc(m2,kX)"])));
        let ms = seq(&["A", "enc(m,kX)", "kY"]);
        assert!(equivalent_views(&ms, &ms));
    }
}
