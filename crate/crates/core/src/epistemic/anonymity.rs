//! Anonymity of an action with respect to an observer.

use super::formula::Formula;
use super::EpistemicError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnonymityKind {
    /// The observer does not know that `i` performed the action.
    Minimal,
    /// Whenever `i` performed it, the observer thinks any other agent might have.
    Total,
    /// Whenever `i` performed it, the observer thinks every agent in the set might have.
    UpTo,
}

/// The formula together with warnings about degenerate choices.
#[derive(Clone, Debug, PartialEq)]
pub struct Anonymity {
    pub formula: Formula,
    pub warnings: Vec<String>,
}

fn performed(i: &str, action: &str) -> Formula {
    Formula::atom("performed", [i, action])
}

/// Builds the anonymity formula of `kind` for agent `i` performing
/// `action`, observed by `j`. `agents` lists everyone for [`AnonymityKind::Total`];
/// `set` is required for [`AnonymityKind::UpTo`].
pub fn anonymity_formula(
    kind: AnonymityKind,
    i: &str,
    action: &str,
    j: &str,
    set: Option<&[String]>,
    agents: &[String],
) -> Result<Anonymity, EpistemicError> {
    let mut warnings = Vec::new();
    let candidates: Vec<&str> = match kind {
        AnonymityKind::Minimal => {
            return Ok(Anonymity { formula: Formula::not(Formula::knows(j, performed(i, action))), warnings });
        }
        AnonymityKind::Total => agents.iter().map(String::as_str).filter(|a| *a != j).collect(),
        AnonymityKind::UpTo => {
            let set = set.ok_or(EpistemicError::MissingAgentSet)?;
            if set.iter().any(|a| a == j) {
                warnings.push(format!("observer {j} is in the anonymity set; it trivially considers itself"));
            }
            set.iter().map(String::as_str).collect()
        }
    };
    if candidates.is_empty() {
        warnings.push("empty set of candidate performers; the formula is vacuous".to_string());
    }
    let body = Formula::all(candidates.iter().map(|c| Formula::possible(j, performed(c, action))));
    Ok(Anonymity { formula: Formula::implies(performed(i, action), body), warnings })
}
