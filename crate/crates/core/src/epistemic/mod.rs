//! Explicit-state model checking of knowledge and time over runs.
//!
//! A [`KripkeModel`] is a set of runs, each a sequence of points. Every
//! agent has an observation at every point; two points are
//! indistinguishable to the agent when its observations agree (and, in the
//! default synchronous mode, the times agree too).

mod anonymity;
mod formula;
mod model;
pub mod scenarios;
mod traces;

pub use anonymity::{anonymity_formula, Anonymity, AnonymityKind};
pub use formula::{parse_formula, Atom, Formula};
pub use model::{check_valid, eval, At, Evaluator, KripkeModel, ModelBuilder, Outcome, Point, PointData, Validity};
pub use scenarios::{dining_crypto_model, russian_cards_model};
pub use traces::{build_model, model_agents, model_from_traces, observe, ObservationMode};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EpistemicError {
    #[error("formula syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("malformed atom `{0}`")]
    BadAtom(String),
    #[error("cannot build a model from the traces: {0}")]
    Trace(String),
    #[error("anonymity up to a set needs the set of agents")]
    MissingAgentSet,
}
