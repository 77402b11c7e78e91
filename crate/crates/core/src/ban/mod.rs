//! BAN belief logic: idealized protocols, forward-chaining saturation and
//! proof trees.

mod engine;
mod formula;
mod parse;

pub use engine::{prove, saturate, ProofOutcome, ProofTree, Rule, Saturation};
pub use formula::{Ban, Step};
pub use parse::{parse_ban, parse_ban_formula, BanInput};

/// Default bound on nested `believes`.
pub const DEFAULT_DEPTH: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BanError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: formula nests {depth} beliefs, more than the limit of {limit}")]
    DepthExceeded { line: usize, depth: usize, limit: usize },
    #[error("line {line}: ill-formed step: {reason}")]
    IllFormedStep { line: usize, reason: String },
}
