//! Information flow: closure policies on event systems, knowledge of a
//! low-security observer, and noninterference for a small imperative
//! language.

mod events;
mod imp;

pub use events::{
    interleave, parse_event_system, project, show_trace, EventClass, EventInfo, EventSystem, Level, Policy, PolicyVerdict, Trace,
};
pub use imp::{check_ni, parse_program, refines_low_equivalence, Cmd, Counterexample, Expr, NiVerdict, Program, Store, DEFAULT_PAIR_CAP};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum InfoflowError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("stores do not cover the same variables")]
    DomainMismatch,
    #[error("value {value} is not below the modulus {modulus}")]
    OutOfRange { value: u64, modulus: u64 },
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(u64),
    #[error("noninterference needs {required} store pairs, above the cap of {cap}")]
    TooLarge { required: String, cap: u128 },
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("`{0}` is not a trace of the system")]
    NotATrace(String),
    #[error("an event system needs at least one trace")]
    NoTraces,
}
