//! Protocol specifications in message-sequence notation.
//!
//! A [`ProtocolSpec`] is the parsed form of a `.prot` file. [`compile`]
//! turns it into one [`RoleProgram`] per role: the sequence of sends and
//! receives that role performs, with each message seen through the role's
//! own eyes (ciphertexts it cannot open become opaque blobs).

mod compile;
mod parse;
mod scenario;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::term::{Term, TermError};

pub use compile::{compile, Action, ActionKind, CompiledProtocol, RoleProgram, Sort, Tpl};
pub use parse::parse_protocol;
pub use scenario::{
    fresh_symbol, instantiate, registered_keys, validate_scenario, AttackerClass, RoleInstance, Scenario, Session, SessionRequest,
    DEFAULT_DEPTH, DEFAULT_MAX_STATES, DEFAULT_SESSIONS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Term { line: usize, source: TermError },
    #[error("step {step}: unbound variable `{name}`")]
    UnboundVariable { step: usize, name: String },
    #[error("step {step}: role {role} cannot construct `{message}`")]
    Inexecutable { step: usize, role: String, message: String },
    #[error("step {step}: {message}")]
    Invalid { step: usize, message: String },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedKeyDecl {
    pub first: String,
    pub second: String,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub index: usize,
    pub sender: String,
    pub receiver: String,
    pub message: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Claim {
    Secret(String),
    Agree { claimer: String, peer: String },
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::Secret(name) => write!(f, "secret {name}"),
            Claim::Agree { claimer, peer } => write!(f, "agree {claimer} {peer}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ProtocolSpec {
    pub name: String,
    /// Ordinary roles, in declaration order.
    pub roles: Vec<String>,
    /// Trusted server roles; each is played by the agent of the same name.
    pub trusted: Vec<String>,
    pub shared_keys: Vec<SharedKeyDecl>,
    pub keypairs: Vec<String>,
    pub fresh: BTreeMap<String, Vec<String>>,
    pub knows: BTreeMap<String, Vec<Term>>,
    pub steps: Vec<Step>,
    pub claims: Vec<Claim>,
}

impl ProtocolSpec {
    pub fn all_roles(&self) -> impl Iterator<Item = &String> {
        self.roles.iter().chain(self.trusted.iter())
    }

    pub fn is_role(&self, name: &str) -> bool {
        self.all_roles().any(|r| r == name)
    }

    pub fn is_trusted(&self, name: &str) -> bool {
        self.trusted.iter().any(|r| r == name)
    }

    /// The role that sends the first message.
    pub fn initiator(&self) -> Option<&str> {
        self.steps.first().map(|s| s.sender.as_str())
    }

    /// The ordinary role that is not the initiator.
    pub fn responder(&self) -> Option<&str> {
        let init = self.initiator()?;
        self.roles.iter().find(|r| r.as_str() != init).map(String::as_str)
    }

    pub fn fresh_owner(&self, name: &str) -> Option<&str> {
        self.fresh.iter().find(|(_, names)| names.iter().any(|n| n == name)).map(|(r, _)| r.as_str())
    }

    pub fn secret_claims(&self) -> impl Iterator<Item = &str> {
        self.claims.iter().filter_map(|c| match c {
            Claim::Secret(n) => Some(n.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "protocol {}", self.name)?;
        write!(f, "agents {}", self.roles.join(" "))?;
        if !self.trusted.is_empty() {
            write!(f, " ; trusted {}", self.trusted.join(" "))?;
        }
        writeln!(f)?;
        if !self.shared_keys.is_empty() || !self.keypairs.is_empty() {
            let mut parts: Vec<String> =
                self.shared_keys.iter().map(|k| format!("shared({},{})={}", k.first, k.second, k.name)).collect();
            parts.extend(self.keypairs.iter().map(|r| format!("keypair({r})")));
            writeln!(f, "keys {}", parts.join(" "))?;
        }
        let fresh: Vec<String> = self.fresh.iter().map(|(r, ns)| format!("fresh {r}: {}", ns.join(" "))).collect();
        if !fresh.is_empty() {
            writeln!(f, "{}", fresh.join(" ; "))?;
        }
        for (r, ts) in &self.knows {
            let ts: Vec<String> = ts.iter().map(Term::to_string).collect();
            writeln!(f, "knows {r}: {}", ts.join(" "))?;
        }
        for s in &self.steps {
            writeln!(f, "{}. {} -> {} : {}", s.index, s.sender, s.receiver, s.message)?;
        }
        for c in &self.claims {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
