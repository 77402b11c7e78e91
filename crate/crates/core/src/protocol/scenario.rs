//! Execution configurations and their role instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{compile, CompiledProtocol, ProtocolError, ProtocolSpec, Sort};
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttackerClass {
    None,
    Eavesdrop,
    Active,
    Insider,
}

impl AttackerClass {
    /// Whether the attacker controls delivery.
    pub fn controls_network(self) -> bool {
        matches!(self, AttackerClass::Active | AttackerClass::Insider)
    }

    pub fn overhears(self) -> bool {
        self != AttackerClass::None
    }
}

impl fmt::Display for AttackerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackerClass::None => "none",
            AttackerClass::Eavesdrop => "eavesdrop",
            AttackerClass::Active => "active",
            AttackerClass::Insider => "insider",
        })
    }
}

impl FromStr for AttackerClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(AttackerClass::None),
            "eavesdrop" => Ok(AttackerClass::Eavesdrop),
            "active" => Ok(AttackerClass::Active),
            "insider" => Ok(AttackerClass::Insider),
            other => Err(format!("unknown attacker class `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionRequest {
    pub initiator: String,
    pub responder: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub attacker: AttackerClass,
    /// One entry per session, in session-id order.
    pub sessions: Vec<SessionRequest>,
    /// Honest agents that may play ordinary roles.
    pub pool: Vec<String>,
    pub attacker_name: String,
    /// Long-term keys registered to the attacker (insider only).
    pub attacker_keys: Vec<Term>,
    /// Run one honest session first, then leak its session keys.
    pub compromise: bool,
    pub synthesis_depth: usize,
    /// Exploration stops after this many distinct states.
    pub max_states: usize,
}

pub const DEFAULT_SESSIONS: usize = 2;
pub const DEFAULT_DEPTH: usize = 4;
pub const DEFAULT_MAX_STATES: usize = 2_000_000;

impl Scenario {
    /// The standard configuration for `spec`: the ordinary role names double
    /// as honest agent names and the attacker is `I`.
    ///
    /// Insider scenarios alternate an honest session with one in which the
    /// initiator deliberately talks to the attacker.
    pub fn standard(spec: &ProtocolSpec, attacker: AttackerClass, sessions: usize) -> Scenario {
        let init = spec.initiator().unwrap_or("A").to_string();
        let resp = spec.responder().unwrap_or("B").to_string();
        let attacker_name = "I".to_string();
        let honest = SessionRequest { initiator: init.clone(), responder: resp.clone() };
        let pattern = if attacker == AttackerClass::Insider {
            vec![honest, SessionRequest { initiator: init, responder: attacker_name.clone() }]
        } else {
            vec![honest.clone(), honest]
        };
        let attacker_keys = if attacker == AttackerClass::Insider { registered_keys(spec, &attacker_name) } else { Vec::new() };
        Scenario {
            attacker,
            sessions: pattern.iter().cycle().take(sessions).cloned().collect(),
            pool: spec.roles.clone(),
            attacker_name,
            attacker_keys,
            compromise: false,
            synthesis_depth: DEFAULT_DEPTH,
            max_states: DEFAULT_MAX_STATES,
        }
    }

    /// All agent names that can appear in a run.
    pub fn universe(&self, spec: &ProtocolSpec) -> Vec<String> {
        let mut out = Vec::new();
        if self.attacker.controls_network() {
            out.push(self.attacker_name.clone());
        }
        for a in self.pool.iter().chain(spec.trusted.iter()) {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        out
    }
}

/// Keys an attacker named `name` holds as a registered user: a long-term key
/// shared with each trusted server, and its own private key.
pub fn registered_keys(spec: &ProtocolSpec, name: &str) -> Vec<Term> {
    let mut out = Vec::new();
    for d in &spec.shared_keys {
        let key = if spec.is_trusted(&d.second) && !spec.is_trusted(&d.first) {
            Term::shared_key(format!("{name}{}", d.second))
        } else if spec.is_trusted(&d.first) && !spec.is_trusted(&d.second) {
            Term::shared_key(format!("{}{name}", d.first))
        } else {
            continue;
        };
        if !out.contains(&key) {
            out.push(key);
        }
    }
    if !spec.keypairs.is_empty() {
        out.push(Term::private_key(name));
    }
    out
}

pub fn validate_scenario(scenario: &Scenario) -> Vec<String> {
    let mut issues = Vec::new();
    if scenario.sessions.is_empty() {
        issues.push("sessions must be at least 1".to_string());
    }
    if scenario.attacker == AttackerClass::Insider && scenario.attacker_keys.is_empty() {
        issues.push("insider requires registered keys".to_string());
    }
    if scenario.synthesis_depth == 0 {
        issues.push("synthesis depth must be at least 1".to_string());
    }
    if scenario.pool.contains(&scenario.attacker_name) {
        issues.push(format!("attacker `{}` cannot be in the honest pool", scenario.attacker_name));
    }
    for s in &scenario.sessions {
        let insider_peer = scenario.attacker == AttackerClass::Insider && s.responder == scenario.attacker_name;
        if s.initiator == s.responder {
            issues.push(format!("session {} -> {} has identical peers", s.initiator, s.responder));
        }
        if s.initiator == scenario.attacker_name && scenario.attacker != AttackerClass::Insider {
            issues.push("only an insider attacker can initiate sessions".to_string());
        }
        if s.responder == scenario.attacker_name && !insider_peer {
            issues.push("only an insider attacker can be an intended peer".to_string());
        }
    }
    if scenario.compromise && scenario.attacker == AttackerClass::None {
        issues.push("key compromise needs an attacker".to_string());
    }
    issues
}

/// One role played by one agent in one session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleInstance {
    pub session: usize,
    pub role: String,
    pub agent: String,
    /// Initial bindings: own identity, pre-agreed peers, fresh values and
    /// initially known constants.
    pub roles: BTreeMap<String, String>,
    pub vars: BTreeMap<String, Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    pub id: usize,
    pub initiator: String,
    pub responder: String,
    /// Completed before the attack phase; its keys are later leaked.
    pub historical: bool,
    pub instances: Vec<RoleInstance>,
}

/// Fresh symbol for `name` generated by `role` in session `session`.
pub fn fresh_symbol(name: &str, sort: Sort, session: usize, role: &str) -> Term {
    let id = format!("{name}#{session}#{role}");
    match sort {
        Sort::Nonce => Term::nonce(id),
        Sort::Key => Term::shared_key(id),
        Sort::Text => Term::text(id),
    }
}

/// Creates the role instances for every requested session.
///
/// Roles played by the attacker get no instance; the attacker acts through
/// the network instead. With `compromise` set, an extra honest session with
/// id 0 is prepended and marked historical.
pub fn instantiate(spec: &ProtocolSpec, scenario: &Scenario) -> Result<(CompiledProtocol, Vec<Session>), ProtocolError> {
    let compiled = compile(spec)?;
    let known = |a: &str| scenario.pool.iter().any(|p| p == a) || *a == scenario.attacker_name;
    let mut requests: Vec<(usize, &SessionRequest, bool)> = Vec::new();
    if scenario.compromise {
        let first = scenario.sessions.iter().find(|s| s.responder != scenario.attacker_name && s.initiator != scenario.attacker_name);
        if let Some(first) = first {
            requests.push((0, first, true));
        }
    }
    for (i, s) in scenario.sessions.iter().enumerate() {
        requests.push((i + 1, s, false));
    }
    let init_role = spec.initiator().ok_or_else(|| ProtocolError::Unsupported("empty protocol".into()))?.to_string();
    let resp_role = spec.responder().ok_or_else(|| ProtocolError::Unsupported("missing responder role".into()))?.to_string();
    let mut sessions = Vec::new();
    for (id, req, historical) in requests {
        for a in [&req.initiator, &req.responder] {
            if !known(a) {
                return Err(ProtocolError::UnknownAgent(a.clone()));
            }
        }
        let mut instances = Vec::new();
        let mut add = |role: &str, agent: &str, peers: &[(&str, &str)]| {
            if agent == scenario.attacker_name {
                return;
            }
            let prog = compiled.program(role);
            let mut roles = BTreeMap::new();
            roles.insert(role.to_string(), agent.to_string());
            for t in &spec.trusted {
                roles.insert(t.clone(), t.clone());
            }
            for (r, a) in peers {
                roles.insert(r.to_string(), a.to_string());
            }
            let mut vars = BTreeMap::new();
            for (n, sort) in &prog.fresh {
                vars.insert(n.clone(), fresh_symbol(n, *sort, id, role));
            }
            for (n, t) in &prog.knows {
                vars.insert(n.clone(), t.clone());
            }
            instances.push(RoleInstance { session: id, role: role.to_string(), agent: agent.to_string(), roles, vars });
        };
        add(&init_role, &req.initiator, &[(&resp_role, &req.responder)]);
        add(&resp_role, &req.responder, &[]);
        for t in &spec.trusted {
            add(t, t, &[]);
        }
        sessions.push(Session { id, initiator: req.initiator.clone(), responder: req.responder.clone(), historical, instances });
    }
    Ok((compiled, sessions))
}
