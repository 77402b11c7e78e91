//! The report every subcommand produces, and its two renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

/// Identifier of the JSON layout, bumped on incompatible changes.
pub const SCHEMA: &str = "secknow-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    /// No violation among the executions explored within the bounds.
    HoldsWithinBounds,
    Violated,
    /// A bound cut the search short before any violation turned up.
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::HoldsWithinBounds => "holds_within_bounds",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimResult {
    pub name: String,
    pub status: Status,
    /// Rendered witness, one line per entry.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<String>,
    /// Raw event log backing the witness, replayable with `Trace::from_str`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl ClaimResult {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        ClaimResult { name: name.into(), status, witness: Vec::new(), log: Vec::new(), details: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub bounds: BTreeMap<String, String>,
    pub results: Vec<ClaimResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall-clock time, only present when asked for so that reports stay
    /// reproducible by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn new(command: Vec<String>) -> Self {
        Report {
            schema: SCHEMA,
            tool: "secknow",
            version: env!("CARGO_PKG_VERSION"),
            command,
            bounds: BTreeMap::new(),
            results: Vec::new(),
            error: None,
            timing_ms: None,
        }
    }

    pub fn bound(&mut self, key: &str, value: impl ToString) {
        self.bounds.insert(key.to_string(), value.to_string());
    }

    /// 0 when everything holds, 1 when some claim is violated, 2 on errors
    /// and on searches that hit a bound without an answer.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            2
        } else if self.results.iter().any(|r| r.status == Status::Violated) {
            1
        } else if self.results.iter().any(|r| r.status == Status::Inconclusive) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} ({})", self.tool, self.version, self.schema);
        let _ = writeln!(out, "command: {}", self.command.join(" "));
        if !self.bounds.is_empty() {
            let bounds: Vec<String> = self.bounds.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "bounds: {}", bounds.join(" "));
        }
        for r in &self.results {
            let _ = writeln!(out, "[{}] {}", r.status.as_str(), r.name);
            for line in &r.witness {
                let _ = writeln!(out, "    {line}");
            }
            for line in &r.log {
                let _ = writeln!(out, "    | {line}");
            }
            for line in &r.details {
                let _ = writeln!(out, "    - {line}");
            }
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        if let Some(ms) = self.timing_ms {
            let _ = writeln!(out, "time: {ms} ms");
        }
        out
    }
}
