//! Reader for BAN input files.
//!
//! ```text
//! assume B believes A key(kAB) B
//! step A -> B : enc{ secret(A,m0,B), nB }kAB by A
//! goal B believes A believes secret(A,m0,B)
//! ```
//!
//! Lines starting with `#` or `//` are comments.

use super::formula::{Ban, Step};
use super::BanError;

/// Parsed contents of a BAN file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BanInput {
    pub initial: Vec<Ban>,
    pub steps: Vec<Step>,
    pub goal: Option<Ban>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Sym(char),
    Arrow,
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_alphanumeric() || c == '_' || c == '\'' {
            let mut w = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_alphanumeric() || d == '_' || d == '\'' {
                    w.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Tok::Word(w));
        } else if c == '-' {
            chars.next();
            if chars.next() != Some('>') {
                return Err("expected `->`".into());
            }
            out.push(Tok::Arrow);
        } else if "(){},:".contains(c) {
            out.push(Tok::Sym(c));
            chars.next();
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

const KEYWORDS: [&str; 9] = ["believes", "controls", "said", "sees", "key", "fresh", "secret", "enc", "by"];

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_word(&self, offset: usize) -> Option<&str> {
        match self.toks.get(self.pos + offset) {
            Some(Tok::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        match self.next() {
            Some(Tok::Sym(d)) if d == c => Ok(()),
            other => Err(format!("expected `{c}`, found {}", show(other.as_ref()))),
        }
    }

    fn name(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Tok::Word(w)) if !KEYWORDS.contains(&w.as_str()) => Ok(w),
            other => Err(format!("expected a name, found {}", show(other.as_ref()))),
        }
    }

    /// Comma-separated formulas up to the closing `close`.
    fn items(&mut self, close: char) -> Result<Vec<Ban>, String> {
        let mut items = vec![self.formula()?];
        loop {
            match self.next() {
                Some(Tok::Sym(',')) => items.push(self.formula()?),
                Some(Tok::Sym(c)) if c == close => return Ok(items),
                other => return Err(format!("expected `,` or `{close}`, found {}", show(other.as_ref()))),
            }
        }
    }

    fn formula(&mut self) -> Result<Ban, String> {
        match self.peek().cloned() {
            Some(Tok::Sym('(')) => {
                self.next();
                Ok(Ban::tuple(self.items(')')?))
            }
            Some(Tok::Word(w)) if w == "fresh" => {
                self.next();
                self.expect('(')?;
                Ok(Ban::fresh(Ban::tuple(self.items(')')?)))
            }
            Some(Tok::Word(w)) if w == "secret" => {
                self.next();
                self.expect('(')?;
                let a = self.name()?;
                self.expect(',')?;
                let m = self.name()?;
                self.expect(',')?;
                let b = self.name()?;
                self.expect(')')?;
                Ok(Ban::secret(&a, &m, &b))
            }
            Some(Tok::Word(w)) if w == "enc" => {
                self.next();
                self.expect('{')?;
                let body = Ban::tuple(self.items('}')?);
                let key = self.name()?;
                let signer = if self.peek_word(0) == Some("by") {
                    self.next();
                    Some(self.name()?)
                } else {
                    None
                };
                Ok(Ban::enc(body, &key, signer.as_deref()))
            }
            Some(Tok::Word(_)) => {
                let a = self.name()?;
                match self.peek_word(0) {
                    Some(op @ ("believes" | "controls" | "said" | "sees")) => {
                        let op = op.to_string();
                        self.next();
                        let f = self.formula()?;
                        Ok(match op.as_str() {
                            "believes" => Ban::believes(&a, f),
                            "controls" => Ban::controls(&a, f),
                            "said" => Ban::said(&a, f),
                            _ => Ban::sees(&a, f),
                        })
                    }
                    Some("key") => {
                        self.next();
                        self.expect('(')?;
                        let k = self.name()?;
                        self.expect(')')?;
                        let b = self.name()?;
                        Ok(Ban::shared_key(&a, &k, &b))
                    }
                    _ => Ok(Ban::msg(&a)),
                }
            }
            other => Err(format!("expected a formula, found {}", show(other.as_ref()))),
        }
    }

    fn done(&self) -> Result<(), String> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(format!("unexpected {}", show(Some(t)))),
        }
    }
}

fn show(t: Option<&Tok>) -> String {
    match t {
        None => "end of line".into(),
        Some(Tok::Word(w)) => format!("`{w}`"),
        Some(Tok::Sym(c)) => format!("`{c}`"),
        Some(Tok::Arrow) => "`->`".into(),
    }
}

/// Parses one formula.
pub fn parse_ban_formula(text: &str) -> Result<Ban, BanError> {
    let syntax = |message: String| BanError::Syntax { line: 1, message };
    let mut p = Parser { toks: tokenize(text).map_err(syntax)?, pos: 0 };
    let f = p.formula().map_err(syntax)?;
    p.done().map_err(syntax)?;
    Ok(f)
}

/// Parses a BAN file, rejecting formulas nested deeper than `depth` beliefs.
pub fn parse_ban(text: &str, depth: usize) -> Result<BanInput, BanError> {
    let mut input = BanInput::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with("//") {
            continue;
        }
        let syntax = |message: String| BanError::Syntax { line, message };
        let (keyword, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let mut p = Parser { toks: tokenize(rest).map_err(syntax)?, pos: 0 };
        let check_depth = |f: &Ban| {
            if f.belief_depth() > depth {
                Err(BanError::DepthExceeded { line, depth: f.belief_depth(), limit: depth })
            } else {
                Ok(())
            }
        };
        match keyword {
            "assume" | "goal" => {
                let f = p.formula().map_err(syntax)?;
                p.done().map_err(syntax)?;
                check_depth(&f)?;
                if keyword == "assume" {
                    input.initial.push(f);
                } else if input.goal.replace(f).is_some() {
                    return Err(syntax("more than one goal".into()));
                }
            }
            "step" => {
                let sender = p.name().map_err(syntax)?;
                if p.next() != Some(Tok::Arrow) {
                    return Err(syntax("expected `->`".into()));
                }
                let receiver = p.name().map_err(syntax)?;
                p.expect(':').map_err(syntax)?;
                let payload = p.formula().map_err(syntax)?;
                p.done().map_err(syntax)?;
                if matches!(payload, Ban::Believes(..)) {
                    return Err(BanError::IllFormedStep { line, reason: "a step sends a message, not a belief".into() });
                }
                check_depth(&payload)?;
                input.steps.push(Step { sender, receiver, payload });
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }
    Ok(input)
}

impl std::fmt::Display for BanInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for a in &self.initial {
            writeln!(f, "assume {a}")?;
        }
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        if let Some(g) = &self.goal {
            writeln!(f, "goal {g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beliefs_about_keys() {
        assert_eq!(parse_ban_formula("B believes A key(kAB) B").unwrap(), Ban::believes("B", Ban::shared_key("A", "kAB", "B")));
    }

    #[test]
    fn steps_carry_the_encrypting_agent() {
        let input = parse_ban("step A -> B : enc{ secret(A,m0,B), nB }kAB by A", 3).unwrap();
        let expected = Ban::enc(Ban::tuple([Ban::secret("A", "m0", "B"), Ban::msg("nB")]), "kAB", Some("A"));
        assert_eq!(input.steps, vec![Step { sender: "A".into(), receiver: "B".into(), payload: expected }]);
    }

    #[test]
    fn depth_and_shape_errors() {
        assert!(matches!(parse_ban("assume A believes B believes x", 1), Err(BanError::DepthExceeded { line: 1, .. })));
        assert!(matches!(parse_ban("step A -> B : A believes x", 3), Err(BanError::IllFormedStep { .. })));
        assert!(matches!(parse_ban("assume A believes", 3), Err(BanError::Syntax { .. })));
        assert!(matches!(parse_ban("\nguess x", 3), Err(BanError::Syntax { line: 2, .. })));
    }

    #[test]
    fn files_round_trip() {
        let text = "assume B believes fresh(nB)\nassume B believes A controls secret(A,m0,B)\nstep A -> B : enc{secret(A,m0,B), nB}kAB by A\ngoal B believes secret(A,m0,B)\n";
        let input = parse_ban(text, 3).unwrap();
        assert_eq!(parse_ban(&input.to_string(), 3).unwrap(), input);
    }
}
