//! Epistemic-temporal formulas and their ASCII syntax.
//!
//! ```text
//! f ::= f -> f | f '|' f | f & f | !f | K[i] f | P[i] f | X^n f
//!     | true | false | name(arg, ...) | name | ( f )
//! ```
//!
//! `->` is right-associative and binds weakest; the prefix operators bind
//! tightest. Atom arguments are kept as trimmed text, so they may be agent
//! names, card numbers or whole message terms such as `enc(m,k)`.

use std::fmt;
use std::str::FromStr;

use super::EpistemicError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub name: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<S: Into<String>>(name: &str, args: impl IntoIterator<Item = S>) -> Atom {
        Atom { name: name.to_string(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}({})", self.name, self.args.join(","))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Agent knows the body.
    K(String, Box<Formula>),
    /// Agent considers the body possible: `!K[i] !f`.
    P(String, Box<Formula>),
    /// The body holds `n` steps later on the same trace.
    X(usize, Box<Formula>),
}

impl Formula {
    pub fn atom<S: Into<String>>(name: &str, args: impl IntoIterator<Item = S>) -> Formula {
        Formula::Atom(Atom::new(name, args))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn knows(agent: &str, f: Formula) -> Formula {
        Formula::K(agent.to_string(), Box::new(f))
    }

    pub fn possible(agent: &str, f: Formula) -> Formula {
        Formula::P(agent.to_string(), Box::new(f))
    }

    pub fn next(n: usize, f: Formula) -> Formula {
        Formula::X(n, Box::new(f))
    }

    /// Conjunction of all items; `true` when there are none.
    pub fn all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// Disjunction of all items; `false` when there are none.
    pub fn any(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
    }

    /// Agents named by knowledge operators anywhere in the formula.
    pub fn agents(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::K(i, _) | Formula::P(i, _) = f {
                out.push(i.as_str());
            }
        });
        out
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Atom(a) = f {
                out.push(a);
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(a) | Formula::K(_, a) | Formula::P(_, a) | Formula::X(_, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(a) => write!(f, "!{}", Wrapped(a)),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::K(i, a) => write!(f, "K[{i}] {}", Wrapped(a)),
            Formula::P(i, a) => write!(f, "P[{i}] {}", Wrapped(a)),
            Formula::X(n, a) => write!(f, "X^{n} {}", Wrapped(a)),
        }
    }
}

/// Prints prefix-operator bodies so that they re-parse unchanged.
struct Wrapped<'a>(&'a Formula);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Formula::And(..) | Formula::Or(..) | Formula::Implies(..) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
        }
    }
}

impl FromStr for Formula {
    type Err = EpistemicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, EpistemicError> {
    let mut p = Parser { src: text, pos: 0 };
    let f = p.implication()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> EpistemicError {
        EpistemicError::Parse { offset: self.pos, message: message.to_string() }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula, EpistemicError> {
        let left = self.disjunction()?;
        if self.eat("->") {
            let right = self.implication()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Formula, EpistemicError> {
        let mut f = self.conjunction()?;
        while self.eat("|") {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, EpistemicError> {
        let mut f = self.unary()?;
        while self.eat("&") {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn agent_index(&mut self) -> Result<String, EpistemicError> {
        if !self.eat("[") {
            return Err(self.error("expected `[agent]`"));
        }
        let end = self.rest().find(']').ok_or_else(|| self.error("missing `]`"))?;
        let name = self.rest()[..end].trim().to_string();
        if name.is_empty() {
            return Err(self.error("empty agent name"));
        }
        self.pos += end + 1;
        Ok(name)
    }

    fn unary(&mut self) -> Result<Formula, EpistemicError> {
        self.skip_ws();
        if self.eat("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat("(") {
            let f = self.implication()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(f);
        }
        let word = self.word();
        match word.as_str() {
            "" => Err(self.error("expected a formula")),
            "K" | "P" if self.rest().trim_start().starts_with('[') => {
                let agent = self.agent_index()?;
                let body = self.unary()?;
                Ok(if word == "K" { Formula::knows(&agent, body) } else { Formula::possible(&agent, body) })
            }
            "X" if self.rest().starts_with('^') => {
                self.pos += 1;
                let digits = self.word();
                let n = digits.parse().map_err(|_| self.error("expected a step count after `X^`"))?;
                Ok(Formula::next(n, self.unary()?))
            }
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            name => {
                let name = name.to_string();
                let args = if self.rest().starts_with('(') { self.arguments()? } else { Vec::new() };
                Ok(Formula::Atom(Atom { name, args }))
            }
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let len = self.rest().find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(self.rest().len());
        let w = self.rest()[..len].to_string();
        self.pos += len;
        w
    }

    /// Comma-separated arguments, splitting only at depth one.
    fn arguments(&mut self) -> Result<Vec<String>, EpistemicError> {
        self.pos += 1;
        let start = self.pos;
        let mut depth = 1;
        let mut args = Vec::new();
        let mut from = start;
        for (i, c) in self.src[start..].char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        args.push(self.src[from..start + i].trim().to_string());
                        self.pos = start + i + 1;
                        if args.iter().any(String::is_empty) {
                            return Err(self.error("empty atom argument"));
                        }
                        return Ok(args);
                    }
                }
                ',' if depth == 1 => {
                    args.push(self.src[from..start + i].trim().to_string());
                    from = start + i + 1;
                }
                _ => {}
            }
        }
        Err(self.error("unclosed atom arguments"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let f = parse_formula("a & b | c -> d -> e").unwrap();
        let a = || Formula::atom::<&str>("a", []);
        let expected = Formula::implies(
            Formula::or(Formula::and(a(), Formula::atom::<&str>("b", [])), Formula::atom::<&str>("c", [])),
            Formula::implies(Formula::atom::<&str>("d", []), Formula::atom::<&str>("e", [])),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn modal_operators_bind_tightly() {
        let f = parse_formula("K[B] in_hand(0,A) & !P[E] x").unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::knows("B", Formula::atom("in_hand", ["0", "A"])),
                Formula::not(Formula::possible("E", Formula::atom::<&str>("x", []))),
            )
        );
        let g = parse_formula("X^4 (paid(1) | !paid(1))").unwrap();
        assert!(matches!(g, Formula::X(4, _)));
    }

    #[test]
    fn term_arguments_keep_nesting() {
        let f = parse_formula("part(B, enc(pair(m,n),k(AS)))").unwrap();
        assert_eq!(f, Formula::atom("part", ["B", "enc(pair(m,n),k(AS))"]));
    }

    #[test]
    fn display_round_trips() {
        for s in ["X^4 (!paid(1) -> K[1] (paid(2) | paid(3)) & !K[1] paid(2))", "P[j] performed(i,pay)", "true | false"] {
            let f = parse_formula(s).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f, "{s}");
        }
    }

    #[test]
    fn syntax_errors() {
        for s in ["", "a &", "K a", "X^ a", "(a", "f(a,)", "a b"] {
            assert!(parse_formula(s).is_err(), "{s}");
        }
    }
}
