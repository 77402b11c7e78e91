//! A loop-free imperative language over integers modulo `m`, and
//! noninterference by exhaustive enumeration of stores.
//!
//! ```text
//! var l:L; var h:H;
//! if h = 0 then h := h + 1 else l := l + 1
//! ```
//!
//! Commands are `skip`, `x := e`, `c; c`, `if e = e then c else c` and
//! `( c )`. Expressions are numbers, variables, `e + e` and `( e )`.
//! `#` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, BTreeSet};

use super::events::Level;
use super::InfoflowError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Const(u64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cmd {
    Skip,
    Assign(usize, Expr),
    Seq(Box<Cmd>, Box<Cmd>),
    If(Expr, Expr, Box<Cmd>, Box<Cmd>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    /// Declared variables with their levels, in declaration order.
    pub vars: Vec<(String, Level)>,
    pub body: Cmd,
}

/// Values of a program's variables, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Store(pub Vec<u64>);

impl Program {
    pub fn var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|(v, _)| v == name)
    }

    fn indices(&self, level: Level) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| self.vars[i].1 == level).collect()
    }

    /// Builds a store from named values; every variable must be given.
    pub fn store(&self, values: &[(&str, u64)]) -> Result<Store, InfoflowError> {
        let map: BTreeMap<&str, u64> = values.iter().copied().collect();
        let mut out = Vec::new();
        for (v, _) in &self.vars {
            out.push(*map.get(v.as_str()).ok_or_else(|| InfoflowError::UnboundVariable(v.clone()))?);
        }
        if let Some((v, _)) = values.iter().find(|(v, _)| self.var(v).is_none()) {
            return Err(InfoflowError::UnboundVariable(v.to_string()));
        }
        Ok(Store(out))
    }

    pub fn show(&self, s: &Store) -> String {
        let items: Vec<String> = self.vars.iter().zip(&s.0).map(|((v, _), x)| format!("{v}={x}")).collect();
        format!("<{}>", items.join(", "))
    }

    fn eval(&self, e: &Expr, s: &Store, modulus: u64) -> u64 {
        match e {
            Expr::Const(c) => c % modulus,
            Expr::Var(i) => s.0[*i],
            Expr::Add(a, b) => (self.eval(a, s, modulus) + self.eval(b, s, modulus)) % modulus,
        }
    }

    fn exec(&self, c: &Cmd, s: &mut Store, modulus: u64) {
        match c {
            Cmd::Skip => {}
            Cmd::Assign(x, e) => s.0[*x] = self.eval(e, s, modulus),
            Cmd::Seq(a, b) => {
                self.exec(a, s, modulus);
                self.exec(b, s, modulus);
            }
            Cmd::If(a, b, t, f) => {
                if self.eval(a, s, modulus) == self.eval(b, s, modulus) {
                    self.exec(t, s, modulus)
                } else {
                    self.exec(f, s, modulus)
                }
            }
        }
    }

    /// Final store of running the program from `store`, arithmetic modulo `modulus`.
    pub fn run(&self, store: &Store, modulus: u64) -> Result<Store, InfoflowError> {
        if modulus < 2 {
            return Err(InfoflowError::BadModulus(modulus));
        }
        if store.0.len() != self.vars.len() {
            return Err(InfoflowError::DomainMismatch);
        }
        if let Some(v) = store.0.iter().find(|v| **v >= modulus) {
            return Err(InfoflowError::OutOfRange { value: *v, modulus });
        }
        let mut s = store.clone();
        self.exec(&self.body, &mut s, modulus);
        Ok(s)
    }

    /// Whether two stores agree on every low variable.
    pub fn l_equiv(&self, a: &Store, b: &Store) -> Result<bool, InfoflowError> {
        if a.0.len() != self.vars.len() || b.0.len() != self.vars.len() {
            return Err(InfoflowError::DomainMismatch);
        }
        Ok(self.indices(Level::L).iter().all(|&i| a.0[i] == b.0[i]))
    }

    fn assemble(&self, low: &[u64], high: &[u64]) -> Store {
        let mut s = vec![0; self.vars.len()];
        for (i, v) in self.indices(Level::L).into_iter().zip(low) {
            s[i] = *v;
        }
        for (i, v) in self.indices(Level::H).into_iter().zip(high) {
            s[i] = *v;
        }
        Store(s)
    }
}

/// All assignments of values below `modulus` to `n` variables, in
/// lexicographic order.
fn assignments(n: usize, modulus: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|p| (0..modulus).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out
}

fn pair_count(p: &Program, modulus: u64) -> Option<u128> {
    let low = p.indices(Level::L).len() as u32;
    let high = p.indices(Level::H).len() as u32;
    (modulus as u128).checked_pow(low + 2 * high)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub inputs: (Store, Store),
    pub outputs: (Store, Store),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NiVerdict {
    pub secure: bool,
    pub counterexample: Option<Counterexample>,
    /// Number of low-equivalent input pairs the verdict covers.
    pub pairs: u128,
}

/// Default bound on the number of store pairs [`check_ni`] will enumerate.
pub const DEFAULT_PAIR_CAP: u128 = 1 << 24;

/// Noninterference by enumerating every pair of low-equivalent stores.
/// The counterexample is the first in lexicographic order of (low values,
/// first high values, second high values).
pub fn check_ni(p: &Program, modulus: u64, cap: u128) -> Result<NiVerdict, InfoflowError> {
    if modulus < 2 {
        return Err(InfoflowError::BadModulus(modulus));
    }
    let pairs = pair_count(p, modulus).filter(|n| *n <= cap).ok_or(InfoflowError::TooLarge {
        required: pair_count(p, modulus).map_or_else(|| "overflow".to_string(), |n| n.to_string()),
        cap,
    })?;
    let highs = assignments(p.indices(Level::H).len(), modulus);
    for low in assignments(p.indices(Level::L).len(), modulus) {
        let runs: Vec<(Store, Store)> = highs
            .iter()
            .map(|h| {
                let s = p.assemble(&low, h);
                let out = p.run(&s, modulus)?;
                Ok((s, out))
            })
            .collect::<Result<_, InfoflowError>>()?;
        for (s1, o1) in &runs {
            for (s2, o2) in &runs {
                if !p.l_equiv(o1, o2)? {
                    let counterexample = Counterexample { inputs: (s1.clone(), s2.clone()), outputs: (o1.clone(), o2.clone()) };
                    return Ok(NiVerdict { secure: false, counterexample: Some(counterexample), pairs });
                }
            }
        }
    }
    Ok(NiVerdict { secure: true, counterexample: None, pairs })
}

/// The same property stated as an inclusion of relations: the relation
/// execution induces on low-equivalent stores is contained in low
/// equivalence.
pub fn refines_low_equivalence(p: &Program, modulus: u64) -> Result<bool, InfoflowError> {
    let stores: Vec<Store> = assignments(p.vars.len(), modulus).into_iter().map(Store).collect();
    let mut induced: BTreeSet<(Store, Store)> = BTreeSet::new();
    for a in &stores {
        for b in &stores {
            if p.l_equiv(a, b)? {
                induced.insert((p.run(a, modulus)?, p.run(b, modulus)?));
            }
        }
    }
    for (a, b) in &induced {
        if !p.l_equiv(a, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Num(u64),
    Sym(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, InfoflowError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let code = raw.split('#').next().unwrap_or("");
        let mut chars = code.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut w = String::new();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        w.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Word(w), line));
            } else if c.is_ascii_digit() {
                let mut v: u64 = 0;
                while let Some(&(_, d)) = chars.peek() {
                    let Some(x) = d.to_digit(10) else { break };
                    v = v.checked_mul(10).and_then(|v| v.checked_add(x as u64)).ok_or(InfoflowError::Syntax { line, message: "number too large".into() })?;
                    chars.next();
                }
                out.push((Tok::Num(v), line));
            } else {
                let sym = [":=", ":", ";", "+", "=", "(", ")"].into_iter().find(|s| code[i..].starts_with(s));
                let Some(sym) = sym else {
                    return Err(InfoflowError::Syntax { line, message: format!("unexpected character `{c}`") });
                };
                for _ in 0..sym.len() {
                    chars.next();
                }
                out.push((Tok::Sym(sym), line));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: Vec<(String, Level)>,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(1, |t| t.1)
    }

    fn err(&self, message: impl Into<String>) -> InfoflowError {
        InfoflowError::Syntax { line: self.line(), message: message.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &'static str) -> Result<(), InfoflowError> {
        if self.eat(&Tok::Sym(s)) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn keyword(&mut self, k: &str) -> bool {
        self.eat(&Tok::Word(k.to_string()))
    }

    fn ident(&mut self) -> Result<String, InfoflowError> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) if !["var", "if", "then", "else", "skip"].contains(&w.as_str()) => {
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.err("expected a variable name")),
        }
    }

    fn variable(&mut self) -> Result<usize, InfoflowError> {
        let name = self.ident()?;
        self.vars.iter().position(|(v, _)| *v == name).ok_or(InfoflowError::UnboundVariable(name))
    }

    fn declarations(&mut self) -> Result<(), InfoflowError> {
        while self.keyword("var") {
            let name = self.ident()?;
            self.expect(":")?;
            let level = match self.ident()?.as_str() {
                "L" => Level::L,
                "H" => Level::H,
                other => return Err(self.err(format!("unknown level `{other}`"))),
            };
            self.expect(";")?;
            if self.vars.iter().any(|(v, _)| *v == name) {
                return Err(self.err(format!("variable `{name}` declared twice")));
            }
            self.vars.push((name, level));
        }
        Ok(())
    }

    fn command(&mut self) -> Result<Cmd, InfoflowError> {
        let first = self.simple()?;
        if self.eat(&Tok::Sym(";")) {
            if self.peek().is_none() || self.peek() == Some(&Tok::Sym(")")) {
                return Ok(first);
            }
            return Ok(Cmd::Seq(Box::new(first), Box::new(self.command()?)));
        }
        Ok(first)
    }

    fn simple(&mut self) -> Result<Cmd, InfoflowError> {
        if self.keyword("skip") {
            return Ok(Cmd::Skip);
        }
        if self.eat(&Tok::Sym("(")) {
            let c = self.command()?;
            self.expect(")")?;
            return Ok(c);
        }
        if self.keyword("if") {
            let a = self.expr()?;
            self.expect("=")?;
            let b = self.expr()?;
            if !self.keyword("then") {
                return Err(self.err("expected `then`"));
            }
            let t = self.simple()?;
            if !self.keyword("else") {
                return Err(self.err("expected `else`"));
            }
            let f = self.simple()?;
            return Ok(Cmd::If(a, b, Box::new(t), Box::new(f)));
        }
        let x = self.variable()?;
        self.expect(":=")?;
        Ok(Cmd::Assign(x, self.expr()?))
    }

    fn expr(&mut self) -> Result<Expr, InfoflowError> {
        let mut e = self.atom()?;
        while self.eat(&Tok::Sym("+")) {
            e = Expr::Add(Box::new(e), Box::new(self.atom()?));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, InfoflowError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Const(n))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => Ok(Expr::Var(self.variable()?)),
        }
    }
}

pub fn parse_program(text: &str) -> Result<Program, InfoflowError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0, vars: Vec::new() };
    p.declarations()?;
    let body = if p.peek().is_none() { Cmd::Skip } else { p.command()? };
    if p.peek().is_some() {
        return Err(p.err("unexpected input after the program"));
    }
    Ok(Program { vars: p.vars, body })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequencing_and_grouping() {
        let p = parse_program("var x:L; var y:H;\nx := 1; (if x = 1 then y := 2 else skip); x := x + y + 1;").unwrap();
        let out = p.run(&p.store(&[("x", 0), ("y", 0)]).unwrap(), 16).unwrap();
        assert_eq!(out, p.store(&[("x", 4), ("y", 2)]).unwrap());
    }

    #[test]
    fn arithmetic_wraps() {
        let p = parse_program("var x:L; x := x + 3").unwrap();
        assert_eq!(p.run(&Store(vec![2]), 4).unwrap(), Store(vec![1]));
        assert!(p.run(&Store(vec![4]), 4).is_err());
    }

    #[test]
    fn rejects_bad_programs() {
        assert!(matches!(parse_program("var l:L; h := 1"), Err(InfoflowError::UnboundVariable(v)) if v == "h"));
        assert!(matches!(parse_program("var l:L; l := "), Err(InfoflowError::Syntax { .. })));
        assert!(matches!(parse_program("var l:M;"), Err(InfoflowError::Syntax { .. })));
        assert!(matches!(parse_program("var l:L; if l = 0 then skip"), Err(InfoflowError::Syntax { .. })));
    }

    #[test]
    fn cap_is_enforced() {
        let p = parse_program("var a:H; var b:H; var c:L; skip").unwrap();
        assert!(matches!(check_ni(&p, 16, 1000), Err(InfoflowError::TooLarge { .. })));
    }
}
