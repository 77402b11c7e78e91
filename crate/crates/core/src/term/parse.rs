use thiserror::Error;

use super::{classify_bare, is_ident_char, KeyKind, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown key kind `{kind}` at offset {offset}")]
    UnknownKeyKind { offset: usize, kind: String },
}

/// Parses a term in the ASCII grammar
/// `A | nX | kX | k(X) | pk(X) | sk(X) | "lit" | pair(t,t) | enc(t,t) | tuple(t,...)`.
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    let mut p = TermParser::new(text);
    let t = p.term()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(t)
}

pub(crate) struct TermParser<'a> {
    pub(crate) src: &'a str,
    pub(crate) pos: usize,
}

impl<'a> TermParser<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        TermParser { src, pos: 0 }
    }

    pub(crate) fn error(&self, message: &str) -> TermError {
        TermError::Syntax { offset: self.pos, message: message.to_string() }
    }

    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), TermError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else if self.peek().is_none() {
            Err(self.error(&format!("unexpected end of input, expected `{c}`")))
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, TermError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_ident_char(c) {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(if self.peek().is_none() {
                self.error("unexpected end of input")
            } else {
                self.error("expected identifier")
            });
        }
        Ok(self.src[start..self.pos].to_string())
    }

    pub(crate) fn term(&mut self) -> Result<Term, TermError> {
        self.skip_ws();
        if self.peek() == Some('"') {
            self.pos += 1;
            let start = self.pos;
            while let Some(c) = self.peek() {
                if c == '"' {
                    let lit = self.src[start..self.pos].to_string();
                    self.pos += 1;
                    return Ok(Term::text(lit));
                }
                self.pos += c.len_utf8();
            }
            return Err(self.error("unterminated literal"));
        }
        let start = self.pos;
        let name = self.ident()?;
        self.skip_ws();
        if self.peek() != Some('(') {
            return Ok(classify_bare(&name));
        }
        self.pos += 1;
        match name.as_str() {
            "pair" | "enc" => {
                let a = self.term()?;
                self.expect(',')?;
                let b = self.term()?;
                self.expect(')')?;
                Ok(if name == "pair" { Term::pair(a, b) } else { Term::enc(a, b) })
            }
            "tuple" => {
                let mut items = vec![self.term()?];
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => {
                            self.pos += 1;
                            items.push(self.term()?);
                        }
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(self.error("unexpected end of input, expected `)`")),
                        _ => return Err(self.error("expected `,` or `)`")),
                    }
                }
                Ok(Term::tuple(items))
            }
            "k" | "pk" | "sk" => {
                let id = self.ident()?;
                self.expect(')')?;
                let kind = match name.as_str() {
                    "k" => KeyKind::Shared,
                    "pk" => KeyKind::Public,
                    _ => KeyKind::Private,
                };
                Ok(Term::Key(id.into(), kind))
            }
            other if other.ends_with('k') => Err(TermError::UnknownKeyKind { offset: start, kind: other.to_string() }),
            other => Err(TermError::Syntax { offset: start, message: format!("unknown constructor `{other}`") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_public_key_encryption() {
        let t = parse_term("enc(pair(A,nA), pk(B))").unwrap();
        assert_eq!(t, Term::enc(Term::pair(Term::agent("A"), Term::nonce("nA")), Term::public_key("B")));
    }

    #[test]
    fn lowercase_names_are_plaintexts() {
        assert_eq!(parse_term("pair(m1,m2)").unwrap(), Term::pair(Term::text("m1"), Term::text("m2")));
    }

    #[test]
    fn truncated_input_reports_offset() {
        match parse_term("enc(m,") {
            Err(TermError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_kind() {
        assert!(matches!(parse_term("xk(A)"), Err(TermError::UnknownKeyKind { .. })));
        assert!(matches!(parse_term("foo(A)"), Err(TermError::Syntax { .. })));
    }

    #[test]
    fn bare_key_and_literal_forms() {
        assert_eq!(parse_term("kAS").unwrap(), Term::shared_key("kAS"));
        assert_eq!(parse_term("k(AS)").unwrap(), Term::shared_key("AS"));
        assert_eq!(parse_term("\"hi there\"").unwrap(), Term::text("hi there"));
        assert_eq!(parse_term("tuple(A, B)").unwrap(), Term::pair(Term::agent("A"), Term::agent("B")));
    }

    #[test]
    fn prints_what_it_parses() {
        for src in [
            "enc(tuple(B,ksess,nA),k(AS))",
            "tuple(nB2,enc(tuple(B,ksess,nA),k(AS)),enc(tuple(A,ksess,nB),k(BS)))",
            "enc(pair(nA,nB),sk(A))",
            "\"x y\"",
        ] {
            let t = parse_term(src).unwrap();
            assert_eq!(t.to_string(), src);
        }
    }
}
