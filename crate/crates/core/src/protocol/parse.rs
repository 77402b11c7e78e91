use std::collections::BTreeMap;

use super::{compile, Claim, ProtocolError, ProtocolSpec, SharedKeyDecl, Step};
use crate::term::{parse_term, Term};

/// Parses and validates a protocol description.
///
/// Validation includes compiling every role, so executability problems
/// surface here with the offending step.
pub fn parse_protocol(text: &str) -> Result<ProtocolSpec, ProtocolError> {
    let spec = parse_unchecked(text)?;
    compile(&spec)?;
    Ok(spec)
}

fn syntax(line: usize, message: impl Into<String>) -> ProtocolError {
    ProtocolError::Syntax { line, message: message.into() }
}

fn parse_unchecked(text: &str) -> Result<ProtocolSpec, ProtocolError> {
    let mut spec = ProtocolSpec::default();
    let mut fresh: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with(|c: char| c.is_ascii_digit()) {
            spec.steps.push(parse_step(line, line_no)?);
            continue;
        }
        for directive in line.split(';').map(str::trim).filter(|d| !d.is_empty()) {
            let (head, rest) = directive.split_once(char::is_whitespace).unwrap_or((directive, ""));
            let rest = rest.trim();
            let words = || rest.split_whitespace().map(str::to_string);
            match head {
                "protocol" => spec.name = rest.to_string(),
                "agents" => spec.roles.extend(words()),
                "trusted" => spec.trusted.extend(words()),
                "keys" => {
                    for decl in rest.split_whitespace() {
                        spec_key(&mut spec, decl, line_no)?;
                    }
                }
                "fresh" | "knows" => {
                    let (role, names) = rest.split_once(':').ok_or_else(|| syntax(line_no, format!("expected `{head} <role>: ...`")))?;
                    let role = role.trim().to_string();
                    if head == "fresh" {
                        fresh.entry(role).or_default().extend(names.split_whitespace().map(str::to_string));
                    } else {
                        let entry = spec.knows.entry(role).or_default();
                        for name in names.split_whitespace() {
                            entry.push(parse_term(name).map_err(|source| ProtocolError::Term { line: line_no, source })?);
                        }
                    }
                }
                "secret" => {
                    for name in words() {
                        spec.claims.push(Claim::Secret(name));
                    }
                }
                "agree" => {
                    let w: Vec<String> = words().collect();
                    if w.len() != 2 {
                        return Err(syntax(line_no, "expected `agree <claimer> <peer>`"));
                    }
                    spec.claims.push(Claim::Agree { claimer: w[0].clone(), peer: w[1].clone() });
                }
                other => return Err(syntax(line_no, format!("unknown directive `{other}`"))),
            }
        }
    }
    spec.fresh = fresh;
    if spec.name.is_empty() {
        return Err(syntax(1, "missing `protocol <name>` header"));
    }
    check_structure(&spec)?;
    Ok(spec)
}

fn spec_key(spec: &mut ProtocolSpec, decl: &str, line: usize) -> Result<(), ProtocolError> {
    if let Some(inner) = decl.strip_prefix("keypair(").and_then(|d| d.strip_suffix(')')) {
        spec.keypairs.push(inner.trim().to_string());
        return Ok(());
    }
    let (lhs, name) = decl.split_once('=').ok_or_else(|| syntax(line, format!("bad key declaration `{decl}`")))?;
    let inner = lhs
        .strip_prefix("shared(")
        .and_then(|d| d.strip_suffix(')'))
        .ok_or_else(|| syntax(line, format!("bad key declaration `{decl}`")))?;
    let (a, b) = inner.split_once(',').ok_or_else(|| syntax(line, "shared key needs two roles"))?;
    spec.shared_keys.push(SharedKeyDecl { first: a.trim().into(), second: b.trim().into(), name: name.trim().into() });
    Ok(())
}

fn parse_step(line: &str, line_no: usize) -> Result<Step, ProtocolError> {
    let (idx, rest) = line.split_once('.').ok_or_else(|| syntax(line_no, "expected `<n>. X -> Y : term`"))?;
    let index: usize = idx.trim().parse().map_err(|_| syntax(line_no, "bad step index"))?;
    let (route, msg) = rest.split_once(':').ok_or_else(|| syntax(line_no, "expected `:` before message"))?;
    let (from, to) = route.split_once("->").ok_or_else(|| syntax(line_no, "expected `->`"))?;
    let message = parse_term(msg.trim()).map_err(|source| ProtocolError::Term { line: line_no, source })?;
    Ok(Step { index, sender: from.trim().to_string(), receiver: to.trim().to_string(), message })
}

fn check_structure(spec: &ProtocolSpec) -> Result<(), ProtocolError> {
    for (i, step) in spec.steps.iter().enumerate() {
        if step.index != i + 1 {
            return Err(ProtocolError::Invalid { step: step.index, message: format!("step indices must be contiguous from 1 (expected {})", i + 1) });
        }
        for r in [&step.sender, &step.receiver] {
            if !spec.is_role(r) {
                return Err(ProtocolError::Invalid { step: step.index, message: format!("unknown role `{r}`") });
            }
        }
        if step.sender == step.receiver {
            return Err(ProtocolError::Invalid { step: step.index, message: "sender and receiver coincide".into() });
        }
    }
    if spec.steps.is_empty() {
        return Err(ProtocolError::Invalid { step: 0, message: "protocol has no steps".into() });
    }
    if spec.is_trusted(&spec.steps[0].sender) {
        return Err(ProtocolError::Unsupported("the first message must be sent by an ordinary role".into()));
    }
    if spec.roles.len() != 2 {
        return Err(ProtocolError::Unsupported("exactly two ordinary roles (initiator and responder) are supported".into()));
    }
    let roles_ok = |r: &String| spec.is_role(r);
    for k in &spec.shared_keys {
        if !roles_ok(&k.first) || !roles_ok(&k.second) {
            return Err(ProtocolError::Invalid { step: 0, message: format!("key `{}` mentions an unknown role", k.name) });
        }
    }
    for r in spec.keypairs.iter().chain(spec.fresh.keys()).chain(spec.knows.keys()) {
        if !roles_ok(r) {
            return Err(ProtocolError::Invalid { step: 0, message: format!("unknown role `{r}` in declaration") });
        }
    }
    for c in &spec.claims {
        if let Claim::Agree { claimer, peer } = c {
            if !roles_ok(claimer) || !roles_ok(peer) || claimer == peer {
                return Err(ProtocolError::Invalid { step: 0, message: format!("bad claim `{c}`") });
            }
        }
    }
    Ok(())
}

/// Term helper used by the compiler: fresh names are written with the same
/// lexical conventions as terms.
pub(crate) fn fresh_term(name: &str) -> Term {
    crate::term::parse_term(name).unwrap_or_else(|_| Term::text(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PROT9: &str = "\
protocol prot9
agents A B ; trusted S
keys shared(A,S)=kAS shared(B,S)=kBS
fresh A: nA nA2 ; fresh B: nB nB2 ; fresh S: ksess
1. A -> B : nA
2. B -> S : tuple(A, nA, nB, nB2)
3. S -> A : tuple(nB2, enc(tuple(B,ksess,nA),k(AS)), enc(tuple(A,ksess,nB),k(BS)))
4. A -> B : tuple(nA2, enc(tuple(A,ksess,nB),k(BS)), enc(tuple(A,nB2),ksess))
5. B -> A : enc(tuple(B,nA2),ksess)
secret ksess
agree A B ; agree B A
";

    #[test]
    fn reads_prot9() {
        let spec = parse_protocol(PROT9).unwrap();
        assert_eq!(spec.steps.len(), 5);
        assert_eq!(spec.fresh["A"], vec!["nA", "nA2"]);
        assert_eq!(spec.fresh["B"], vec!["nB", "nB2"]);
        assert_eq!(spec.fresh["S"], vec!["ksess"]);
        assert_eq!(spec.claims.len(), 3);
        assert!(spec.claims.contains(&Claim::Secret("ksess".into())));
        assert!(spec.claims.contains(&Claim::Agree { claimer: "B".into(), peer: "A".into() }));
    }

    #[test]
    fn reads_sample_without_claims() {
        let spec = parse_protocol("protocol sample\nagents A B\nknows A: m1\nknows B: m2\n1. A -> B : m1\n2. B -> A : m2\n").unwrap();
        assert_eq!(spec.steps.len(), 2);
        assert!(spec.claims.is_empty());
    }

    #[test]
    fn rejects_sending_unreceived_variable() {
        let src = "protocol bad\nagents A B\nfresh A: nA\n1. A -> B : B\n2. B -> A : nA\n";
        assert!(matches!(parse_protocol(src), Err(ProtocolError::Inexecutable { step: 2, .. })));
    }

    #[test]
    fn rejects_gaps_in_step_numbers() {
        let src = "protocol bad\nagents A B\nfresh A: nA\n1. A -> B : nA\n3. B -> A : nA\n";
        assert!(matches!(parse_protocol(src), Err(ProtocolError::Invalid { step: 3, .. })));
    }

    #[test]
    fn rejects_undeclared_nonce() {
        let src = "protocol bad\nagents A B\n1. A -> B : nZ\n";
        assert!(matches!(parse_protocol(src), Err(ProtocolError::UnboundVariable { step: 1, .. })));
    }

    #[test]
    fn print_then_parse_is_identity() {
        let spec = parse_protocol(PROT9).unwrap();
        let again = parse_protocol(&spec.to_string()).unwrap();
        assert_eq!(spec, again);
    }
}
