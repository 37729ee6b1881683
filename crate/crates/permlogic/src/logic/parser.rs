//! Recursive-descent parser for the formula grammar.
//!
//! Connective precedence, loosest to tightest: `<->`, `->`, `|`, `&`, `!`;
//! all binary connectives associate to the left. Quantifier bodies extend
//! maximally to the right.

use thiserror::Error;

use super::formula::{is_set_var, Formula};
use super::Signature;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(u32),
    /// `<`, `<1`, `<2`, ... — validated against the signature later.
    InfixRel(String),
    Eq,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '<' => {
                if text[i..].starts_with("<->") {
                    i += 3;
                    Tok::DArrow
                } else {
                    i += 1;
                    let mut sym = String::from("<");
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        sym.push(bytes[i] as char);
                        i += 1;
                    }
                    Tok::InfixRel(sym)
                }
            }
            '-' => {
                if text[i..].starts_with("->") {
                    i += 2;
                    Tok::Arrow
                } else {
                    return Err(ParseError { pos: i, msg: "unexpected `-`".into() });
                }
            }
            '=' => {
                i += 1;
                Tok::Eq
            }
            '!' => {
                i += 1;
                Tok::Bang
            }
            '&' => {
                i += 1;
                Tok::Amp
            }
            '|' => {
                i += 1;
                Tok::Pipe
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '[' => {
                i += 1;
                Tok::LBracket
            }
            ']' => {
                i += 1;
                Tok::RBracket
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '.' => {
                i += 1;
                Tok::Dot
            }
            c if c.is_ascii_digit() => {
                let mut val: u32 = 0;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    val = val
                        .checked_mul(10)
                        .and_then(|v| v.checked_add((bytes[i] - b'0') as u32))
                        .ok_or_else(|| ParseError { pos: start, msg: "number too large".into() })?;
                    i += 1;
                }
                Tok::Number(val)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        name.push(d);
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Ident(name)
            }
            other => {
                return Err(ParseError { pos: i, msg: format!("unexpected character `{other}`") });
            }
        };
        toks.push((tok, start));
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
    text_len: usize,
}

/// Parses `text` into a formula, validating relation symbols, arities and
/// variable-case conventions against `signature`.
pub fn parse_formula(text: &str, signature: &Signature) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, sig: signature, text_len: text.len() };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return Err(p.err_here("unexpected trailing input"));
    }
    Ok(f)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.text_len, |&(_, p)| p)
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        ParseError { pos: self.here(), msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some(Tok::Number(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err_here("expected a number")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while self.peek() == Some(&Tok::DArrow) {
            self.pos += 1;
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.disjunction()?;
        while self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.disjunction()?;
            lhs = Formula::implies(lhs, rhs);
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                // Quantifier keywords, unless followed by `(` (then they are
                // relation symbols, e.g. `E(x,y)`).
                let quantifier = matches!(name.as_str(), "E" | "A" | "ES" | "AS")
                    && !matches!(self.peek2(), Some(Tok::LParen));
                if quantifier {
                    return self.quantified(&name);
                }
                if name == "card" && self.peek2() == Some(&Tok::LBracket) {
                    return self.card_atom();
                }
                self.atom()
            }
            _ => Err(self.err_here("expected a formula")),
        }
    }

    fn quantified(&mut self, keyword: &str) -> Result<Formula, ParseError> {
        self.pos += 1; // keyword
        let var_pos = self.here();
        let var = self.ident("a variable after the quantifier")?;
        let set_binder = keyword.ends_with('S');
        if set_binder && !is_set_var(&var) {
            return Err(ParseError {
                pos: var_pos,
                msg: format!("`{keyword}` binds a set variable; `{var}` is not uppercase"),
            });
        }
        if !set_binder && is_set_var(&var) {
            return Err(ParseError {
                pos: var_pos,
                msg: format!("`{keyword}` binds an element variable; `{var}` is not lowercase"),
            });
        }
        self.expect(Tok::Dot, "`.` after the quantified variable")?;
        let body = self.formula()?;
        Ok(match keyword {
            "E" => Formula::exists(&var, body),
            "A" => Formula::forall(&var, body),
            "ES" => Formula::exists_set(&var, body),
            _ => Formula::forall_set(&var, body),
        })
    }

    fn card_atom(&mut self) -> Result<Formula, ParseError> {
        let start = self.here();
        self.pos += 1; // `card`
        self.expect(Tok::LBracket, "`[`")?;
        let q = self.number()?;
        self.expect(Tok::Comma, "`,`")?;
        let r = self.number()?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::LParen, "`(`")?;
        let set_pos = self.here();
        let set = self.ident("a set variable")?;
        self.expect(Tok::RParen, "`)`")?;
        if !self.sig.card_atoms_allowed() {
            return Err(ParseError {
                pos: start,
                msg: format!("cardinality atoms are not allowed over signature {}", self.sig.name()),
            });
        }
        if r < 2 || q >= r {
            return Err(ParseError { pos: start, msg: format!("card requires r >= 2 and q < r, got q={q}, r={r}") });
        }
        if !is_set_var(&set) {
            return Err(ParseError { pos: set_pos, msg: format!("`{set}` is not a set variable") });
        }
        Ok(Formula::card(q, r, &set))
    }

    fn element_var(&mut self, what: &str) -> Result<String, ParseError> {
        let pos = self.here();
        let v = self.ident(what)?;
        if is_set_var(&v) {
            return Err(ParseError { pos, msg: format!("`{v}` is not an element variable (must be lowercase)") });
        }
        Ok(v)
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let name_pos = self.here();
        let name = self.ident("a variable or relation symbol")?;
        match self.peek() {
            Some(Tok::LParen) => {
                // Relation application R(x1, ..., xk).
                self.pos += 1;
                let mut args = vec![self.element_var("an argument variable")?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    args.push(self.element_var("an argument variable")?);
                }
                self.expect(Tok::RParen, "`)`")?;
                let Some(arity) = self.sig.arity(&name) else {
                    return Err(ParseError {
                        pos: name_pos,
                        msg: format!("unknown relation symbol `{name}` in signature {}", self.sig.name()),
                    });
                };
                if arity != args.len() {
                    return Err(ParseError {
                        pos: name_pos,
                        msg: format!("`{name}` has arity {arity}, got {} arguments", args.len()),
                    });
                }
                Ok(Formula::Atom { rel: name, args })
            }
            Some(Tok::InfixRel(rel)) => {
                let rel = rel.clone();
                let rel_pos = self.here();
                if is_set_var(&name) {
                    return Err(ParseError {
                        pos: name_pos,
                        msg: format!("`{name}` is not an element variable (must be lowercase)"),
                    });
                }
                self.pos += 1;
                let rhs = self.element_var("a variable")?;
                if self.sig.arity(&rel) != Some(2) {
                    return Err(ParseError {
                        pos: rel_pos,
                        msg: format!("unknown relation symbol `{rel}` in signature {}", self.sig.name()),
                    });
                }
                Ok(Formula::Atom { rel, args: vec![name, rhs] })
            }
            Some(Tok::Eq) => {
                if is_set_var(&name) {
                    return Err(ParseError {
                        pos: name_pos,
                        msg: format!("`{name}` is not an element variable (must be lowercase)"),
                    });
                }
                self.pos += 1;
                let rhs = self.element_var("a variable")?;
                Ok(Formula::Equal(name, rhs))
            }
            Some(Tok::Ident(kw)) if kw == "in" => {
                if is_set_var(&name) {
                    return Err(ParseError {
                        pos: name_pos,
                        msg: format!("`{name}` is not an element variable (must be lowercase)"),
                    });
                }
                self.pos += 1;
                if !self.sig.set_atoms_allowed() {
                    return Err(ParseError {
                        pos: name_pos,
                        msg: format!("membership atoms are not allowed over signature {}", self.sig.name()),
                    });
                }
                let set_pos = self.here();
                let set = self.ident("a set variable")?;
                if !is_set_var(&set) {
                    return Err(ParseError { pos: set_pos, msg: format!("`{set}` is not a set variable") });
                }
                Ok(Formula::member(&name, &set))
            }
            _ => Err(self.err_here("expected `=`, `in`, an order symbol or `(` after the identifier")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Signature;

    fn toto(text: &str) -> Result<Formula, ParseError> {
        parse_formula(text, &Signature::toto())
    }

    #[test]
    fn parses_quantifiers_and_negation() {
        let f = toto("E x. A y. !(y <2 x)").unwrap();
        assert_eq!(f.analyze().quantifier_depth, 2);
        assert!(f.is_sentence());
    }

    #[test]
    fn rejects_unknown_symbols() {
        let err = toto("E x. x <3 y").unwrap_err();
        assert!(err.msg.contains("unknown relation symbol `<3`"), "{}", err.msg);
        let err = parse_formula("E(x,y)", &Signature::toto()).unwrap_err();
        assert!(err.msg.contains("unknown relation symbol `E`"));
    }

    #[test]
    fn case_conventions() {
        assert!(toto("E X. x = x").is_err());
        assert!(toto("ES x. x = x").is_err());
        assert!(toto("E x. x in y").is_err());
        assert!(toto("E x. X <1 x").is_err());
        assert!(toto("ES X. E x. x in X").is_ok());
    }

    #[test]
    fn card_atoms() {
        let f = toto("ES X. card[0,2](X)").unwrap();
        assert_eq!(f.to_string(), "ES X. card[0,2](X)");
        assert!(toto("ES X. card[2,2](X)").is_err());
        assert!(parse_formula("ES X. card[0,2](X)", &Signature::graph()).is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let f = toto("x = x & y = y | x = y -> x <1 y <-> x <2 y").unwrap();
        // ((x=x & y=y) | x=y) -> x<1y, all <-> x<2y
        match f {
            Formula::Iff(lhs, _) => match *lhs {
                Formula::Implies(l, _) => assert!(matches!(*l, Formula::Or(..))),
                other => panic!("expected implication, got {other}"),
            },
            other => panic!("expected iff, got {other}"),
        }
        // Left associativity.
        let g = toto("x = x -> y = y -> x = y").unwrap();
        assert!(matches!(g, Formula::Implies(ref l, _) if matches!(**l, Formula::Implies(..))));
    }

    #[test]
    fn quantifier_body_extends_right() {
        let f = toto("E x. x = x & x <1 x").unwrap();
        assert!(matches!(f, Formula::Exists { .. }));
        let g = toto("(E x. x = x) & x <1 y").unwrap();
        assert!(matches!(g, Formula::And(..)));
    }

    #[test]
    fn word_and_incidence_atoms() {
        let sig = Signature::word(&['a', 'b']).unwrap();
        let f = parse_formula("E x. Pa(x) & !Pb(x)", &sig).unwrap();
        assert!(f.is_sentence());
        let sig = Signature::incidence();
        let f = parse_formula("A v. vertex(v) -> E e. edge(e) & Inc(e,v)", &sig).unwrap();
        assert_eq!(f.analyze().quantifier_depth, 2);
    }

    #[test]
    fn error_positions() {
        let err = toto("E x. x <1").unwrap_err();
        assert_eq!(err.pos, 9);
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "E x. A y. !(y <2 x)",
            "ES X. ES Y. (A x. x in X | x in Y) & (A x. A y. x in X & y in X -> (x <1 y <-> x <2 y))",
            "x = y -> (y = x -> x = y)",
            "!(x = y & y = x)",
            "card[1,3](X) & x in X",
            "A x. (E y. y <1 x) -> x = x",
        ] {
            let f = toto(text).unwrap();
            let printed = f.to_string();
            let again = toto(&printed).unwrap();
            assert_eq!(again, f, "`{text}` printed as `{printed}`");
        }
    }
}
