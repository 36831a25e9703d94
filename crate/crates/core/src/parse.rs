//! Concrete syntax for formulas.
//!
//! ```text
//! formula := quant | impl
//! quant   := ("exists" | "forall") IDENT "." formula
//! impl    := disj [ "->" formula ]
//! disj    := conj { "|" conj }
//! conj    := neg  { "&" neg }
//! neg     := "!" neg | "(" formula ")" | atom | "true" | "false"
//! atom    := LETTER "(" IDENT ")"
//!          | PRED "(" IDENT {"," IDENT} ")"
//!          | IDENT ("<" | "<=" | "=") IDENT
//! ```
//!
//! `LETTER` is a single lowercase character. `PRED` is either an
//! uppercase-started identifier or a lowercase identifier of length at least
//! two (registry predicates such as `succ` use lowercase names).

use std::fmt;

use thiserror::Error;

use crate::formula::{Formula, OrderOp, Var};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Exists,
    Forall,
    True,
    False,
    Ident(String),
    UpperIdent(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Lt,
    Le,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Exists => "exists",
            Tok::Forall => "forall",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Ident(s) | Tok::UpperIdent(s) => return write!(f, "{s}"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Eq => "=",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
            }
            '(' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::LParen, line: tline, col: tcol });
            }
            ')' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::RParen, line: tline, col: tcol });
            }
            ',' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Comma, line: tline, col: tcol });
            }
            '.' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Dot, line: tline, col: tcol });
            }
            '!' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Bang, line: tline, col: tcol });
            }
            '&' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Amp, line: tline, col: tcol });
            }
            '|' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Pipe, line: tline, col: tcol });
            }
            '=' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Eq, line: tline, col: tcol });
            }
            '<' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    out.push(Spanned { tok: Tok::Le, line: tline, col: tcol });
                } else {
                    out.push(Spanned { tok: Tok::Lt, line: tline, col: tcol });
                }
            }
            '-' => {
                bump(&mut chars);
                if chars.peek() == Some(&'>') {
                    bump(&mut chars);
                    out.push(Spanned { tok: Tok::Arrow, line: tline, col: tcol });
                } else {
                    return Err(ParseError {
                        line: tline,
                        col: tcol,
                        message: "expected '>' after '-'".into(),
                    });
                }
            }
            c if c.is_ascii_lowercase() => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' {
                        name.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                let tok = match name.as_str() {
                    "exists" => Tok::Exists,
                    "forall" => Tok::Forall,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(name),
                };
                out.push(Spanned { tok, line: tline, col: tcol });
            }
            c if c.is_ascii_uppercase() => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::UpperIdent(name), line: tline, col: tcol });
            }
            c => {
                return Err(ParseError {
                    line: tline,
                    col: tcol,
                    message: format!("unknown token {c:?}"),
                });
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, at: &Spanned, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { line: at.line, col: at.col, message: message.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == tok {
            Ok(())
        } else {
            self.err(&t, format!("expected '{}', found '{}'", tok, t.tok))
        }
    }

    fn expect_ident(&mut self) -> Result<Var, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(name) => Ok(Var(name.clone())),
            other => {
                let msg = format!("expected identifier, found '{other}'");
                self.err(&t, msg)
            }
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek().tok {
            Tok::Exists | Tok::Forall => {
                let t = self.next();
                let var = self.expect_ident()?;
                self.expect(Tok::Dot)?;
                let body = self.formula()?;
                Ok(match t.tok {
                    Tok::Exists => Formula::Exists(var, Box::new(body)),
                    _ => Formula::Forall(var, Box::new(body)),
                })
            }
            _ => self.impl_(),
        }
    }

    fn impl_(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        if self.peek().tok == Tok::Arrow {
            self.next();
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let first = self.conj()?;
        if self.peek().tok != Tok::Pipe {
            return Ok(first);
        }
        let mut children = vec![first];
        while self.peek().tok == Tok::Pipe {
            self.next();
            children.push(self.conj()?);
        }
        Ok(Formula::Or(children))
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let first = self.neg()?;
        if self.peek().tok != Tok::Amp {
            return Ok(first);
        }
        let mut children = vec![first];
        while self.peek().tok == Tok::Amp {
            self.next();
            children.push(self.neg()?);
        }
        Ok(Formula::And(children))
    }

    fn neg(&mut self) -> Result<Formula, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Bang => {
                self.next();
                Ok(Formula::not(self.neg()?))
            }
            Tok::LParen => {
                self.next();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::True => {
                self.next();
                Ok(Formula::True)
            }
            Tok::False => {
                self.next();
                Ok(Formula::False)
            }
            Tok::UpperIdent(name) => {
                self.next();
                self.pred_args(name)
            }
            Tok::Ident(name) => {
                self.next();
                if self.peek().tok == Tok::LParen {
                    if name.chars().count() == 1 {
                        // Letter predicate.
                        self.next();
                        let var = self.expect_ident()?;
                        self.expect(Tok::RParen)?;
                        Ok(Formula::Letter(name.chars().next().unwrap(), var))
                    } else {
                        self.pred_args(name)
                    }
                } else {
                    // Order atom.
                    let op_tok = self.next();
                    let op = match &op_tok.tok {
                        Tok::Lt => OrderOp::Lt,
                        Tok::Le => OrderOp::Le,
                        Tok::Eq => OrderOp::Eq,
                        other => {
                            let msg =
                                format!("expected '<', '<=' or '=' after variable, found '{other}'");
                            return self.err(&op_tok, msg);
                        }
                    };
                    let rhs = self.expect_ident()?;
                    Ok(Formula::Order(op, Var(name), rhs))
                }
            }
            ref other => {
                let msg = format!("expected a formula, found '{other}'");
                self.err(&t, msg)
            }
        }
    }

    fn pred_args(&mut self, name: String) -> Result<Formula, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expect_ident()?];
        loop {
            let t = self.next();
            match &t.tok {
                Tok::Comma => args.push(self.expect_ident()?),
                Tok::RParen => break,
                other => {
                    let msg = format!("expected ',' or ')', found '{other}'");
                    return self.err(&t, msg);
                }
            }
        }
        Ok(Formula::Pred(name, args))
    }
}

/// Parses a formula from its concrete syntax.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.formula()?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return p.err(&t, format!("unexpected '{}' after formula", t.tok));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula as F;

    #[test]
    fn parses_simple_exists() {
        let f = parse_formula("exists x. a(x)").unwrap();
        assert_eq!(f, F::exists("x", F::letter('a', "x")));
    }

    #[test]
    fn parses_toy_formula() {
        let f = parse_formula("exists x. forall y. (a(x) & (x < y -> b(y)))").unwrap();
        let expected = F::exists(
            "x",
            F::forall(
                "y",
                F::And(vec![
                    F::letter('a', "x"),
                    F::implies(F::order(OrderOp::Lt, "x", "y"), F::letter('b', "y")),
                ]),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn missing_comma_is_an_error() {
        let err = parse_formula("P(x y)").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("','"));
    }

    #[test]
    fn unknown_token_reports_position() {
        let err = parse_formula("exists x. a(x) # b").unwrap_err();
        assert!(err.message.contains("unknown token"));
        assert_eq!((err.line, err.col), (1, 16));
    }

    #[test]
    fn lowercase_predicate_names_are_accepted() {
        let f = parse_formula("succ(x, y)").unwrap();
        assert_eq!(f, F::pred("succ", vec!["x".into(), "y".into()]));
    }

    #[test]
    fn order_atoms() {
        assert_eq!(
            parse_formula("x <= y").unwrap(),
            F::order(OrderOp::Le, "x", "y")
        );
        assert_eq!(parse_formula("x = y").unwrap(), F::order(OrderOp::Eq, "x", "y"));
    }

    #[test]
    fn printer_output_reparses() {
        for text in [
            "exists x. forall y. (a(x) & (x < y -> b(y)))",
            "!(exists x. a(x))",
            "((a(x) & b(y)) | !c(z) | true)",
            "(x < y -> exists z. SUCC(z, z))",
        ] {
            let f = parse_formula(text).unwrap();
            let printed = f.to_string();
            let again = parse_formula(&printed).unwrap();
            assert_eq!(f, again, "round-trip failed for {text}: printed {printed}");
        }
    }
}
