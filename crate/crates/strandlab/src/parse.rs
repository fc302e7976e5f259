//! Text grammar for terms, keys and signed terms.
//!
//! ```text
//! signed  := ('+' | '-' | '⊕' | '⊖')? term
//! term    := prim (('.' | '⋅') term)?            -- right-associative
//! prim    := '$' ident
//!          | '#' keyexpr
//!          | '{' term '}' keyexpr                -- ASCII encryption
//!          | '⟨' term '⟩' '_'? '(' keyexpr ')'   -- display encryption
//!          | '(' term ')'
//! keyexpr := 'sk' '(' ident ',' ident ')'
//!          | 'pk' '(' ident ')' | 'pk' '-' '1' '(' ident ')'
//!          | 'master' | 'dev' '(' nat ')' | 'raw' '(' ident ')'
//! ```
//!
//! Rendering (the `Display` impls in [`crate::term`]) always produces the
//! `⋅` / `⟨…⟩_(k)` form; the parser accepts both, so rendered terms round-trip.

use std::fmt;

use thiserror::Error;

use crate::term::{Key, Sign, SignedTerm, Term, TextAtom};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Dollar,
    Hash,
    LBrace,
    RBrace,
    LAngle,
    RAngle,
    Underscore,
    LParen,
    RParen,
    Comma,
    Dot,
    Plus,
    Minus,
    Ident(String),
    Nat(u32),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Dollar => f.write_str("'$'"),
            Tok::Hash => f.write_str("'#'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LAngle => f.write_str("'⟨'"),
            Tok::RAngle => f.write_str("'⟩'"),
            Tok::Underscore => f.write_str("'_'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Ident(s) => write!(f, "identifier '{}'", s),
            Tok::Nat(n) => write!(f, "number '{}'", n),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '*'
}

pub(crate) struct Lexer;

impl Lexer {
    /// Tokenize a single line; positions are (line, col) with 1-based columns.
    pub(crate) fn tokenize(src: &str, line: usize) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut toks = Vec::new();
        let mut chars = src.char_indices().peekable();
        let mut col = 0usize;
        while let Some((_, c)) = chars.next() {
            col += 1;
            let start_col = col;
            let tok = match c {
                ' ' | '\t' => continue,
                '$' => Tok::Dollar,
                '#' => Tok::Hash,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '⟨' | '〈' => Tok::LAngle,
                '⟩' | '〉' => Tok::RAngle,
                '_' => Tok::Underscore,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' | '⋅' | '·' => Tok::Dot,
                '+' | '⊕' => Tok::Plus,
                '-' | '⊖' | '−' => Tok::Minus,
                c if c.is_ascii_digit() => {
                    let mut n = c.to_digit(10).unwrap();
                    while let Some(&(_, d)) = chars.peek() {
                        if d.is_ascii_digit() {
                            n = n * 10 + d.to_digit(10).unwrap();
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    Tok::Nat(n)
                }
                c if is_ident_start(c) => {
                    let mut s = String::new();
                    s.push(c);
                    while let Some(&(_, d)) = chars.peek() {
                        if is_ident_continue(d) {
                            s.push(d);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(ParseError {
                        line,
                        col: start_col,
                        msg: format!("unexpected character '{}'", other),
                    })
                }
            };
            toks.push((tok, line, start_col));
        }
        Ok(toks)
    }
}

/// Token-stream parser shared by the term grammar and the scenario DSL.
pub(crate) struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    line: usize,
}

impl Parser {
    pub(crate) fn new(src: &str, line: usize) -> Result<Self, ParseError> {
        Ok(Parser { toks: Lexer::tokenize(src, line)?, pos: 0, line })
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = match self.toks.get(self.pos) {
            Some((_, l, c)) => (*l, *c),
            None => (self.line, self.toks.last().map(|(_, _, c)| c + 1).unwrap_or(1)),
        };
        ParseError { line, col, msg: msg.into() }
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    pub(crate) fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, expected: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == expected => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected {}, found {}", expected, t))),
            None => Err(self.err(format!("expected {}, found end of input", expected))),
        }
    }

    pub(crate) fn eat_opt(&mut self, expected: &Tok) -> bool {
        if self.peek() == Some(expected) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.err(format!("expected identifier, found {}", t))),
            None => Err(self.err("expected identifier, found end of input")),
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err(format!(
                "unexpected trailing input starting at {}",
                self.toks[self.pos].0
            )))
        }
    }

    pub(crate) fn sign(&mut self) -> Option<Sign> {
        match self.peek() {
            Some(Tok::Plus) => {
                self.pos += 1;
                Some(Sign::Positive)
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                Some(Sign::Negative)
            }
            _ => None,
        }
    }

    pub(crate) fn key(&mut self) -> Result<Key, ParseError> {
        let name = self.ident()?;
        match name.as_str() {
            "sk" => {
                self.eat(Tok::LParen)?;
                let a = self.ident()?;
                self.eat(Tok::Comma)?;
                let b = self.ident()?;
                self.eat(Tok::RParen)?;
                Ok(Key::sym(a.as_str(), b.as_str()))
            }
            "pk" => {
                if self.eat_opt(&Tok::Minus) {
                    match self.next() {
                        Some(Tok::Nat(1)) => {}
                        _ => return Err(self.err("expected '1' after 'pk-'")),
                    }
                    self.eat(Tok::LParen)?;
                    let a = self.ident()?;
                    self.eat(Tok::RParen)?;
                    Ok(Key::private(a.as_str()))
                } else {
                    self.eat(Tok::LParen)?;
                    let a = self.ident()?;
                    self.eat(Tok::RParen)?;
                    Ok(Key::public(a.as_str()))
                }
            }
            "master" => Ok(Key::Master),
            "dev" => {
                self.eat(Tok::LParen)?;
                let n = match self.next() {
                    Some(Tok::Nat(n)) => n,
                    _ => return Err(self.err("expected device index")),
                };
                self.eat(Tok::RParen)?;
                Ok(Key::Device(n))
            }
            "raw" => {
                self.eat(Tok::LParen)?;
                let n = self.ident()?;
                self.eat(Tok::RParen)?;
                Ok(Key::raw(n.as_str()))
            }
            other => Err(self.err(format!("unknown key constructor '{}'", other))),
        }
    }

    pub(crate) fn term(&mut self) -> Result<Term, ParseError> {
        let left = self.prim()?;
        if self.eat_opt(&Tok::Dot) {
            let right = self.term()?;
            Ok(Term::pair(left, right))
        } else {
            Ok(left)
        }
    }

    fn prim(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Dollar) => {
                self.pos += 1;
                let name = self.ident()?;
                Ok(Term::text(name.as_str()))
            }
            Some(Tok::Hash) => {
                self.pos += 1;
                Ok(Term::key(self.key()?))
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                let payload = self.term()?;
                self.eat(Tok::RBrace)?;
                let key = self.key()?;
                Ok(Term::cipher(payload, key))
            }
            Some(Tok::LAngle) => {
                self.pos += 1;
                let payload = self.term()?;
                self.eat(Tok::RAngle)?;
                self.eat_opt(&Tok::Underscore);
                self.eat(Tok::LParen)?;
                let key = self.key()?;
                self.eat(Tok::RParen)?;
                Ok(Term::cipher(payload, key))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.eat(Tok::RParen)?;
                Ok(t)
            }
            Some(t) => Err(self.err(format!("expected a term, found {}", t))),
            None => Err(self.err("expected a term, found end of input")),
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let t = p.term()?;
    p.expect_end()?;
    Ok(t)
}

pub fn parse_signed_term(src: &str) -> Result<SignedTerm, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let sign = p.sign().unwrap_or(Sign::Positive);
    let term = p.term()?;
    p.expect_end()?;
    Ok(SignedTerm { sign, term })
}

pub fn parse_key(src: &str) -> Result<Key, ParseError> {
    let mut p = Parser::new(src, 1)?;
    let k = p.key()?;
    p.expect_end()?;
    Ok(k)
}

pub(crate) fn atom(name: &str) -> TextAtom {
    TextAtom::new(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    #[test]
    fn parses_ascii_and_display_forms() {
        let ascii = parse_term("{ $Na . $A }sk(A,B)").unwrap();
        let disp = parse_term("⟨$Na ⋅ $A⟩_(sk(B,A))").unwrap();
        assert_eq!(ascii, disp);
        assert_eq!(
            ascii,
            Term::cipher(
                Term::pair(Term::text("Na"), Term::text("A")),
                Key::sym("A", "B")
            )
        );
    }

    #[test]
    fn right_associative_concat() {
        let t = parse_term("$A . $B . $Na").unwrap();
        assert_eq!(
            t,
            Term::pair(
                Term::text("A"),
                Term::pair(Term::text("B"), Term::text("Na"))
            )
        );
        let left = parse_term("($A . $B) . $Na").unwrap();
        assert_ne!(t, left);
    }

    #[test]
    fn key_forms() {
        assert_eq!(parse_key("pk-1(A)").unwrap(), Key::private("A"));
        assert_eq!(parse_key("pk(A)").unwrap(), Key::public("A"));
        assert_eq!(parse_key("master").unwrap(), Key::Master);
        assert_eq!(parse_key("dev(7)").unwrap(), Key::Device(7));
        assert_eq!(parse_key("raw(session)").unwrap(), Key::raw("session"));
    }

    #[test]
    fn signed_terms_accept_coq_signs() {
        let plus = parse_signed_term("⊕ $A").unwrap();
        assert!(plus.is_positive());
        let minus = parse_signed_term("⊖ #sk(A,B)").unwrap();
        assert!(!minus.is_positive());
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "$A",
            "#pk-1(B)",
            "$A . $B . $Na",
            "($A . $B) . $Na",
            "{ $Na . $A }sk(A,B)",
            "{ { $m }dev(1) . #master }raw(k)",
        ] {
            let t = parse_term(src).unwrap();
            let rendered = t.to_string();
            assert_eq!(parse_term(&rendered).unwrap(), t, "round-trip of {}", rendered);
        }
    }

    #[test]
    fn errors_carry_position() {
        let err = parse_term("$A . %").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.col, 6);
    }
}
