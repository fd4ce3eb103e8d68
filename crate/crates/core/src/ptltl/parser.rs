//! Recursive-descent parser for the concrete formula syntax.
//!
//! ```text
//! imp   := or ('->' imp)?
//! or    := and ('|' and)*
//! and   := since ('&' since)*
//! since := unary ('S' unary)*
//! unary := '!' unary | 'H' '(' imp ')' | 'P' '(' imp ')' | '(' imp ')'
//!        | 'true' | 'false' | proposition
//! ```

use super::{Alphabet, Formula};
use crate::{Error, Result};

const RESERVED: [&str; 5] = ["H", "P", "S", "true", "false"];

pub(crate) fn is_proposition_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&s)
}

/// Parses `text`, rejecting propositions outside `alphabet`.
pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Formula> {
    let (formula, positions) = Parser::new(text)?.run()?;
    if let Some((name, _)) = positions.into_iter().find(|(n, _)| !alphabet.contains(n)) {
        return Err(Error::UnknownProposition(name));
    }
    Ok(formula)
}

/// Parses `text` without an alphabet check.
pub fn parse_unchecked(text: &str) -> Result<Formula> {
    Ok(Parser::new(text)?.run()?.0)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    Ident(String),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    atoms: Vec<(String, usize)>,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        let mut toks = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => i += 1,
                b'!' => {
                    toks.push((Tok::Not, i));
                    i += 1;
                }
                b'&' => {
                    toks.push((Tok::And, i));
                    i += 1;
                }
                b'|' => {
                    toks.push((Tok::Or, i));
                    i += 1;
                }
                b'(' => {
                    toks.push((Tok::LParen, i));
                    i += 1;
                }
                b')' => {
                    toks.push((Tok::RParen, i));
                    i += 1;
                }
                b'-' if bytes.get(i + 1) == Some(&b'>') => {
                    toks.push((Tok::Arrow, i));
                    i += 2;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                        i += 1;
                    }
                    toks.push((Tok::Ident(text[start..i].to_string()), start));
                }
                _ => {
                    return Err(Error::Syntax {
                        pos: i,
                        msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap_or('?')),
                    })
                }
            }
        }
        Ok(Self {
            toks,
            pos: 0,
            end: text.len(),
            atoms: Vec::new(),
        })
    }

    fn run(mut self) -> Result<(Formula, Vec<(String, usize)>)> {
        let f = self.implication()?;
        if let Some((tok, at)) = self.toks.get(self.pos) {
            return Err(Error::Syntax {
                pos: *at,
                msg: format!("unexpected trailing token {tok:?}"),
            });
        }
        Ok((f, self.atoms))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.offset(),
                msg: format!("expected {tok:?}"),
            })
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.since()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::and(lhs, self.since()?);
        }
        Ok(lhs)
    }

    fn since(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.is_ident("S") {
            self.pos += 1;
            lhs = Formula::since(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        let at = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Syntax {
                pos: at,
                msg: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Formula::not(self.unary()?)),
            Tok::LParen => {
                let inner = self.implication()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                "H" | "P" => {
                    self.expect(Tok::LParen)?;
                    let inner = self.implication()?;
                    self.expect(Tok::RParen)?;
                    Ok(if name == "H" {
                        Formula::historically(inner)
                    } else {
                        Formula::once(inner)
                    })
                }
                "S" => Err(Error::Syntax {
                    pos: at,
                    msg: "`S` needs a left operand".into(),
                }),
                _ => {
                    self.atoms.push((name.clone(), at));
                    Ok(Formula::Atom(name))
                }
            },
            other => Err(Error::Syntax {
                pos: at,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }
}
