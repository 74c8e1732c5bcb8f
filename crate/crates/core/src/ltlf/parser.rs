//! Recursive-descent parser for the formula surface syntax.
//!
//! Grammar, loosest-binding first:
//!
//! ```text
//! formula := or
//! or      := and ('|' and)*
//! and     := until ('&' until)*
//! until   := unary ('U' until)?          // right-associative
//! unary   := ('!' | 'X' | 'F' | 'G') unary | primary
//! primary := 'true' | 'false' | identifier | '(' formula ')'
//! ```
//!
//! The single capital letters `X`, `U`, `F`, `G` are reserved operators;
//! every other identifier is an atomic proposition.

use std::sync::Arc;

use thiserror::Error;

use super::Formula;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character {found:?} at byte {at}")]
    UnexpectedChar { found: char, at: usize },
    #[error("unexpected token {found:?} at byte {at}, expected {expected}")]
    UnexpectedToken {
        found: String,
        at: usize,
        expected: &'static str,
    },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: &'static str },
    #[error("unbalanced parenthesis opened at byte {at}")]
    UnbalancedParen { at: usize },
    #[error("undeclared atomic proposition {name:?} at byte {at}")]
    UndeclaredAtom { name: String, at: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Not,
    And,
    Or,
    Next,
    Until,
    Eventually,
    Globally,
    LParen,
    RParen,
    True,
    False,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '!' => {
                out.push((Tok::Not, i));
                i += 1;
            }
            '&' => {
                out.push((Tok::And, i));
                i += 1;
            }
            '|' => {
                out.push((Tok::Or, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let word = &text[start..i];
                let tok = match word {
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "F" => Tok::Eventually,
                    "G" => Tok::Globally,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((tok, start));
            }
            other => {
                return Err(ParseError::UnexpectedChar {
                    found: other,
                    at: i,
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    declared: Option<&'a [String]>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn or(&mut self) -> Result<Arc<Formula>, ParseError> {
        let mut left = self.and()?;
        while matches!(self.peek(), Some((Tok::Or, _))) {
            self.bump();
            let right = self.and()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Arc<Formula>, ParseError> {
        let mut left = self.until()?;
        while matches!(self.peek(), Some((Tok::And, _))) {
            self.bump();
            let right = self.until()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn until(&mut self) -> Result<Arc<Formula>, ParseError> {
        let left = self.unary()?;
        if matches!(self.peek(), Some((Tok::Until, _))) {
            self.bump();
            let right = self.until()?;
            return Ok(Formula::until(left, right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Arc<Formula>, ParseError> {
        match self.peek() {
            Some((Tok::Not, _)) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some((Tok::Next, _)) => {
                self.bump();
                Ok(Formula::next(self.unary()?))
            }
            Some((Tok::Eventually, _)) => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Some((Tok::Globally, _)) => {
                self.bump();
                Ok(Formula::globally(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Arc<Formula>, ParseError> {
        match self.bump() {
            Some((Tok::True, _)) => Ok(Arc::new(Formula::True)),
            Some((Tok::False, _)) => Ok(Arc::new(Formula::False)),
            Some((Tok::Ident(name), at)) => {
                if let Some(ap) = self.declared {
                    if !ap.iter().any(|a| a == &name) {
                        return Err(ParseError::UndeclaredAtom { name, at });
                    }
                }
                Ok(Formula::atom(name))
            }
            Some((Tok::LParen, at)) => {
                let inner = self.or()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    _ => Err(ParseError::UnbalancedParen { at }),
                }
            }
            Some((tok, at)) => Err(ParseError::UnexpectedToken {
                found: format!("{tok:?}"),
                at,
                expected: "an atom, constant, or '('",
            }),
            None => Err(ParseError::UnexpectedEnd {
                expected: "an atom, constant, or '('",
            }),
        }
    }
}

/// Parses formula text. When `declared` is given, atoms outside the list are
/// rejected.
pub fn parse(text: &str, declared: Option<&[String]>) -> Result<Arc<Formula>, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        declared,
    };
    let f = p.or()?;
    if let Some((tok, at)) = p.peek() {
        return Err(ParseError::UnexpectedToken {
            found: format!("{tok:?}"),
            at: *at,
            expected: "end of input",
        });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_globally_avoid_and_reach() {
        let f = parse("G !obs & F des", None).unwrap();
        let expected = Formula::and(
            Formula::globally(Formula::not(Formula::atom("obs"))),
            Formula::eventually(Formula::atom("des")),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_twin_reachability() {
        let f = parse("F d1 & F d2 & G !o", None).unwrap();
        let expected = Formula::and(
            Formula::and(
                Formula::eventually(Formula::atom("d1")),
                Formula::eventually(Formula::atom("d2")),
            ),
            Formula::globally(Formula::not(Formula::atom("o"))),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn until_is_right_associative_and_binds_tighter_than_and() {
        let f = parse("a U b U c", None).unwrap();
        let expected = Formula::until(
            Formula::atom("a"),
            Formula::until(Formula::atom("b"), Formula::atom("c")),
        );
        assert_eq!(f, expected);

        let g = parse("a U b & c", None).unwrap();
        let expected_g = Formula::and(
            Formula::until(Formula::atom("a"), Formula::atom("b")),
            Formula::atom("c"),
        );
        assert_eq!(g, expected_g);
    }

    #[test]
    fn unary_operators_nest() {
        let f = parse("!X a | G F b", None).unwrap();
        let expected = Formula::or(
            Formula::not(Formula::next(Formula::atom("a"))),
            Formula::globally(Formula::eventually(Formula::atom("b"))),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn error_positions_are_reported() {
        assert_eq!(
            parse("a & %", None),
            Err(ParseError::UnexpectedChar { found: '%', at: 4 })
        );
        assert_eq!(
            parse("(a & b", None),
            Err(ParseError::UnbalancedParen { at: 0 })
        );
        assert!(matches!(
            parse("a &", None),
            Err(ParseError::UnexpectedEnd { .. })
        ));
        assert!(matches!(
            parse("a b", None),
            Err(ParseError::UnexpectedToken { .. })
        ));
    }

    #[test]
    fn declared_atoms_are_enforced() {
        let ap = vec!["Des".to_string(), "Obs".to_string()];
        assert!(parse("G !Obs & F Des", Some(&ap)).is_ok());
        assert_eq!(
            parse("F des", Some(&ap)),
            Err(ParseError::UndeclaredAtom {
                name: "des".into(),
                at: 2
            })
        );
    }
}
