//! Text grammar for motivic expressions.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' exponent)?
//! exponent := ['-'] integer | '(' ['-'] integer ['/' integer] ')'
//! atom   := 'L' | integer | 'e(' name args ')' | '(' expr ')'
//! ```
//!
//! Builtins inside `e(...)` are resolved by [`BuiltinClass::parse`], e.g.
//! `e(SL 2)`, `e(GL 3)`, `e(A 4)`, `e(Gm)`, `e(J SL 2 1)`.

use num_bigint::BigInt;
use thiserror::Error;

use crate::grothendieck::{BuiltinClass, Exponent, MotivicElement, MotivicError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("parse error at offset {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("at offset {offset}: {source}")]
    Motivic { offset: usize, source: MotivicError },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Parse { offset, .. } | ExprError::Motivic { offset, .. } => *offset,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExprError>;

pub fn parse_motivic_expression(text: &str) -> Result<MotivicElement> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.ws();
    if p.pos < p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

fn small(v: BigInt, at: usize) -> Result<i64> {
    i64::try_from(v).map_err(|_| ExprError::Parse { offset: at, reason: "exponent out of range".into() })
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, reason: &str) -> ExprError {
        ExprError::Parse { offset: self.pos, reason: reason.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<MotivicElement> {
        let mut acc = if self.peek() == Some(b'-') {
            self.pos += 1;
            -self.term()?
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MotivicElement> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc * self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<MotivicElement> {
        self.ws();
        let start = self.pos;
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let e = self.exponent()?;
        base.pow_rational(e).map_err(|source| ExprError::Motivic { offset: start, source })
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        Ok(std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().unwrap())
    }

    fn exponent(&mut self) -> Result<Exponent> {
        let paren = self.peek() == Some(b'(');
        if paren {
            self.pos += 1;
        }
        let neg = self.peek() == Some(b'-');
        if neg {
            self.pos += 1;
        }
        let at = self.pos;
        let num = small(self.integer()?, at)?;
        let num = if neg { -num } else { num };
        let mut den = 1i64;
        if paren {
            if self.peek() == Some(b'/') {
                let slash = self.pos;
                self.pos += 1;
                den = match self.integer() {
                    Ok(d) => small(d, slash)?,
                    Err(_) => return Err(ExprError::Parse { offset: slash, reason: "missing denominator".into() }),
                };
                if den == 0 {
                    return Err(ExprError::Parse { offset: slash, reason: "zero denominator".into() });
                }
            }
            self.expect(b')')?;
        }
        Ok(Exponent::new(num, den))
    }

    fn atom(&mut self) -> Result<MotivicElement> {
        match self.peek() {
            Some(b'L') => {
                self.pos += 1;
                Ok(MotivicElement::lefschetz())
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(MotivicElement::constant(self.integer()?)),
            Some(b'e') => self.builtin(),
            Some(_) => Err(self.err("expected `L`, an integer, `e(` or `(`")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn builtin(&mut self) -> Result<MotivicElement> {
        let start = self.pos;
        self.pos += 1;
        if self.s.get(self.pos) != Some(&b'(') {
            return Err(self.err("expected `(` after `e`"));
        }
        self.pos += 1;
        let mut words = Vec::new();
        loop {
            self.ws();
            match self.s.get(self.pos) {
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) if c.is_ascii_alphanumeric() || *c == b'_' => {
                    let w0 = self.pos;
                    while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                        self.pos += 1;
                    }
                    words.push(std::str::from_utf8(&self.s[w0..self.pos]).unwrap());
                }
                Some(_) => return Err(self.err("unexpected character in builtin")),
                None => return Err(self.err("unterminated builtin")),
            }
        }
        let Some((name, args)) = words.split_first() else {
            return Err(ExprError::Parse { offset: start, reason: "empty builtin".into() });
        };
        BuiltinClass::parse(name, args)
            .and_then(|b| b.class())
            .map_err(|source| ExprError::Motivic { offset: start, source })
    }
}
