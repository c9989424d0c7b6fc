//! Recursive-descent parser for the expression DSL.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := base ('^' intlit)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use super::{Expression, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(usize, Tok)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut integral = true;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                integral &= bytes[self.pos] != b'.';
                self.pos += 1;
            }
            if self.pos < bytes.len() && matches!(bytes[self.pos], b'e' | b'E') {
                let mut look = self.pos + 1;
                if look < bytes.len() && matches!(bytes[look], b'+' | b'-') {
                    look += 1;
                }
                if look < bytes.len() && bytes[look].is_ascii_digit() {
                    integral = false;
                    self.pos = look;
                    while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
            }
            let lexeme = &self.text[start..self.pos];
            let value = lexeme
                .parse::<f64>()
                .map_err(|_| Error::Syntax { position: start, message: format!("malformed number `{lexeme}`") })?;
            return Ok((start, Tok::Num(value, integral)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            return Ok((start, Tok::Ident(self.text[start..self.pos].to_string())));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((start, Tok::Op(c as char)));
        }
        let ch = self.text[start..].chars().next().unwrap_or('?');
        Err(Error::Syntax { position: start, message: format!("unexpected character `{ch}`") })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    scope: &'a [String],
    current: (usize, Tok),
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(usize, Tok)> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.current, next))
    }

    fn at_op(&self, op: char) -> bool {
        self.current.1 == Tok::Op(op)
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.at_op(op) {
            self.bump()?;
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected `{op}`")))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match &self.current.1 {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        Error::Syntax { position: self.current.0, message: format!("{what}, found {found}") }
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        loop {
            if self.at_op('+') {
                self.bump()?;
                lhs = lhs + self.term()?;
            } else if self.at_op('-') {
                self.bump()?;
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.factor()?;
        loop {
            if self.at_op('*') {
                self.bump()?;
                lhs = lhs * self.factor()?;
            } else if self.at_op('/') {
                self.bump()?;
                lhs = lhs / self.factor()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expression> {
        if self.at_op('-') {
            self.bump()?;
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if !self.at_op('^') {
            return Ok(base);
        }
        self.bump()?;
        match self.bump()? {
            (_, Tok::Num(v, true)) if v <= f64::from(u32::MAX) => Ok(base.pow(v as u32)),
            (position, _) => Err(Error::NonIntegerExponent { position }),
        }
    }

    fn base(&mut self) -> Result<Expression> {
        match self.current.1.clone() {
            Tok::Num(v, _) => {
                self.bump()?;
                Ok(Expression::num(v))
            }
            Tok::Ident(name) => {
                let (position, _) = self.bump()?;
                if self.at_op('(') {
                    let func = Func::from_name(&name).ok_or(Error::UnknownIdentifier { name, position })?;
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Expression::call(func, arg));
                }
                match self.scope.iter().position(|s| *s == name) {
                    Some(i) => Ok(Expression::var(i)),
                    None => Err(Error::UnknownIdentifier { name, position }),
                }
            }
            Tok::Op('(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            _ => Err(self.unexpected("expected a number, identifier or `(`")),
        }
    }
}

/// Parses `text` with identifiers resolved against `scope`; `scope[i]` becomes `Var(i)`.
pub fn parse(text: &str, scope: &[String]) -> Result<Expression> {
    let mut lexer = Lexer { text, pos: 0 };
    let first = lexer.next_token()?;
    let mut parser = Parser { lexer, scope, current: first };
    if parser.current.1 == Tok::End {
        return Err(Error::Syntax { position: 0, message: "empty expression".into() });
    }
    let e = parser.expr()?;
    if parser.current.1 != Tok::End {
        return Err(parser.unexpected("expected an operator"));
    }
    Ok(e)
}
