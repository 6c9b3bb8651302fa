//! Recursive-descent reader for scalar expressions: integers, parameter names,
//! `+ - * /`, `^` with an integer exponent, and parentheses.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{Scalar, ScalarField};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    field: &'a ScalarField,
}

pub fn parse_scalar(field: &ScalarField, s: &str) -> Result<Scalar> {
    let mut p = Parser { src: s.as_bytes(), pos: 0, field };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(v)
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at offset {} in {:?}", self.pos, String::from_utf8_lossy(self.src)))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Scalar> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == b'+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Scalar> {
        let mut acc = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if c == b'*' { &acc * &rhs } else { acc.div(&rhs)? };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Scalar> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Scalar> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.int_exponent()?;
            return base.pow(e);
        }
        Ok(base)
    }

    fn int_exponent(&mut self) -> Result<i64> {
        let mut neg = false;
        let mut parens = false;
        if self.peek() == Some(b'(') {
            self.pos += 1;
            parens = true;
        }
        if self.peek() == Some(b'-') {
            self.pos += 1;
            neg = true;
        }
        self.skip_ws();
        let digits = self.digits();
        if digits.is_empty() {
            return Err(self.err("expected integer exponent"));
        }
        let v: i64 = digits.parse().map_err(|_| self.err("exponent out of range"))?;
        if parens {
            if self.peek() != Some(b')') {
                return Err(self.err("expected ')'"));
            }
            self.pos += 1;
        }
        Ok(if neg { -v } else { v })
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<Scalar> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits();
                let n: BigInt = d.parse().map_err(|_| self.err("bad integer"))?;
                Ok(self.field.from_rational(BigRational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                self.field.param(name)
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}
