//! Recursive-descent parser for polynomial expressions over `X1..Xn`.
//!
//! Grammar:
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'X' integer | '(' expr ')'
//! number := decimal ('/' decimal)?
//! ```

use super::MultiPoly;
use crate::coeff::Coeff;
use crate::error::{Error, Result};

pub(super) fn parse_poly<C: Coeff>(text: &str, num_vars: usize) -> Result<MultiPoly<C>> {
    let mut parser = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        num_vars,
    };
    let p = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(p)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    num_vars: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::parse("polynomial", self.src, format!("{reason} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr<C: Coeff>(&mut self) -> Result<MultiPoly<C>> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.try_add(&self.term()?)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.try_sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term<C: Coeff>(&mut self) -> Result<MultiPoly<C>> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.try_mul(&self.unary()?)?;
        }
        Ok(acc)
    }

    fn unary<C: Coeff>(&mut self) -> Result<MultiPoly<C>> {
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

    fn power<C: Coeff>(&mut self) -> Result<MultiPoly<C>> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.integer()?;
            let e = u32::try_from(e).map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom<C: Coeff>(&mut self) -> Result<MultiPoly<C>> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'X') | Some(b'x') => {
                self.pos += 1;
                let idx = self.integer()?;
                if idx == 0 || idx > self.num_vars {
                    return Err(self.error(&format!(
                        "variable X{idx} outside X1..X{}",
                        self.num_vars
                    )));
                }
                MultiPoly::var(self.num_vars, idx - 1)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => {
                let lit = self.number_literal();
                let c = C::parse_literal(lit)?;
                Ok(MultiPoly::constant(self.num_vars, c))
            }
            _ => Err(self.error("expected a number, a variable or '('")),
        }
    }

    fn integer(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.error("expected an integer"))
    }

    fn decimal_end(&self, mut pos: usize) -> usize {
        let b = self.bytes;
        while pos < b.len() && (b[pos].is_ascii_digit() || b[pos] == b'.') {
            pos += 1;
        }
        if pos < b.len() && (b[pos] == b'e' || b[pos] == b'E') {
            let mut q = pos + 1;
            if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                q += 1;
            }
            if q < b.len() && b[q].is_ascii_digit() {
                while q < b.len() && b[q].is_ascii_digit() {
                    q += 1;
                }
                pos = q;
            }
        }
        pos
    }

    fn number_literal(&mut self) -> &str {
        let start = self.pos;
        let mut end = self.decimal_end(start);
        if end + 1 < self.bytes.len()
            && self.bytes[end] == b'/'
            && (self.bytes[end + 1].is_ascii_digit() || self.bytes[end + 1] == b'.')
        {
            end = self.decimal_end(end + 1);
        }
        self.pos = end;
        &self.src[start..end]
    }
}

#[cfg(test)]
mod tests {
    use crate::coeff::Rational;
    use crate::polynomial::MultiPoly;

    #[test]
    fn expressions_expand_to_canonical_form() {
        let p = MultiPoly::<Rational>::parse("(X1*X3 + X1)*X1*(1 - X1)", 3).unwrap();
        let q = MultiPoly::<Rational>::parse("-X1^3*X3 - X1^3 + X1^2*X3 + X1^2", 3).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn fractions_and_exponent_literals() {
        let p = MultiPoly::<Rational>::parse("3/2*X1 - 1e-2", 1).unwrap();
        assert_eq!(p.to_string(), "3/2*X1 - 1/100");
        let f = MultiPoly::<f64>::parse("2.5e-3*X2^2", 2).unwrap();
        assert_eq!(f.evaluate(&[0.0, 2.0]).unwrap(), 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MultiPoly::<f64>::parse("X3", 2).is_err());
        assert!(MultiPoly::<f64>::parse("X0", 2).is_err());
        assert!(MultiPoly::<f64>::parse("(X1 + 1", 2).is_err());
        assert!(MultiPoly::<f64>::parse("X1 +", 2).is_err());
        assert!(MultiPoly::<f64>::parse("X1 X2", 2).is_err());
    }
}
