//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```

use super::{Chart, Expr, Func};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::add(lhs, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::mul(lhs, self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.integer()?;
            return Ok(Expr::powi(base, n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'-') | Some(b'+')) {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            return self.err("expected integer exponent");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<i32>().or_else(|_| {
            self.pos = start;
            self.err("exponent out of range")
        })
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::neg(self.base()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if self.peek() == Some(b'(') {
                    let Some(func) = Func::from_name(ident) else {
                        self.pos = start;
                        return self.err(format!("unknown function `{ident}`"));
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    Ok(Expr::call(func, arg))
                } else {
                    Ok(Expr::var(ident))
                }
            }
            Some(c) => self.err(format!("unexpected character `{}`", c as char)),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return self.err("malformed number");
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'-') | Some(b'+')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::num(v)),
            _ => {
                self.pos = start;
                self.err("number out of range")
            }
        }
    }
}

/// Parse without checking variable declarations.
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parse and require every variable to be a coordinate of `chart`.
pub fn parse_expr(text: &str, chart: &Chart) -> Result<Expr> {
    let e = parse(text)?;
    for v in e.variables() {
        if !chart.coords().iter().any(|c| *c == v) {
            return Err(Error::UndeclaredVariable(v));
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::Node;

    #[test]
    fn parses_zero_literal() {
        assert_eq!(parse("0").unwrap().as_num(), Some(0.0));
    }

    #[test]
    fn parses_declared_variable() {
        let chart = Chart::new(&["k"], &[(-2.0, 2.0)]).unwrap();
        let e = parse_expr("k", &chart).unwrap();
        assert!(matches!(e.node(), Node::Var(v) if &**v == "k"));
    }

    #[test]
    fn reciprocal_is_a_quotient() {
        let chart = Chart::new(&["x", "y"], &[(0.5, 2.0), (-1.0, 1.0)])
            .unwrap()
            .with_guard(Expr::var("x"));
        let e = parse_expr("1/x", &chart).unwrap();
        assert!(matches!(e.node(), Node::Div(..)));
    }

    #[test]
    fn rejects_undeclared_variable() {
        let chart = Chart::new(&["x"], &[(0.0, 1.0)]).unwrap();
        assert_eq!(
            parse_expr("x + z", &chart),
            Err(Error::UndeclaredVariable("z".into()))
        );
    }

    #[test]
    fn reports_error_position() {
        match parse("x + * y") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("foo(x)"), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse("(x"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x^y"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn unary_minus_binds_to_base() {
        // the grammar puts '-' inside base, so it binds tighter than '^'
        let e = parse("-x^2").unwrap();
        assert!(matches!(e.node(), Node::Pow(..)));
        assert_eq!(e.eval(&["x".into()], &[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn scientific_notation() {
        assert_eq!(parse("1.5e-3").unwrap().as_num(), Some(1.5e-3));
        assert_eq!(parse("2E2").unwrap().as_num(), Some(200.0));
    }
}
