//! Recursive-descent parser for the defining-function grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | atom ('^' uint)?
//! atom   := 'i' | number | var | 'conj(' expr ')' | 're(' expr ')'
//!         | 'im(' expr ')' | '(' expr ')'
//! number := digits ('.' digits)?
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use super::{Expr, Literal, Node, VarRef, Vars};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown variable {name:?} at line {line}, column {column}")]
    UnknownVariable { name: String, line: usize, column: usize },
    #[error("variable {name:?} at line {line}, column {column} is out of range (declared {nvars} variables)")]
    IndexOutOfRange {
        name: String,
        nvars: usize,
        line: usize,
        column: usize,
    },
}

/// Parse with the default names `z1..z{nvars}`.
pub fn parse(source: &str, nvars: usize) -> Result<Expr, ParseError> {
    parse_with(source, &Arc::new(Vars::default_names(nvars)))
}

/// Parse against an explicit variable declaration.
pub fn parse_with(source: &str, vars: &Arc<Vars>) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source,
        pos: 0,
        vars,
    };
    let raw = p.expr()?;
    p.skip_ws();
    if p.pos < source.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(Expr::from_node(normalize(raw), Arc::clone(vars)))
}

enum Raw {
    Num(BigRational),
    I,
    Var(usize),
    Add(Box<Raw>, Box<Raw>),
    Sub(Box<Raw>, Box<Raw>),
    Mul(Box<Raw>, Box<Raw>),
    Neg(Box<Raw>),
    Pow(Box<Raw>, u32),
    Conj(Box<Raw>),
    Re(Box<Raw>),
    Im(Box<Raw>),
}

fn normalize(raw: Raw) -> Node {
    let b = |r: Box<Raw>| Box::new(normalize(*r));
    match raw {
        Raw::Num(r) => Node::Const(Literal::real(r)),
        Raw::I => Node::Const(Literal::from_ints(0, 1, 1)),
        Raw::Var(k) => Node::Var(VarRef::z(k)),
        Raw::Add(x, y) => Node::Add(b(x), b(y)),
        Raw::Sub(x, y) => Node::Sub(b(x), b(y)),
        Raw::Mul(x, y) => Node::Mul(b(x), b(y)),
        Raw::Neg(x) => Node::Neg(b(x)),
        Raw::Pow(x, m) => Node::Pow(b(x), m),
        Raw::Conj(x) => normalize(*x).conj(),
        // re(E) = (E + conj E)/2
        Raw::Re(x) => {
            let e = normalize(*x);
            let ec = e.conj();
            Node::Mul(
                Box::new(Node::Const(Literal::from_ints(1, 0, 2))),
                Box::new(Node::Add(Box::new(e), Box::new(ec))),
            )
        }
        // im(E) = (E − conj E)/(2i) = (−i/2)(E − conj E)
        Raw::Im(x) => {
            let e = normalize(*x);
            let ec = e.conj();
            Node::Mul(
                Box::new(Node::Const(Literal::from_ints(0, -1, 2))),
                Box::new(Node::Sub(Box::new(e), Box::new(ec))),
            )
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    vars: &'a Vars,
}

impl<'a> Parser<'a> {
    fn line_col(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
        (line, col)
    }

    fn syntax(&self, message: &str) -> ParseError {
        let (line, column) = self.line_col(self.pos);
        let message = if self.pos >= self.src.len() {
            format!("{message} (at end of input)")
        } else {
            message.to_string()
        };
        ParseError::Syntax { line, column, message }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Raw::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Raw::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.factor()?;
        while self.eat('*') {
            lhs = Raw::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Raw, ParseError> {
        if self.eat('-') {
            return Ok(Raw::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            self.skip_ws();
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.syntax("expected a non-negative integer exponent"));
            }
            let m: u32 = digits.parse().map_err(|_| self.syntax("exponent too large"))?;
            return Ok(Raw::Pow(Box::new(base), m));
        }
        Ok(base)
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn atom(&mut self) -> Result<Raw, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.syntax("expected an operand")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let int = self.digits();
                let mut value = BigRational::from_integer(int.parse::<BigInt>().expect("digits"));
                if self.peek() == Some('.') {
                    self.pos += 1;
                    let frac = self.digits();
                    if frac.is_empty() {
                        return Err(self.syntax("expected digits after '.'"));
                    }
                    let num: BigInt = frac.parse().expect("digits");
                    let den = BigInt::from(10).pow(frac.len() as u32);
                    value += BigRational::new(num, den);
                }
                Ok(Raw::Num(value))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let ident = &self.src[start..self.pos];
                match ident {
                    "i" => Ok(Raw::I),
                    "conj" | "re" | "im" => {
                        self.expect('(')?;
                        let inner = Box::new(self.expr()?);
                        self.expect(')')?;
                        Ok(match ident {
                            "conj" => Raw::Conj(inner),
                            "re" => Raw::Re(inner),
                            _ => Raw::Im(inner),
                        })
                    }
                    name => self.variable(name, start),
                }
            }
            Some(c) => Err(self.syntax(&format!("unexpected character {c:?}"))),
        }
    }

    fn variable(&self, name: &str, start: usize) -> Result<Raw, ParseError> {
        if let Some(k) = self.vars.index_of(name) {
            return Ok(Raw::Var(k));
        }
        let (line, column) = self.line_col(start);
        // `z<k>` past the declared range is reported as an index error when
        // the declaration uses default names.
        let default_style = self
            .vars
            .names()
            .iter()
            .enumerate()
            .all(|(k, n)| *n == format!("z{}", k + 1));
        if default_style {
            if let Some(k) = name.strip_prefix('z').and_then(|d| d.parse::<usize>().ok()) {
                if k == 0 || k > self.vars.len() {
                    return Err(ParseError::IndexOutOfRange {
                        name: name.to_string(),
                        nvars: self.vars.len(),
                        line,
                        column,
                    });
                }
            }
        }
        Err(ParseError::UnknownVariable {
            name: name.to_string(),
            line,
            column,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_at_end() {
        let err = parse("z1 + ", 1).unwrap_err();
        match err {
            ParseError::Syntax { line, column, message } => {
                assert_eq!((line, column), (1, 6));
                assert!(message.contains("end of input"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_positions_track_lines() {
        let err = parse("z1 +\n  z2 ) ", 2).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, column: 6, .. }), "{err:?}");
    }

    #[test]
    fn unknown_and_out_of_range_variables() {
        assert!(matches!(
            parse("z3 + z1", 2),
            Err(ParseError::IndexOutOfRange { nvars: 2, .. })
        ));
        assert!(matches!(parse("w", 2), Err(ParseError::UnknownVariable { .. })));
        let vars = Arc::new(Vars::new(&["z", "w"]).unwrap());
        assert!(matches!(
            parse_with("z + q", &vars),
            Err(ParseError::UnknownVariable { .. })
        ));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-z1^2", 1).unwrap();
        let v = e.eval(&[crate::C64::new(3.0, 0.0)]).unwrap();
        assert_eq!(v.re, -9.0);
    }

    #[test]
    fn malformed_inputs() {
        for src in ["", "()", "z1 ^ ", "z1 z2", "conj z1", "1.", "z1 ** 2", "re(z1"] {
            assert!(parse(src, 2).is_err(), "{src:?} should fail");
        }
    }
}
