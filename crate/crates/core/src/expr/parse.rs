//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' integer)?
//! base   := number | 'x' digits | 't' | jetcoord
//!         | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'sin' | 'cos' | 'log' | 'flat'
//! ```
//!
//! Two library-emitted forms are also accepted so printed results re-parse:
//! `flat(u, c)` for `c·flat(u)` and `guard(c, b)`. Jet coordinates
//! (`u1_3`, `u_3`, `u2_(1,0)`) are only accepted by [`parse_operator`].

use thiserror::Error;

use super::{Expr, Node};
use crate::jet::{mi_rank, MultiIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("variable index {index} exceeds dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("jet coordinate at position {pos} out of range: {message}")]
    JetCoordinate { pos: usize, message: String },
}

impl ParseError {
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::JetCoordinate { pos, .. } => Some(*pos),
            ParseError::VariableOutOfRange { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct JetShape {
    components: usize,
    order: usize,
}

/// Parses a section or coefficient expression in `x1..xn` and `t`.
pub fn parse(text: &str, n: usize) -> Result<Expr, ParseError> {
    Parser::new(text, n, None).run()
}

/// Parses a jet-operator expression over `r` source components with jet
/// coordinates up to order `k`.
pub fn parse_operator(text: &str, n: usize, r: usize, k: usize) -> Result<Expr, ParseError> {
    Parser::new(text, n, Some(JetShape { components: r, order: k })).run()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
    jet: Option<JetShape>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, n: usize, jet: Option<JetShape>) -> Self {
        Parser { src: text.as_bytes(), pos: 0, n, jet }
    }

    fn run(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(e)
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos, message: message.to_string() }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::new(Node::Add(lhs, self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::new(Node::Sub(lhs, self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::new(Node::Mul(lhs, self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::new(Node::Div(lhs, self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(Expr::new(Node::Neg(self.unary()?)))
        } else {
            self.factor()
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            self.skip_ws();
            let exponent = self
                .digits()
                .ok_or_else(|| self.error("exponent must be a non-negative integer"))?;
            let exponent = u32::try_from(exponent).map_err(|_| self.error("exponent too large"))?;
            return Ok(Expr::new(Node::Pow(base, exponent)));
        }
        Ok(base)
    }

    fn digits(&mut self) -> Option<u64> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.symbol(),
            Some(c) => Err(self.error(&format!("unexpected character '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src;
        let mut i = self.pos;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&bytes[start..i]).unwrap_or("");
        let value: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        self.pos = i;
        Ok(Expr::constant(value))
    }

    fn symbol(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match name {
            "x" => {
                let index = self.digits().ok_or_else(|| self.error("expected variable index after 'x'"))?;
                let index = index as usize;
                if index == 0 {
                    return Err(ParseError::Syntax {
                        pos: start,
                        message: "variables are numbered from x1".into(),
                    });
                }
                if index > self.n {
                    return Err(ParseError::VariableOutOfRange { index, dim: self.n });
                }
                Ok(Expr::var(index - 1))
            }
            "t" => Ok(Expr::param()),
            "u" => self.jet_coord(start),
            "exp" | "sin" | "cos" | "log" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::new(match name {
                    "exp" => Node::Exp(a),
                    "sin" => Node::Sin(a),
                    "cos" => Node::Cos(a),
                    _ => Node::Log(a),
                }))
            }
            "flat" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                let coeff = if self.eat(b',') { self.expr()? } else { Expr::one() };
                self.expect(b')')?;
                Ok(Expr::new(Node::Flat { arg, coeff }))
            }
            "guard" => {
                self.expect(b'(')?;
                let cond = self.expr()?;
                self.expect(b',')?;
                let body = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::new(Node::Guard { cond, body }))
            }
            _ => Err(ParseError::Syntax { pos: start, message: format!("unknown symbol '{name}'") }),
        }
    }

    fn jet_coord(&mut self, start: usize) -> Result<Expr, ParseError> {
        let Some(shape) = self.jet else {
            return Err(ParseError::Syntax {
                pos: start,
                message: "jet coordinates are only allowed in operator expressions".into(),
            });
        };
        let component = self.digits().unwrap_or(1) as usize;
        if self.src.get(self.pos) != Some(&b'_') {
            return Err(self.error("expected '_' in jet coordinate"));
        }
        self.pos += 1;
        let jet_err = |message: String| ParseError::JetCoordinate { pos: start, message };
        let rank = if self.src.get(self.pos) == Some(&b'(') {
            self.pos += 1;
            let mut exps = Vec::new();
            loop {
                self.skip_ws();
                let v = self.digits().ok_or_else(|| self.error("expected multi-index entry"))?;
                exps.push(u32::try_from(v).map_err(|_| self.error("multi-index entry too large"))?);
                if !self.eat(b',') {
                    break;
                }
            }
            self.expect(b')')?;
            if exps.len() != self.n {
                return Err(jet_err(format!("multi-index has {} entries, dimension is {}", exps.len(), self.n)));
            }
            let mi = MultiIndex::new(exps);
            if mi.norm() as usize > shape.order {
                return Err(jet_err(format!("|I| = {} exceeds operator order {}", mi.norm(), shape.order)));
            }
            mi_rank(&mi)
        } else {
            let rank = self.digits().ok_or_else(|| self.error("expected rank or multi-index"))? as usize;
            let count = crate::jet::mi_count(self.n, shape.order);
            if rank >= count {
                return Err(jet_err(format!("rank {rank} exceeds the {count} coordinates of order {}", shape.order)));
            }
            rank
        };
        if component == 0 || component > shape.components {
            return Err(jet_err(format!("component {component} not in 1..={}", shape.components)));
        }
        Ok(Expr::jet_coord(component - 1, rank))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_tree_shape() {
        let e = parse("x1^2 + 3*x2", 2).unwrap();
        match e.node() {
            Node::Add(a, b) => {
                assert!(matches!(a.node(), Node::Pow(base, 2) if matches!(base.node(), Node::Var(0))));
                assert!(matches!(b.node(), Node::Mul(..)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_builtin() {
        let e = parse("flat(x1)", 1).unwrap();
        assert!(matches!(e.node(), Node::Flat { coeff, .. } if coeff.is_one()));
    }

    #[test]
    fn variable_out_of_range() {
        assert_eq!(
            parse("x3", 2).unwrap_err(),
            ParseError::VariableOutOfRange { index: 3, dim: 2 }
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse("x1 + * 2", 1).unwrap_err();
        assert_eq!(err.position(), Some(5));
        assert!(parse("x1^-2", 1).is_err());
        assert!(parse("x1^1.5", 1).is_err());
        assert!(parse("sqrt(x1)", 1).is_err());
        assert!(parse("(x1", 1).is_err());
        assert!(parse("u_1", 1).is_err());
    }

    #[test]
    fn whitespace_and_literals() {
        let e = parse("  1.5e2 *x1\t- .5 ", 1).unwrap();
        assert_eq!(e.evaluate(&[2.0], None).unwrap(), 299.5);
    }

    #[test]
    fn jet_coordinate_forms() {
        let a = parse_operator("u1_4", 2, 1, 2).unwrap();
        let b = parse_operator("u_(1,1)", 2, 1, 2).unwrap();
        assert_eq!(a, b);
        assert!(parse_operator("u1_6", 2, 1, 2).is_err());
        assert!(parse_operator("u2_0", 2, 1, 2).is_err());
        assert!(parse_operator("u_(3,0)", 2, 1, 2).is_err());
    }
}
