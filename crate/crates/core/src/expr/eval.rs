use std::collections::HashMap;

use thiserror::Error;

use super::{Expr, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable x{index} is not available at a point of dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("expression depends on the parameter t but no value was supplied")]
    MissingParameter,
    #[error("jet coordinate u{component}_{rank} is not available")]
    MissingJetCoordinate { component: usize, rank: usize },
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
}

/// Values bound to the free symbols of an expression.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub x: &'a [f64],
    pub t: Option<f64>,
    /// Jet coordinates indexed as `jet[component][rank]`.
    pub jet: Option<&'a [Vec<f64>]>,
}

impl<'a> EvalContext<'a> {
    pub fn at(x: &'a [f64]) -> Self {
        EvalContext { x, t: None, jet: None }
    }

    pub fn with_param(mut self, t: Option<f64>) -> Self {
        self.t = t;
        self
    }

    pub fn with_jet(mut self, jet: &'a [Vec<f64>]) -> Self {
        self.jet = Some(jet);
        self
    }
}

impl Expr {
    /// Evaluates at `x` with optional parameter value `t`.
    pub fn evaluate(&self, x: &[f64], t: Option<f64>) -> Result<f64, EvalError> {
        self.eval_in(&EvalContext::at(x).with_param(t))
    }

    pub fn eval_in(&self, ctx: &EvalContext<'_>) -> Result<f64, EvalError> {
        Evaluator { ctx, memo: HashMap::new() }.eval(self)
    }
}

struct Evaluator<'c, 'a> {
    ctx: &'c EvalContext<'a>,
    memo: HashMap<usize, f64>,
}

fn finite(v: f64, what: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(what))
    }
}

impl Evaluator<'_, '_> {
    fn eval(&mut self, e: &Expr) -> Result<f64, EvalError> {
        let shared = e.is_shared();
        if shared {
            if let Some(&v) = self.memo.get(&e.ptr()) {
                return Ok(v);
            }
        }
        let v = self.eval_node(e.node())?;
        if shared {
            self.memo.insert(e.ptr(), v);
        }
        Ok(v)
    }

    fn eval_node(&mut self, node: &Node) -> Result<f64, EvalError> {
        Ok(match node {
            Node::Const(c) => *c,
            Node::Var(i) => *self.ctx.x.get(*i).ok_or(EvalError::VariableOutOfRange {
                index: i + 1,
                dim: self.ctx.x.len(),
            })?,
            Node::Param => self.ctx.t.ok_or(EvalError::MissingParameter)?,
            Node::JetCoord { component, rank } => self
                .ctx
                .jet
                .and_then(|j| j.get(*component))
                .and_then(|c| c.get(*rank))
                .copied()
                .ok_or(EvalError::MissingJetCoordinate {
                    component: component + 1,
                    rank: *rank,
                })?,
            Node::Add(a, b) => finite(self.eval(a)? + self.eval(b)?, "addition")?,
            Node::Sub(a, b) => finite(self.eval(a)? - self.eval(b)?, "subtraction")?,
            Node::Mul(a, b) => finite(self.eval(a)? * self.eval(b)?, "multiplication")?,
            Node::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                finite(num / den, "division")?
            }
            Node::Neg(a) => -self.eval(a)?,
            Node::Pow(a, n) => finite(self.eval(a)?.powi(*n as i32), "power")?,
            Node::Exp(a) => finite(self.eval(a)?.exp(), "exp")?,
            Node::Sin(a) => self.eval(a)?.sin(),
            Node::Cos(a) => self.eval(a)?.cos(),
            Node::Log(a) => {
                let v = self.eval(a)?;
                if v <= 0.0 {
                    return Err(EvalError::LogDomain(v));
                }
                v.ln()
            }
            Node::Flat { arg, coeff } => {
                let u = self.eval(arg)?;
                if u <= 0.0 {
                    return Ok(0.0);
                }
                let damping = (-1.0 / u).exp();
                if damping == 0.0 {
                    // the rational prefactor cannot beat exp(-1/u) once it underflows
                    return Ok(0.0);
                }
                finite(self.eval(coeff)? * damping, "flat")?
            }
            Node::Guard { cond, body } => {
                if self.eval(cond)? <= 0.0 {
                    0.0
                } else {
                    self.eval(body)?
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn arithmetic() {
        let e = parse("x1^2+3*x2", 2).unwrap();
        assert_eq!(e.evaluate(&[2.0, 1.0], None).unwrap(), 7.0);
    }

    #[test]
    fn flat_values() {
        let e = parse("flat(x1)", 1).unwrap();
        assert_eq!(e.evaluate(&[0.0], None).unwrap(), 0.0);
        assert_eq!(e.evaluate(&[-2.0], None).unwrap(), 0.0);
        let direct = (-1.0f64).exp();
        assert!((e.evaluate(&[1.0], None).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn domain_errors_are_reported() {
        let log = parse("log(x1)", 1).unwrap();
        assert_eq!(log.evaluate(&[-1.0], None), Err(EvalError::LogDomain(-1.0)));
        let div = parse("1/x1", 1).unwrap();
        assert_eq!(div.evaluate(&[0.0], None), Err(EvalError::DivisionByZero));
        let t = parse("t*x1", 1).unwrap();
        assert_eq!(t.evaluate(&[1.0], None), Err(EvalError::MissingParameter));
        assert_eq!(t.evaluate(&[1.0], Some(2.0)).unwrap(), 2.0);
        let big = parse("exp(exp(x1))", 1).unwrap();
        assert!(matches!(big.evaluate(&[10.0], None), Err(EvalError::NonFinite(_))));
    }

    #[test]
    fn guard_short_circuits() {
        let g = parse("guard(x1, 1/x1)", 1).unwrap();
        assert_eq!(g.evaluate(&[0.0], None).unwrap(), 0.0);
        assert_eq!(g.evaluate(&[0.5], None).unwrap(), 2.0);
    }

    #[test]
    fn jet_coordinates() {
        let e = parse_op("x1*u1_1 + u1_0");
        let jet = vec![vec![3.0, 5.0]];
        let ctx = EvalContext::at(&[2.0]).with_jet(&jet);
        assert_eq!(e.eval_in(&ctx).unwrap(), 13.0);
        assert!(matches!(
            e.evaluate(&[2.0], None),
            Err(EvalError::MissingJetCoordinate { .. })
        ));
    }

    fn parse_op(s: &str) -> Expr {
        crate::expr::parse_operator(s, 1, 1, 2).unwrap()
    }
}
