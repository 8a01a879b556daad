//! Smooth expression language.
//!
//! Expressions are immutable DAGs behind [`Arc`]; cloning is cheap and
//! derivative expressions share structure with their source. Evaluation and
//! differentiation memoize shared nodes, so the iterated derivatives needed
//! for high-order jets stay tractable.

mod diff;
mod eval;
mod parse;

use std::fmt;
use std::sync::Arc;

pub use eval::{EvalContext, EvalError};
pub use parse::{parse, parse_operator, ParseError};

/// Node of an expression DAG.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based coordinate index; printed as `x1`, `x2`, ...
    Var(usize),
    /// The family parameter `t`.
    Param,
    /// Jet coordinate `u^a_I`: zero-based component `a`, graded-lex rank of `I`.
    JetCoord { component: usize, rank: usize },
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, u32),
    Exp(Expr),
    Sin(Expr),
    Cos(Expr),
    Log(Expr),
    /// `coeff(x) * exp(-1/arg(x))` for `arg > 0`, and exactly `0` for `arg <= 0`.
    ///
    /// `flat(u)` is the case `coeff = 1`. Derivatives of `flat` stay in this
    /// form, which is what makes the `R(u)·flat(u) = 0 on u <= 0` convention
    /// hold by construction.
    Flat { arg: Expr, coeff: Expr },
    /// `body` where `cond > 0`, exactly `0` where `cond <= 0`.
    ///
    /// Only valid around bodies that extend smoothly by zero across
    /// `{cond <= 0}`; the library uses it to pin a glued function at a
    /// single point where a cutoff is undefined.
    Guard { cond: Expr, body: Expr },
}

/// A smooth expression in `x1..xn`, the parameter `t`, and (for operators)
/// jet coordinates.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub(crate) fn is_shared(&self) -> bool {
        Arc::strong_count(&self.0) > 1
    }

    pub fn constant(c: f64) -> Self {
        Expr::new(Node::Const(c))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    /// Coordinate `x_{i+1}` (zero-based `i`).
    pub fn var(i: usize) -> Self {
        Expr::new(Node::Var(i))
    }

    pub fn param() -> Self {
        Expr::new(Node::Param)
    }

    pub fn jet_coord(component: usize, rank: usize) -> Self {
        Expr::new(Node::JetCoord { component, rank })
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    // Folding builders. They drop exact zeros and ones and fold constant
    // operands; the parser does not use them so parse trees stay literal.

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Expr::new(Node::Add(a, b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(0.0), _) => Expr::neg(b),
            (_, Some(0.0)) => a,
            _ => Expr::new(Node::Sub(a, b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(0.0)) => Expr::zero(),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            _ => Expr::new(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => a,
            _ => Expr::new(Node::Div(a, b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::new(Node::Neg(a)),
        }
    }

    pub fn pow(a: Expr, n: u32) -> Expr {
        match (n, a.as_const()) {
            (0, _) => Expr::one(),
            (1, _) => a,
            (_, Some(c)) => Expr::constant(c.powi(n as i32)),
            _ => Expr::new(Node::Pow(a, n)),
        }
    }

    pub fn scale(c: f64, a: Expr) -> Expr {
        Expr::mul(Expr::constant(c), a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::new(Node::Exp(a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::new(Node::Sin(a))
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::new(Node::Cos(a))
    }

    pub fn log(a: Expr) -> Expr {
        Expr::new(Node::Log(a))
    }

    /// `exp(-1/a)` for `a > 0`, `0` otherwise.
    pub fn flat(a: Expr) -> Expr {
        Expr::new(Node::Flat {
            arg: a,
            coeff: Expr::one(),
        })
    }

    pub fn flat_scaled(arg: Expr, coeff: Expr) -> Expr {
        if coeff.is_zero() {
            return Expr::zero();
        }
        Expr::new(Node::Flat { arg, coeff })
    }

    pub fn guard(cond: Expr, body: Expr) -> Expr {
        if body.is_zero() {
            return Expr::zero();
        }
        Expr::new(Node::Guard { cond, body })
    }

    /// Sum of a list of terms; `0` when empty.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        factors.into_iter().fold(Expr::one(), Expr::mul)
    }

    /// Smooth step: `0` for `a <= 0`, `1` for `a >= 1`, strictly between otherwise.
    pub fn smooth_step(a: Expr) -> Expr {
        let up = Expr::flat(a.clone());
        let down = Expr::flat(Expr::sub(Expr::one(), a));
        Expr::div(up.clone(), Expr::add(up, down))
    }

    /// `‖x - center‖²` as a polynomial expression.
    pub fn squared_distance(center: &[f64]) -> Expr {
        Expr::sum(center.iter().enumerate().map(|(i, &c)| {
            Expr::pow(Expr::sub(Expr::var(i), Expr::constant(c)), 2)
        }))
    }

    /// Radial bump: `1` on `‖x - center‖ <= inner`, `0` on `‖x - center‖ >= outer`.
    pub fn ball_bump(center: &[f64], inner: f64, outer: f64) -> Expr {
        assert!(0.0 <= inner && inner < outer, "bump radii must satisfy 0 <= inner < outer");
        let d2 = Expr::squared_distance(center);
        let span = outer * outer - inner * inner;
        // a = 0 at the outer radius, 1 at the inner one
        let a = Expr::div(Expr::sub(Expr::constant(outer * outer), d2), Expr::constant(span));
        Expr::smooth_step(a)
    }

    /// Whether any `Param` node occurs.
    pub fn has_param(&self) -> bool {
        self.any_node(&|n| matches!(n, Node::Param))
    }

    pub fn has_jet_coords(&self) -> bool {
        self.any_node(&|n| matches!(n, Node::JetCoord { .. }))
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut best = None;
        self.visit(&mut |n| {
            if let Node::Var(i) = n {
                best = Some(best.map_or(*i, |b: usize| b.max(*i)));
            }
        });
        best
    }

    /// All `(component, rank)` jet coordinates referenced.
    pub fn jet_coords(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let Node::JetCoord { component, rank } = n {
                out.push((*component, *rank));
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    fn any_node(&self, pred: &dyn Fn(&Node) -> bool) -> bool {
        let mut found = false;
        self.visit(&mut |n| found |= pred(n));
        found
    }

    /// Visits every distinct node once.
    fn visit(&self, f: &mut dyn FnMut(&Node)) {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            f(e.node());
            stack.extend(e.children().into_iter().cloned());
        }
    }

    pub(crate) fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Param | Node::JetCoord { .. } => vec![],
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => vec![a, b],
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) | Node::Log(a) => {
                vec![a]
            }
            Node::Flat { arg, coeff } => vec![arg, coeff],
            Node::Guard { cond, body } => vec![cond, body],
        }
    }

    /// Number of distinct DAG nodes.
    pub fn dag_size(&self) -> usize {
        let mut count = 0;
        self.visit(&mut |_| count += 1);
        count
    }
}

/// Expressions serialize as their printed form.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if *c < 0.0 || c.is_sign_negative() => 3,
        _ => 5,
    }
}

impl Expr {
    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if precedence(self.node()) < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{:?}", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Param => write!(f, "t"),
            Node::JetCoord { component, rank } => write!(f, "u{}_{}", component + 1, rank),
            Node::Add(a, b) => {
                a.fmt_child(f, 1)?;
                write!(f, " + ")?;
                b.fmt_child(f, 2)
            }
            Node::Sub(a, b) => {
                a.fmt_child(f, 1)?;
                write!(f, " - ")?;
                b.fmt_child(f, 2)
            }
            Node::Mul(a, b) => {
                a.fmt_child(f, 2)?;
                write!(f, "*")?;
                b.fmt_child(f, 3)
            }
            Node::Div(a, b) => {
                a.fmt_child(f, 2)?;
                write!(f, "/")?;
                b.fmt_child(f, 3)
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                a.fmt_child(f, 3)
            }
            Node::Pow(a, n) => {
                a.fmt_child(f, 5)?;
                write!(f, "^{n}")
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Log(a) => write!(f, "log({a})"),
            Node::Flat { arg, coeff } if coeff.is_one() => write!(f, "flat({arg})"),
            Node::Flat { arg, coeff } => write!(f, "flat({arg}, {coeff})"),
            Node::Guard { cond, body } => write!(f, "guard({cond}, {body})"),
        }
    }
}
