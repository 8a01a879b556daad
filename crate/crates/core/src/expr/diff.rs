use std::collections::HashMap;

use super::{Expr, Node};

impl Expr {
    /// Exact symbolic `∂/∂x_{i+1}` (zero-based `i`).
    ///
    /// Jet coordinates and the parameter `t` are constants for this
    /// derivative.
    pub fn differentiate(&self, i: usize) -> Expr {
        Differentiator { var: i, memo: HashMap::new() }.d(self)
    }

    /// `D_I e` for a multi-index given as exponents per coordinate.
    pub fn partial(&self, exponents: &[u32]) -> Expr {
        let mut out = self.clone();
        for (i, &k) in exponents.iter().enumerate() {
            for _ in 0..k {
                out = out.differentiate(i);
            }
        }
        out
    }
}

struct Differentiator {
    var: usize,
    memo: HashMap<usize, Expr>,
}

impl Differentiator {
    fn d(&mut self, e: &Expr) -> Expr {
        if let Some(done) = self.memo.get(&e.ptr()) {
            return done.clone();
        }
        let out = self.rule(e);
        self.memo.insert(e.ptr(), out.clone());
        out
    }

    fn rule(&mut self, e: &Expr) -> Expr {
        match e.node() {
            Node::Const(_) | Node::Param | Node::JetCoord { .. } => Expr::zero(),
            Node::Var(j) => {
                if *j == self.var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => Expr::add(self.d(a), self.d(b)),
            Node::Sub(a, b) => Expr::sub(self.d(a), self.d(b)),
            Node::Mul(a, b) => {
                let (da, db) = (self.d(a), self.d(b));
                Expr::add(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db))
            }
            Node::Div(a, b) => {
                let (da, db) = (self.d(a), self.d(b));
                if db.is_zero() {
                    return Expr::div(da, b.clone());
                }
                // a'/b - a b'/b^2, sharing b
                Expr::sub(
                    Expr::div(da, b.clone()),
                    Expr::div(Expr::mul(e.clone(), db), b.clone()),
                )
            }
            Node::Neg(a) => Expr::neg(self.d(a)),
            Node::Pow(a, n) => {
                let da = self.d(a);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = Expr::scale(*n as f64, Expr::pow(a.clone(), n - 1));
                Expr::mul(outer, da)
            }
            Node::Exp(a) => Expr::mul(e.clone(), self.d(a)),
            Node::Sin(a) => Expr::mul(Expr::cos(a.clone()), self.d(a)),
            Node::Cos(a) => Expr::neg(Expr::mul(Expr::sin(a.clone()), self.d(a))),
            Node::Log(a) => Expr::div(self.d(a), a.clone()),
            Node::Flat { arg, coeff } => {
                // (c e^{-1/u})' = (c' + c u'/u^2) e^{-1/u}
                let (darg, dcoeff) = (self.d(arg), self.d(coeff));
                let chain = Expr::div(Expr::mul(coeff.clone(), darg), Expr::pow(arg.clone(), 2));
                Expr::flat_scaled(arg.clone(), Expr::add(dcoeff, chain))
            }
            Node::Guard { cond, body } => Expr::guard(cond.clone(), self.d(body)),
        }
    }
}
