//! Truncated multivariate Taylor arithmetic.
//!
//! Evaluating an expression on series centred at `a` yields every
//! normalized coefficient `D_I f(a) / I!` up to the truncation order in one
//! pass. Cost is polynomial in the order, whereas iterated symbolic
//! derivatives of quotients grow geometrically.

use std::collections::HashMap;

use crate::expr::{EvalContext, EvalError, Expr, Node};

use super::{mi_count, mi_enumerate, mi_rank};

pub(crate) struct Shape {
    len: usize,
    order: usize,
    /// `(i, j, k)` with `I_i + I_j = I_k` and `|I_k| <= order`.
    products: Vec<(usize, usize, usize)>,
    pub(crate) factorials: Vec<f64>,
}

impl Shape {
    pub(crate) fn new(n: usize, order: usize) -> Self {
        let indices = mi_enumerate(n, order);
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.norm() + b.norm() <= order as u64 {
                    let sum = a.checked_add(b).expect("bounded by order");
                    products.push((i, j, mi_rank(&sum)));
                }
            }
        }
        Shape {
            len: mi_count(n, order),
            order,
            products,
            factorials: indices.iter().map(|i| i.factorial_f64()).collect(),
        }
    }
}

#[derive(Clone, Debug)]
struct Series(Vec<f64>);

impl Series {
    fn constant(shape: &Shape, c: f64) -> Self {
        let mut v = vec![0.0; shape.len];
        v[0] = c;
        Series(v)
    }

    fn value(&self) -> f64 {
        self.0[0]
    }

    fn zip(&self, other: &Series, f: impl Fn(f64, f64) -> f64) -> Series {
        Series(self.0.iter().zip(&other.0).map(|(a, b)| f(*a, *b)).collect())
    }

    fn scale(&self, c: f64) -> Series {
        Series(self.0.iter().map(|a| a * c).collect())
    }

    fn mul(&self, other: &Series, shape: &Shape) -> Series {
        let mut out = vec![0.0; shape.len];
        for &(i, j, k) in &shape.products {
            out[k] += self.0[i] * other.0[j];
        }
        Series(out)
    }

    /// `f(self)` from the derivatives `f^(k)(u0)` for `k = 0..=order`.
    fn compose(&self, derivs: &[f64], shape: &Shape) -> Series {
        let mut tail = self.clone();
        tail.0[0] = 0.0;
        let mut out = Series::constant(shape, derivs[0]);
        let mut power = Series::constant(shape, 1.0);
        let mut factorial = 1.0;
        for (k, &d) in derivs.iter().enumerate().skip(1) {
            power = power.mul(&tail, shape);
            factorial *= k as f64;
            if d != 0.0 {
                let c = d / factorial;
                for (o, p) in out.0.iter_mut().zip(&power.0) {
                    *o += c * p;
                }
            }
        }
        out
    }

    fn recip(&self, shape: &Shape) -> Result<Series, EvalError> {
        let v = self.value();
        if v == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        // d^k/du^k (1/u) = (-1)^k k! / u^{k+1}
        let mut derivs = Vec::with_capacity(shape.order + 1);
        let mut d = 1.0 / v;
        for k in 0..=shape.order {
            derivs.push(d);
            d *= -((k + 1) as f64) / v;
        }
        Ok(self.compose(&derivs, shape))
    }

    fn exp(&self, shape: &Shape) -> Series {
        let e = self.value().exp();
        self.compose(&vec![e; shape.order + 1], shape)
    }

    fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

fn checked(s: Series, what: &'static str) -> Result<Series, EvalError> {
    if s.is_finite() {
        Ok(s)
    } else {
        Err(EvalError::NonFinite(what))
    }
}

pub(crate) struct SeriesEvaluator<'c, 'a> {
    shape: &'c Shape,
    ctx: &'c EvalContext<'a>,
    memo: HashMap<usize, Series>,
}

impl<'c, 'a> SeriesEvaluator<'c, 'a> {
    pub(crate) fn new(shape: &'c Shape, ctx: &'c EvalContext<'a>) -> Self {
        SeriesEvaluator { shape, ctx, memo: HashMap::new() }
    }

    /// Normalized Taylor coefficients `D_I e(a) / I!` in graded-lex order.
    pub(crate) fn normalized(&mut self, e: &Expr) -> Result<Vec<f64>, EvalError> {
        Ok(self.eval(e)?.0)
    }

    fn eval(&mut self, e: &Expr) -> Result<Series, EvalError> {
        let shared = e.is_shared();
        if shared {
            if let Some(s) = self.memo.get(&e.ptr()) {
                return Ok(s.clone());
            }
        }
        let s = self.eval_node(e)?;
        if shared {
            self.memo.insert(e.ptr(), s.clone());
        }
        Ok(s)
    }

    fn eval_node(&mut self, e: &Expr) -> Result<Series, EvalError> {
        let shape = self.shape;
        let order = shape.order;
        Ok(match e.node() {
            Node::Const(_) | Node::Param | Node::JetCoord { .. } => {
                Series::constant(shape, e.eval_in(self.ctx)?)
            }
            Node::Var(i) => {
                let x = self.ctx.x;
                let value = *x.get(*i).ok_or(EvalError::VariableOutOfRange { index: i + 1, dim: x.len() })?;
                let mut s = Series::constant(shape, value);
                if order >= 1 {
                    // graded-lex rank of e_i is 1 + i
                    s.0[1 + i] = 1.0;
                }
                s
            }
            Node::Add(a, b) => checked(self.eval(a)?.zip(&self.eval(b)?, |x, y| x + y), "addition")?,
            Node::Sub(a, b) => checked(self.eval(a)?.zip(&self.eval(b)?, |x, y| x - y), "subtraction")?,
            Node::Mul(a, b) => checked(self.eval(a)?.mul(&self.eval(b)?, shape), "multiplication")?,
            Node::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?.recip(shape)?;
                checked(num.mul(&den, shape), "division")?
            }
            Node::Neg(a) => self.eval(a)?.scale(-1.0),
            Node::Pow(a, n) => {
                let base = self.eval(a)?;
                let mut out = Series::constant(shape, 1.0);
                let mut sq = base;
                let mut k = *n;
                while k > 0 {
                    if k & 1 == 1 {
                        out = out.mul(&sq, shape);
                    }
                    k >>= 1;
                    if k > 0 {
                        sq = sq.mul(&sq, shape);
                    }
                }
                checked(out, "power")?
            }
            Node::Exp(a) => checked(self.eval(a)?.exp(shape), "exp")?,
            Node::Sin(a) | Node::Cos(a) => {
                let u = self.eval(a)?;
                let (s, c) = u.value().sin_cos();
                let cycle = if matches!(e.node(), Node::Sin(_)) { [s, c, -s, -c] } else { [c, -s, -c, s] };
                let derivs: Vec<f64> = (0..=order).map(|k| cycle[k % 4]).collect();
                u.compose(&derivs, shape)
            }
            Node::Log(a) => {
                let u = self.eval(a)?;
                let v = u.value();
                if v <= 0.0 {
                    return Err(EvalError::LogDomain(v));
                }
                // d^k/du^k log u = (-1)^{k-1} (k-1)! / u^k
                let mut derivs = vec![v.ln()];
                let mut d = 1.0 / v;
                for k in 1..=order {
                    derivs.push(d);
                    d *= -(k as f64) / v;
                }
                checked(u.compose(&derivs, shape), "log")?
            }
            Node::Flat { arg, coeff } => {
                let u = self.eval(arg)?;
                // at u(a) <= 0 the whole jet vanishes; same when exp(-1/u) underflows
                if u.value() <= 0.0 || (-1.0 / u.value()).exp() == 0.0 {
                    return Ok(Series::constant(shape, 0.0));
                }
                let damping = u.recip(shape)?.scale(-1.0).exp(shape);
                let c = self.eval(coeff)?;
                checked(c.mul(&damping, shape), "flat")?
            }
            Node::Guard { cond, body } => {
                if self.eval(cond)?.value() <= 0.0 {
                    Series::constant(shape, 0.0)
                } else {
                    self.eval(body)?
                }
            }
        })
    }
}
