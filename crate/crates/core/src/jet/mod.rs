//! Multi-indices, truncated Taylor expansions and jet prolongation.
//!
//! Jets store raw derivatives `λ_I = D_I f(a)`; the `1/I!` weights only
//! appear when a jet is evaluated as a Taylor polynomial.

mod multi_index;
mod series;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalContext, EvalError, Expr};

pub use multi_index::{mi_add, mi_count, mi_enumerate, mi_factorial, mi_norm, mi_rank, MultiIndex};

/// Working order used when callers do not pick one.
pub const DEFAULT_WORKING_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("integer overflow in multi-index arithmetic")]
    Overflow,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("requested order {requested} exceeds jet order {order}")]
    OrderTooLarge { requested: usize, order: usize },
    #[error("jet of order {order} in dimension {dim} needs {expected} coefficients, got {found}")]
    CoefficientCount { dim: usize, order: usize, expected: usize, found: usize },
    #[error("expression depends on the family parameter; supply a value for t")]
    HasParameter,
    #[error("family jets must share one order and dimension")]
    MixedJets,
    #[error("duplicate base point at entries {0} and {1}")]
    DuplicatePoint(usize, usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Truncated Taylor expansion at `base`: derivatives `λ_I` for `|I| <= order`,
/// stored in graded-lex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JetDoc", into = "JetDoc")]
pub struct Jet {
    base: Vec<f64>,
    order: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JetDoc {
    base: Vec<f64>,
    order: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<JetDoc> for Jet {
    type Error = JetError;

    fn try_from(doc: JetDoc) -> Result<Self, Self::Error> {
        Jet::new(doc.base, doc.order, doc.coeffs)
    }
}

impl From<Jet> for JetDoc {
    fn from(jet: Jet) -> Self {
        JetDoc { base: jet.base, order: jet.order, coeffs: jet.coeffs }
    }
}

impl Jet {
    pub fn new(base: Vec<f64>, order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        if base.is_empty() {
            return Err(JetError::DimensionMismatch { expected: 1, found: 0 });
        }
        let expected = mi_count(base.len(), order);
        if coeffs.len() != expected {
            return Err(JetError::CoefficientCount {
                dim: base.len(),
                order,
                expected,
                found: coeffs.len(),
            });
        }
        Ok(Jet { base, order, coeffs })
    }

    pub fn zero(base: Vec<f64>, order: usize) -> Self {
        let count = mi_count(base.len(), order);
        Jet { base, order, coeffs: vec![0.0; count] }
    }

    /// Builds a jet from a function of the multi-index.
    pub fn from_fn(base: Vec<f64>, order: usize, mut f: impl FnMut(&MultiIndex) -> f64) -> Self {
        let coeffs = mi_enumerate(base.len(), order).iter().map(&mut f).collect();
        Jet { base, order, coeffs }
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `λ_I`, or `None` when `|I|` exceeds the order.
    pub fn get(&self, index: &MultiIndex) -> Option<f64> {
        if index.dim() != self.dim() || index.norm() as usize > self.order {
            return None;
        }
        Some(self.coeffs[mi_rank(index)])
    }

    /// `λ_I`, with `0` above the stored order.
    pub fn coeff(&self, index: &MultiIndex) -> f64 {
        self.get(index).unwrap_or(0.0)
    }

    pub fn set(&mut self, index: &MultiIndex, value: f64) {
        assert!(index.norm() as usize <= self.order, "index above jet order");
        self.coeffs[mi_rank(index)] = value;
    }

    /// `Σ λ_I (y - a)^I / I!`.
    pub fn taylor_eval(&self, y: &[f64]) -> Result<f64, JetError> {
        if y.len() != self.dim() {
            return Err(JetError::DimensionMismatch { expected: self.dim(), found: y.len() });
        }
        Ok(mi_enumerate(self.dim(), self.order)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(index, &c)| c * index.monomial(y, &self.base) / index.factorial_f64())
            .sum())
    }

    /// Restriction to order `k <= order`.
    pub fn truncate(&self, k: usize) -> Result<Jet, JetError> {
        if k > self.order {
            return Err(JetError::OrderTooLarge { requested: k, order: self.order });
        }
        Ok(Jet {
            base: self.base.clone(),
            order: k,
            coeffs: self.coeffs[..mi_count(self.dim(), k)].to_vec(),
        })
    }

    /// The Taylor polynomial `Σ λ_I (x - a)^I / I!` as an expression.
    pub fn to_polynomial(&self) -> Expr {
        Expr::sum(
            mi_enumerate(self.dim(), self.order)
                .iter()
                .zip(&self.coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(index, &c)| {
                    let monomial = Expr::product(index.exponents().iter().enumerate().map(|(i, &r)| {
                        Expr::pow(Expr::sub(Expr::var(i), Expr::constant(self.base[i])), r)
                    }));
                    Expr::scale(c / index.factorial_f64(), monomial)
                }),
        )
    }

    /// Largest coefficient difference against a jet of the same shape.
    pub fn max_abs_diff(&self, other: &Jet) -> Option<f64> {
        if self.dim() != other.dim() || self.order != other.order {
            return None;
        }
        Some(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

pub fn taylor_eval(jet: &Jet, y: &[f64]) -> Result<f64, JetError> {
    jet.taylor_eval(y)
}

pub fn truncate(jet: &Jet, k: usize) -> Result<Jet, JetError> {
    jet.truncate(k)
}

/// Symbolic partials `D_I e` for every `|I| <= order`, in graded-lex order.
///
/// Each entry is derived from a parent one degree lower, so the whole table
/// costs one differentiation per entry.
pub fn partial_table(e: &Expr, n: usize, order: usize) -> Vec<Expr> {
    let indices = mi_enumerate(n, order);
    let mut table: Vec<Expr> = Vec::with_capacity(indices.len());
    for index in &indices {
        let slot = index.exponents().iter().position(|&r| r > 0);
        let expr = match slot {
            None => e.clone(),
            Some(i) => {
                let parent = index.lowered(i).expect("slot has a positive exponent");
                table[mi_rank(&parent)].differentiate(i)
            }
        };
        table.push(expr);
    }
    table
}

/// `j^m_a s` for a parameter-free expression.
pub fn prolong(s: &Expr, a: &[f64], m: usize) -> Result<Jet, JetError> {
    if s.has_param() {
        return Err(JetError::HasParameter);
    }
    prolong_with(s, a, m, None)
}

/// `j^m_a s_t` at a fixed parameter value.
///
/// Derivatives come from truncated Taylor arithmetic over the expression
/// DAG; [`prolong_symbolic`] computes the same jet through iterated
/// symbolic differentiation.
pub fn prolong_with(s: &Expr, a: &[f64], m: usize, t: Option<f64>) -> Result<Jet, JetError> {
    check_point(s, a)?;
    let shape = series::Shape::new(a.len(), m);
    let ctx = EvalContext::at(a).with_param(t);
    let normalized = series::SeriesEvaluator::new(&shape, &ctx).normalized(s)?;
    let coeffs = normalized
        .iter()
        .zip(&shape.factorials)
        .map(|(c, f)| c * f)
        .collect();
    Ok(Jet { base: a.to_vec(), order: m, coeffs })
}

/// `j^m_a s_t` by evaluating the symbolic partials from [`partial_table`].
pub fn prolong_symbolic(s: &Expr, a: &[f64], m: usize, t: Option<f64>) -> Result<Jet, JetError> {
    check_point(s, a)?;
    let ctx = EvalContext::at(a).with_param(t);
    let coeffs = partial_table(s, a.len(), m)
        .iter()
        .map(|d| d.eval_in(&ctx))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Jet { base: a.to_vec(), order: m, coeffs })
}

fn check_point(s: &Expr, a: &[f64]) -> Result<(), JetError> {
    if a.is_empty() {
        return Err(JetError::DimensionMismatch { expected: 1, found: 0 });
    }
    match s.max_var() {
        Some(v) if v >= a.len() => Err(JetError::DimensionMismatch { expected: v + 1, found: a.len() }),
        _ => Ok(()),
    }
}

/// Finite family of jets at distinct points, optionally with a distinguished
/// limit point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JetFamilyDoc", into = "JetFamilyDoc")]
pub struct JetFamily {
    order: usize,
    entries: Vec<Jet>,
    limit: Option<Jet>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JetFamilyDoc {
    order: usize,
    entries: Vec<Jet>,
    #[serde(default)]
    limit: Option<Jet>,
}

impl TryFrom<JetFamilyDoc> for JetFamily {
    type Error = JetError;

    fn try_from(doc: JetFamilyDoc) -> Result<Self, Self::Error> {
        let family = JetFamily::new(doc.entries, doc.limit)?;
        if family.order != doc.order && !family.is_empty() {
            return Err(JetError::MixedJets);
        }
        Ok(JetFamily { order: doc.order, ..family })
    }
}

impl From<JetFamily> for JetFamilyDoc {
    fn from(f: JetFamily) -> Self {
        JetFamilyDoc { order: f.order, entries: f.entries, limit: f.limit }
    }
}

impl JetFamily {
    pub fn new(entries: Vec<Jet>, limit: Option<Jet>) -> Result<Self, JetError> {
        let first = entries.first().or(limit.as_ref());
        let (order, dim) = first.map_or((0, 0), |j| (j.order(), j.dim()));
        let all: Vec<&Jet> = entries.iter().chain(limit.as_ref()).collect();
        if all.iter().any(|j| j.order() != order || j.dim() != dim) {
            return Err(JetError::MixedJets);
        }
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[i].base() == all[j].base() {
                    return Err(JetError::DuplicatePoint(i, j));
                }
            }
        }
        Ok(JetFamily { order, entries, limit })
    }

    /// Samples `j^m s` at every point.
    pub fn sample(s: &Expr, points: &[Vec<f64>], m: usize) -> Result<Self, JetError> {
        let entries = points
            .iter()
            .map(|p| prolong(s, p, m))
            .collect::<Result<Vec<_>, _>>()?;
        JetFamily::new(entries, None)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[Jet] {
        &self.entries
    }

    pub fn limit(&self) -> Option<&Jet> {
        self.limit.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.limit.is_none()
    }

    pub fn dim(&self) -> usize {
        self.all_jets().next().map_or(0, Jet::dim)
    }

    /// Entries followed by the limit jet, if any.
    pub fn all_jets(&self) -> impl Iterator<Item = &Jet> {
        self.entries.iter().chain(self.limit.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn jet_of(text: &str, n: usize, a: &[f64], m: usize) -> Jet {
        prolong(&parse(text, n).unwrap(), a, m).unwrap()
    }

    #[test]
    fn prolong_polynomial() {
        assert_eq!(jet_of("x1^2", 1, &[1.0], 2).coeffs(), &[1.0, 2.0, 2.0]);
    }

    #[test]
    fn prolong_flat_is_zero() {
        let j = jet_of("flat(x1^2)", 1, &[0.0], 6);
        assert!(j.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn prolong_exp_with_difference_oracle() {
        let j = jet_of("exp(x1)", 1, &[0.0], 3);
        for &c in j.coeffs() {
            assert!((c - 1.0).abs() < 1e-15);
        }
        // independent check of the first two derivatives
        let f = |x: f64| x.exp();
        let h = 1e-4;
        let d1 = (f(h) - f(-h)) / (2.0 * h);
        let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!((j.coeffs()[1] - d1).abs() < 1e-6);
        assert!((j.coeffs()[2] - d2).abs() < 1e-6);
    }

    #[test]
    fn prolong_rejects_parameter() {
        let e = parse("t*x1", 1).unwrap();
        assert_eq!(prolong(&e, &[0.0], 1), Err(JetError::HasParameter));
        let j = prolong_with(&e, &[0.0], 1, Some(3.0)).unwrap();
        assert_eq!(j.coeffs(), &[0.0, 3.0]);
    }

    #[test]
    fn taylor_eval_cases() {
        let j = jet_of("x1^2", 1, &[1.0], 2);
        assert!((j.taylor_eval(&[3.0]).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(j.taylor_eval(&[1.0]).unwrap(), j.coeffs()[0]);
        let s = jet_of("sin(x1)", 1, &[0.0], 5);
        let v = s.taylor_eval(&[0.3]).unwrap();
        assert!((v - 0.29552025).abs() < 1e-8);
        assert!((v - 0.3f64.sin()).abs() <= 0.3f64.powi(6) / 720.0);
        assert!(j.taylor_eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn truncation() {
        let j = jet_of("exp(x1)", 1, &[0.0], 5);
        assert_eq!(j.truncate(5).unwrap(), j);
        assert_eq!(j.truncate(0).unwrap().coeffs(), &[1.0]);
        assert_eq!(j.truncate(2).unwrap(), jet_of("exp(x1)", 1, &[0.0], 2));
        assert_eq!(
            j.truncate(6),
            Err(JetError::OrderTooLarge { requested: 6, order: 5 })
        );
    }

    #[test]
    fn mixed_partials_in_two_dimensions() {
        let j = jet_of("x1^2*x2 + x2^3", 2, &[1.0, 2.0], 3);
        let c = |v: &[u32]| j.coeff(&MultiIndex::new(v.to_vec()));
        assert_eq!(c(&[0, 0]), 10.0);
        assert_eq!(c(&[1, 0]), 4.0);
        assert_eq!(c(&[0, 1]), 13.0);
        assert_eq!(c(&[1, 1]), 2.0);
        assert_eq!(c(&[0, 2]), 12.0);
        assert_eq!(c(&[2, 1]), 2.0);
        assert_eq!(c(&[0, 3]), 6.0);
    }

    #[test]
    fn series_and_symbolic_routes_agree() {
        let cases = [
            ("exp(x1)*sin(x2) + x1^3/(2 + cos(x2))", vec![0.3, -0.7]),
            ("log(1 + x1^2 + x2^2)*flat(x1 + 0.5)", vec![0.1, 0.4]),
            ("flat(x1)/(flat(x1) + flat(1 - x1))", vec![0.4, 0.0]),
            ("guard(x1^2 + x2^2, x1*flat(x2))", vec![0.2, 0.6]),
            ("(x1 - x2)^5 - 3*x1*x2^2 + flat(x1, x1^2 + 1)", vec![0.5, 0.25]),
        ];
        for (text, a) in cases {
            let e = parse(text, 2).unwrap();
            let fast = prolong(&e, &a, 5).unwrap();
            let slow = prolong_symbolic(&e, &a, 5, None).unwrap();
            for (x, y) in fast.coeffs().iter().zip(slow.coeffs()) {
                assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{text}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn series_errors_match_pointwise_errors() {
        let e = parse("log(x1)", 1).unwrap();
        assert_eq!(prolong(&e, &[-1.0], 2), Err(JetError::Eval(EvalError::LogDomain(-1.0))));
        let d = parse("1/x1", 1).unwrap();
        assert_eq!(prolong(&d, &[0.0], 2), Err(JetError::Eval(EvalError::DivisionByZero)));
    }

    #[test]
    fn family_validation() {
        let a = Jet::zero(vec![0.0], 2);
        let b = Jet::zero(vec![1.0], 2);
        assert!(JetFamily::new(vec![a.clone(), b.clone()], None).is_ok());
        assert_eq!(
            JetFamily::new(vec![a.clone(), a.clone()], None),
            Err(JetError::DuplicatePoint(0, 1))
        );
        assert_eq!(
            JetFamily::new(vec![a, Jet::zero(vec![2.0], 3)], None),
            Err(JetError::MixedJets)
        );
    }

    #[test]
    fn json_schema() {
        let j = jet_of("x1^2", 1, &[1.0], 2);
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(text, r#"{"base":[1.0],"order":2,"coeffs":[1.0,2.0,2.0]}"#);
        let back: Jet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, j);
        assert!(serde_json::from_str::<Jet>(r#"{"base":[1.0],"order":2,"coeffs":[1.0]}"#).is_err());
    }
}
